#include "mvtrace/dataset_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "mvtrace/error.hpp"
#include "mvtrace/matrix_io.hpp"

namespace mvtrace {

namespace fs = std::filesystem;

void save_dataset(const fs::path& dir, const Mesh& mesh, const std::vector<SubjectRecord>& subjects,
                  const GroundTruth* truth) {
  validate_subjects(subjects);
  fs::create_directories(dir);
  save_mesh(dir / "mesh.off", mesh);
  std::ofstream csv(dir / "subjects.csv");
  if (!csv) throw IoError("cannot write " + (dir / "subjects.csv").string());
  csv << "subject_id,score\n" << std::setprecision(17);
  for (const auto& s : subjects) {
    if (s.id.empty() || s.id.find_first_of(",/\\\n") != std::string::npos) {
      throw ValidationError("subject id '" + s.id + "' is not usable as a file name");
    }
    csv << s.id << ',' << s.score << '\n';
    write_mvrl(dir / ("task_" + s.id + ".mvrl"), s.task);
    write_mvrl(dir / ("rest_" + s.id + ".mvrl"), s.rest);
  }
  if (truth != nullptr) {
    const fs::path gt = dir / "ground_truth";
    fs::create_directories(gt);
    write_mvrl(gt / "beta_true.mvrl", truth->beta_true);
    std::ofstream sup(gt / "support.csv");
    sup << "vertex,cluster\n";
    for (std::size_t i = 0; i < truth->support.size(); ++i) {
      sup << truth->support[i] << ',' << truth->cluster_of[i] << '\n';
    }
  }
}

LoadedDataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  LoadedDataset out{load_mesh(dir / "mesh.off"), {}, std::nullopt, {}};

  std::ifstream csv(dir / "subjects.csv");
  if (!csv) throw IoError("missing subjects.csv in " + dir.string());
  std::string line;
  std::getline(csv, line);
  if (line.rfind("subject_id,score", 0) != 0) throw ParseError("subjects.csv: unexpected header");
  while (std::getline(csv, line)) {
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("subjects.csv: malformed line '" + line + "'");
    SubjectRecord s;
    s.id = line.substr(0, comma);
    try {
      s.score = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ParseError("subjects.csv: bad score for subject " + s.id);
    }
    s.task = read_mvrl(dir / ("task_" + s.id + ".mvrl"));
    s.rest = read_mvrl(dir / ("rest_" + s.id + ".mvrl"));
    out.subjects.push_back(std::move(s));
  }
  validate_subjects(out.subjects);
  if (out.subjects.front().vertex_count() != out.mesh.vertex_count()) {
    throw ShapeError("subject vertex count does not match mesh.off");
  }

  const fs::path gt = dir / "ground_truth";
  if (fs::exists(gt / "beta_true.mvrl")) out.beta_true = read_mvrl(gt / "beta_true.mvrl");
  if (std::ifstream sup(gt / "support.csv"); sup) {
    std::getline(sup, line);
    while (std::getline(sup, line)) {
      if (line.empty()) continue;
      out.support.push_back(std::stoi(line.substr(0, line.find(','))));
    }
  }
  return out;
}

}  // namespace mvtrace
