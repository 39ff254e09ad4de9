#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mvtrace/mesh.hpp"
#include "mvtrace/subject.hpp"
#include "mvtrace/synth.hpp"

namespace mvtrace {

// On-disk dataset layout:
//   mesh.off
//   subjects.csv                subject_id,score
//   task_<id>.mvrl, rest_<id>.mvrl
//   ground_truth/beta_true.mvrl (optional)
//   ground_truth/support.csv    vertex,cluster (optional)
struct LoadedDataset {
  Mesh mesh;
  std::vector<SubjectRecord> subjects;
  std::optional<Eigen::MatrixXd> beta_true;
  std::vector<int> support;
};

void save_dataset(const std::filesystem::path& dir, const Mesh& mesh, const std::vector<SubjectRecord>& subjects,
                  const GroundTruth* truth = nullptr);
LoadedDataset load_dataset(const std::filesystem::path& dir);

}  // namespace mvtrace
