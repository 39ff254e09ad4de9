#include "mvtrace/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mvtrace/error.hpp"

namespace mvtrace {

using json = nlohmann::json;

namespace {

// Message of a nested error without its own "field: " prefix, for re-raising under a longer path.
std::string detail(const Error& e) {
  std::string m = e.what();
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    const std::string prefix = ce->field() + ": ";
    if (m.rfind(prefix, 0) == 0) m.erase(0, prefix.size());
  }
  return m;
}

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void read(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      out = v->get<double>();
    }
  }
  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void read(const std::string& key, std::vector<int>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(field(key), "expected an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer()) throw ConfigError(field(key), "expected an array of integers");
        out.push_back(e.get<int>());
      }
    }
  }
  void read(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(field(key), "expected an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(field(key), "expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }
  void read(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    if (find(key) == nullptr) return;
    read(key, s);
    std::filesystem::path p(s);
    out = (p.is_relative() && !base.empty()) ? base / p : p;
  }

  // Converts a string field through `parse`, re-raising failures under this field's name.
  template <typename T, typename Parse>
  void read_enum(const std::string& key, T& out, Parse parse) {
    std::string s;
    if (find(key) == nullptr) return;
    read(key, s);
    try {
      out = parse(s);
    } catch (const Error& e) {
      throw ConfigError(field(key), detail(e));
    }
  }

  void ignore(const std::string& key) { seen_.insert(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RepresentationMethod method_from_string(const std::string& s) {
  if (s == "autoencoder") return RepresentationMethod::autoencoder;
  if (s == "pca") return RepresentationMethod::pca;
  if (s == "passthrough") return RepresentationMethod::passthrough;
  if (s == "linear") return RepresentationMethod::fixed_linear;
  throw ConfigError("method", "unknown representation method '" + s + "'");
}

GroupPenalty penalty_from_string(const std::string& s) {
  if (s == "norm") return GroupPenalty::norm;
  if (s == "squared-norm") return GroupPenalty::squared_norm;
  throw ConfigError("penalty", "unknown group penalty '" + s + "'");
}

std::string to_string(GroupPenalty p) { return p == GroupPenalty::norm ? "norm" : "squared-norm"; }

StepPolicy step_policy_from_string(const std::string& s) {
  if (s == "lipschitz") return StepPolicy::fixed_from_lipschitz;
  if (s == "backtracking") return StepPolicy::backtracking;
  throw ConfigError("step_policy", "unknown step policy '" + s + "'");
}

std::string to_string(StepPolicy p) {
  return p == StepPolicy::fixed_from_lipschitz ? "lipschitz" : "backtracking";
}

void read_representation(const json& j, RepresentationSpec& spec) {
  ObjectReader r(j, "representation");
  r.read_enum("method", spec.method, method_from_string);
  r.read_enum("arch", spec.arch.kind, architecture_from_string);
  r.read("hidden", spec.arch.hidden_dims);
  if (r.find("enc") != nullptr) {
    r.read("enc", spec.enc);
    spec.arch.enc = spec.enc;
  }
  r.read("enc_t", spec.arch.enc_t);
  r.read("enc_r", spec.arch.enc_r);
  r.read_enum("hidden_act", spec.arch.hidden_activation, activation_from_string);
  r.read_enum("output_act", spec.arch.output_activation, activation_from_string);
  r.read("epochs", spec.train.epochs);
  r.read("batch", spec.train.batch);
  r.read("lr", spec.train.learning_rate);
  r.read_enum("views", spec.views, view_selection_from_string);
  r.read("columns", spec.columns);
  if (const json* p = r.find("projection")) {
    if (!p->is_array() || p->empty() || !(*p)[0].is_array()) {
      throw ConfigError("representation.projection", "expected an array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(p->size());
    const auto cols = static_cast<Eigen::Index>((*p)[0].size());
    spec.projection.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const json& row = (*p)[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
        throw ConfigError("representation.projection", "rows must have equal length");
      }
      for (Eigen::Index c = 0; c < cols; ++c) {
        const json& v = row[static_cast<std::size_t>(c)];
        if (!v.is_number()) throw ConfigError("representation.projection", "expected numbers");
        spec.projection(i, c) = v.get<double>();
      }
    }
  }
  r.finish();
}

json representation_json(const RepresentationSpec& spec) {
  json j{{"method", to_string(spec.method)},
         {"arch", to_string(spec.arch.kind)},
         {"hidden", spec.arch.hidden_dims},
         {"enc", spec.method == RepresentationMethod::autoencoder ? spec.arch.enc : spec.enc},
         {"enc_t", spec.arch.enc_t},
         {"enc_r", spec.arch.enc_r},
         {"hidden_act", to_string(spec.arch.hidden_activation)},
         {"output_act", to_string(spec.arch.output_activation)},
         {"epochs", spec.train.epochs},
         {"batch", spec.train.batch},
         {"lr", spec.train.learning_rate},
         {"views", to_string(spec.views)},
         {"columns", spec.columns}};
  if (spec.projection.size() > 0) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < spec.projection.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index c = 0; c < spec.projection.cols(); ++c) row.push_back(spec.projection(i, c));
      rows.push_back(std::move(row));
    }
    j["projection"] = std::move(rows);
  }
  return j;
}

json run_json(const RunConfig& c) {
  const auto& p = c.pipeline;
  json j{{"dataset", c.dataset.generic_string()},
         {"output", c.output.generic_string()},
         {"seed", p.seed},
         {"jobs", p.jobs},
         {"folds", c.folds},
         {"representation", representation_json(p.representation)},
         {"regularization",
          {{"alpha", p.regularization.alpha},
           {"eta", p.regularization.eta},
           {"penalty", to_string(p.regularization.penalty)}}},
         {"fista",
          {{"max_iters", p.fista.max_iters},
           {"rel_tolerance", p.fista.rel_tolerance},
           {"window", p.fista.window},
           {"step_policy", to_string(p.fista.step_policy)},
           {"backtracking_growth", p.fista.backtracking_growth},
           {"power_iterations", p.fista.power_iterations}}},
         {"inner", {{"alpha_grid", p.inner.alpha_grid}, {"eta_grid", p.inner.eta_grid}, {"folds", p.inner.folds}}},
         {"significance", {{"t_crit", c.significance.t_crit}, {"reduction", to_string(c.significance.reduction)}}}};
  if (!c.grid_json.empty()) j["grid"] = json::parse(c.grid_json);
  return j;
}

RunConfig run_from_json(const json& j, const std::filesystem::path& base) {
  RunConfig c;
  auto& p = c.pipeline;
  ObjectReader r(j, "");
  r.read("dataset", c.dataset, base);
  r.read("output", c.output, base);
  r.read("seed", p.seed);
  r.read("jobs", p.jobs);
  r.read("folds", c.folds);
  if (const json* v = r.find("representation")) read_representation(*v, p.representation);
  if (const json* v = r.find("regularization")) {
    ObjectReader s(*v, "regularization");
    s.read("alpha", p.regularization.alpha);
    s.read("eta", p.regularization.eta);
    s.read_enum("penalty", p.regularization.penalty, penalty_from_string);
    s.finish();
  }
  if (const json* v = r.find("fista")) {
    ObjectReader s(*v, "fista");
    s.read("max_iters", p.fista.max_iters);
    s.read("rel_tolerance", p.fista.rel_tolerance);
    s.read("window", p.fista.window);
    s.read_enum("step_policy", p.fista.step_policy, step_policy_from_string);
    s.read("backtracking_growth", p.fista.backtracking_growth);
    s.read("power_iterations", p.fista.power_iterations);
    s.finish();
  }
  if (const json* v = r.find("inner")) {
    ObjectReader s(*v, "inner");
    s.read("alpha_grid", p.inner.alpha_grid);
    s.read("eta_grid", p.inner.eta_grid);
    s.read("folds", p.inner.folds);
    s.finish();
  }
  if (const json* v = r.find("significance")) {
    ObjectReader s(*v, "significance");
    s.read("t_crit", c.significance.t_crit);
    s.read_enum("reduction", c.significance.reduction, row_reduction_from_string);
    s.finish();
  }
  if (const json* v = r.find("grid")) c.grid_json = v->dump();
  r.ignore("manifest");
  r.finish();
  c.validate();
  return c;
}

json generator_json(const GeneratorConfig& g) {
  return json{{"n_subjects", g.n_subjects},
              {"mesh", g.mesh},
              {"d_task", g.d_task},
              {"d_rest", g.d_rest},
              {"k_true", g.k_true},
              {"n_clusters", g.n_clusters},
              {"cluster_size", g.cluster_size},
              {"noise_sigma", g.noise_sigma},
              {"view_noise", g.view_noise},
              {"smoothing", g.smoothing},
              {"region_smoothing", g.region_smoothing},
              {"beta_scale", g.beta_scale},
              {"rest_signal_weight", g.rest_signal_weight},
              {"task_private_dim", g.task_private_dim},
              {"task_private_scale", g.task_private_scale},
              {"rest_private_dim", g.rest_private_dim},
              {"rest_private_scale", g.rest_private_scale},
              {"standardize_scores", g.standardize_scores},
              {"seed", g.seed}};
}

GeneratorConfig generator_from_json(const json& j) {
  GeneratorConfig g;
  ObjectReader r(j, "generator");
  r.read("n_subjects", g.n_subjects);
  r.read("mesh", g.mesh);
  r.read("d_task", g.d_task);
  r.read("d_rest", g.d_rest);
  r.read("k_true", g.k_true);
  r.read("n_clusters", g.n_clusters);
  r.read("cluster_size", g.cluster_size);
  r.read("noise_sigma", g.noise_sigma);
  r.read("view_noise", g.view_noise);
  r.read("smoothing", g.smoothing);
  r.read("region_smoothing", g.region_smoothing);
  r.read("beta_scale", g.beta_scale);
  r.read("rest_signal_weight", g.rest_signal_weight);
  r.read("task_private_dim", g.task_private_dim);
  r.read("task_private_scale", g.task_private_scale);
  r.read("rest_private_dim", g.rest_private_dim);
  r.read("rest_private_scale", g.rest_private_scale);
  r.read("standardize_scores", g.standardize_scores);
  r.read("seed", g.seed);
  r.finish();
  try {
    g.validate();
    make_mesh_from_spec(g.mesh);
  } catch (const ConfigError& e) {
    throw ConfigError("generator." + e.field(), detail(e));
  }
  return g;
}

}  // namespace

namespace {

// Re-raises a nested struct's ConfigError under its JSON section.
template <typename F>
void within(const std::string& section, F&& check) {
  try {
    check();
  } catch (const ConfigError& e) {
    throw ConfigError(section + "." + e.field(), detail(e));
  }
}

}  // namespace

void RunConfig::validate() const {
  if (folds < 2) throw ConfigError("folds", "must be >= 2");
  if (pipeline.jobs < 1) throw ConfigError("jobs", "must be >= 1");
  const auto& rep = pipeline.representation;
  switch (rep.method) {
    case RepresentationMethod::autoencoder:
      within("representation", [&] { rep.arch.validated(); });
      if (rep.train.epochs < 1) throw ConfigError("representation.epochs", "must be >= 1");
      if (rep.train.batch < 1) throw ConfigError("representation.batch", "must be >= 1");
      if (!(rep.train.learning_rate > 0)) throw ConfigError("representation.lr", "must be > 0");
      break;
    case RepresentationMethod::pca:
      if (rep.enc < 1) throw ConfigError("representation.enc", "must be >= 1");
      break;
    case RepresentationMethod::passthrough:
      if (rep.columns < 0) throw ConfigError("representation.columns", "must be >= 0");
      break;
    case RepresentationMethod::fixed_linear:
      if (rep.projection.size() == 0) throw ConfigError("representation.projection", "required for method linear");
      break;
  }
  within("regularization", [&] { pipeline.regularization.validate(); });
  within("fista", [&] { pipeline.fista.validate(); });
  for (double a : pipeline.inner.alpha_grid)
    if (!(a >= 0)) throw ConfigError("inner.alpha_grid", "values must be >= 0");
  for (double e : pipeline.inner.eta_grid)
    if (!(e >= 0)) throw ConfigError("inner.eta_grid", "values must be >= 0");
  if (pipeline.inner.enabled() && pipeline.inner.folds < 2) throw ConfigError("inner.folds", "must be >= 2");
  if (!std::isfinite(significance.t_crit)) throw ConfigError("significance.t_crit", "must be finite");
}

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  return run_from_json(parse_text(json_text), base_dir);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path), path.parent_path());
}

GenerateConfig parse_generate_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  const json j = parse_text(json_text);
  GenerateConfig c;
  ObjectReader r(j, "");
  r.read("output", c.output, base_dir);
  if (const json* g = r.find("generator")) c.generator = generator_from_json(*g);
  r.ignore("manifest");
  r.finish();
  return c;
}

GenerateConfig load_generate_config(const std::filesystem::path& path) {
  return parse_generate_config(read_file(path), path.parent_path());
}

std::string to_json_text(const RunConfig& config) { return run_json(config).dump(2); }

std::string to_json_text(const GenerateConfig& config) {
  return json{{"output", config.output.generic_string()}, {"generator", generator_json(config.generator)}}.dump(2);
}

std::string merge_patch(const std::string& json_text, const std::string& patch_text) {
  json base = parse_text(json_text);
  base.merge_patch(parse_text(patch_text));
  return base.dump();
}

std::vector<SweepPoint> expand_grid(const RunConfig& config) {
  if (config.grid_json.empty()) throw ConfigError("grid", "missing");
  const json grid = json::parse(config.grid_json);
  json base = run_json(config);
  base.erase("grid");

  std::vector<std::pair<std::string, json>> patches;
  if (grid.is_object()) {
    ObjectReader r(grid, "grid");
    if (const json* enc = r.find("enc")) {
      if (!enc->is_array()) throw ConfigError("grid.enc", "expected an array of integers");
      for (const auto& v : *enc) {
        if (!v.is_number_integer()) throw ConfigError("grid.enc", "expected an array of integers");
        const int e = v.get<int>();
        patches.emplace_back("enc=" + std::to_string(e),
                             json{{"representation", {{"enc", e}, {"enc_t", 0}, {"enc_r", 0}}}});
      }
    }
    if (const json* split = r.find("enc_split")) {
      if (!split->is_array()) throw ConfigError("grid.enc_split", "expected an array of [enc_t, enc_r] pairs");
      for (const auto& v : *split) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
          throw ConfigError("grid.enc_split", "expected an array of [enc_t, enc_r] pairs");
        }
        const int t = v[0].get<int>(), rr = v[1].get<int>();
        patches.emplace_back("split=" + std::to_string(t) + "-" + std::to_string(rr),
                             json{{"representation", {{"enc", t + rr}, {"enc_t", t}, {"enc_r", rr}}}});
      }
    }
    r.finish();
  } else if (grid.is_array()) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      json patch = grid[i];
      if (!patch.is_object()) throw ConfigError("grid", "entries must be objects");
      std::string name = "point" + std::to_string(i);
      if (auto it = patch.find("name"); it != patch.end()) {
        if (!it->is_string()) throw ConfigError("grid.name", "expected a string");
        name = it->get<std::string>();
        patch.erase("name");
      }
      for (const char* fixed : {"dataset", "output", "grid", "folds", "seed"}) {
        if (patch.contains(fixed)) {
          throw ConfigError(std::string("grid.") + fixed, "cannot vary across grid points");
        }
      }
      patches.emplace_back(std::move(name), std::move(patch));
    }
  } else {
    throw ConfigError("grid", "expected an object or an array of patches");
  }
  if (patches.empty()) throw ConfigError("grid", "grid has no points");

  std::vector<SweepPoint> points;
  for (auto& [name, patch] : patches) {
    json point = base;
    point.merge_patch(patch);
    points.push_back({name, run_from_json(point, {}).pipeline});
  }
  return points;
}

std::string make_manifest(const std::string& command, const std::string& config_json,
                          const std::vector<std::uint64_t>& seeds) {
  json j = parse_text(config_json);
  j["manifest"] = {{"version", kVersion}, {"command", command}, {"fold_seeds", seeds}};
  return j.dump(2);
}

}  // namespace mvtrace
