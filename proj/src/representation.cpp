#include "mvtrace/representation.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mvtrace/error.hpp"

namespace mvtrace {

using nlohmann::json;

std::string to_string(RepresentationMethod m) {
  switch (m) {
    case RepresentationMethod::autoencoder: return "autoencoder";
    case RepresentationMethod::pca: return "pca";
    case RepresentationMethod::passthrough: return "passthrough";
    case RepresentationMethod::fixed_linear: return "linear";
  }
  return "unknown";
}

std::string to_string(ViewSelection v) {
  switch (v) {
    case ViewSelection::task: return "task";
    case ViewSelection::rest: return "rest";
    case ViewSelection::both: return "both";
  }
  return "unknown";
}

ViewSelection view_selection_from_string(const std::string& name) {
  if (name == "task") return ViewSelection::task;
  if (name == "rest") return ViewSelection::rest;
  if (name == "both" || name == "concat") return ViewSelection::both;
  throw ConfigError("views", "unknown view selection '" + name + "'");
}

std::string RepresentationSpec::label() const {
  std::ostringstream os;
  switch (method) {
    case RepresentationMethod::autoencoder: {
      const ArchitectureConfig a = arch.validated();
      os << to_string(a.kind) << '(' << to_string(a.hidden_activation) << ',' << to_string(a.output_activation)
         << ")-enc" << a.enc;
      if (a.kind == ArchitectureKind::mdae) os << '-' << a.enc_t << 'x' << a.enc_r;
      break;
    }
    case RepresentationMethod::pca: os << "pca-" << to_string(views) << "-enc" << enc; break;
    case RepresentationMethod::passthrough:
      os << "raw-" << to_string(views);
      if (columns > 0) os << "-" << columns;
      break;
    case RepresentationMethod::fixed_linear: os << "linear-" << projection.cols(); break;
  }
  return os.str();
}

Eigen::MatrixXd Representation::encode_subject(const SubjectRecord& subject) const {
  if (subject.task.rows() != subject.rest.rows()) {
    throw ShapeError("subject " + subject.id + ": task and rest vertex counts differ");
  }
  return encode_rows(subject.task, subject.rest);
}

namespace {

Eigen::MatrixXd select_views(ViewSelection v, const Eigen::MatrixXd& task, const Eigen::MatrixXd& rest) {
  switch (v) {
    case ViewSelection::task: return task;
    case ViewSelection::rest: return rest;
    case ViewSelection::both: break;
  }
  if (task.rows() != rest.rows()) throw ShapeError("task and rest sample counts differ");
  Eigen::MatrixXd x(task.rows(), task.cols() + rest.cols());
  x << task, rest;
  return x;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json scaler_json(const FeatureScaler& s) {
  json j{{"mean", vec_json(s.mean)}, {"scale", vec_json(s.scale)}, {"minmax_target", s.minmax_target}};
  if (s.minmax_target) {
    j["target_min"] = vec_json(s.target_min);
    j["target_range"] = vec_json(s.target_range);
  }
  return j;
}

FeatureScaler json_scaler(const json& j) {
  FeatureScaler s;
  s.mean = json_vec(j.at("mean"));
  s.scale = json_vec(j.at("scale"));
  s.minmax_target = j.at("minmax_target").get<bool>();
  if (s.minmax_target) {
    s.target_min = json_vec(j.at("target_min"));
    s.target_range = json_vec(j.at("target_range"));
  }
  return s;
}

json arch_json(const ArchitectureConfig& a, const ViewSpec& v) {
  return json{{"arch", to_string(a.kind)},
              {"hidden_dims", a.resolved_hidden()},
              {"enc", a.enc},
              {"enc_split", {a.enc_t, a.enc_r}},
              {"hidden_activation", to_string(a.hidden_activation)},
              {"output_activation", to_string(a.output_activation)},
              {"d_task", v.d_task},
              {"d_rest", v.d_rest}};
}

ArchitectureConfig json_arch(const json& j) {
  ArchitectureConfig a;
  a.kind = architecture_from_string(j.at("arch").get<std::string>());
  a.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  a.enc = j.at("enc").get<int>();
  a.enc_t = j.at("enc_split").at(0).get<int>();
  a.enc_r = j.at("enc_split").at(1).get<int>();
  a.hidden_activation = activation_from_string(j.at("hidden_activation").get<std::string>());
  a.output_activation = activation_from_string(j.at("output_activation").get<std::string>());
  return a;
}

class AutoencoderRepresentation final : public Representation {
 public:
  explicit AutoencoderRepresentation(ConcatAutoencoder m) : model_(std::move(m)) {}
  std::string kind() const override { return to_string(model_.config().kind); }
  int latent_dim() const override { return model_.enc(); }
  Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& t, const Eigen::MatrixXd& r) const override {
    return model_.encode_rows(t, r);
  }
  MvnnContainer to_container() const override {
    json h = arch_json(model_.config(), model_.views());
    h["kind"] = kind();
    h["networks"] = {"encoder", "decoder"};
    h["normalization"] = {{"input", scaler_json(model_.scaler())}};
    h["loss_history"] = model_.loss_history;
    return {h.dump(), {model_.encoder(), model_.decoder()}};
  }

 private:
  ConcatAutoencoder model_;
};

class MdaeRepresentation final : public Representation {
 public:
  explicit MdaeRepresentation(MdaeModel m) : model_(std::move(m)) {}
  std::string kind() const override { return "mdae"; }
  int latent_dim() const override { return model_.enc(); }
  Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& t, const Eigen::MatrixXd& r) const override {
    return model_.encode_rows(t, r);
  }
  MvnnContainer to_container() const override {
    json h = arch_json(model_.config(), model_.views());
    h["kind"] = kind();
    h["networks"] = {"encoder_t", "encoder_r", "decoder_t", "decoder_r"};
    h["normalization"] = {{"task", scaler_json(model_.scaler_t())}, {"rest", scaler_json(model_.scaler_r())}};
    h["loss_history"] = model_.loss_history;
    return {h.dump(),
            {model_.encoder_t(), model_.encoder_r(), model_.decoder_t(), model_.decoder_r()}};
  }

 private:
  MdaeModel model_;
};

class PcaRepresentation final : public Representation {
 public:
  PcaRepresentation(ViewSelection views, FeatureScaler scaler, PcaModel pca)
      : views_(views), scaler_(std::move(scaler)), pca_(std::move(pca)) {}
  std::string kind() const override { return "pca"; }
  int latent_dim() const override { return static_cast<int>(pca_.enc()); }
  Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& t, const Eigen::MatrixXd& r) const override {
    return pca_encode_rows(pca_, scaler_.transform(select_views(views_, t, r)));
  }
  MvnnContainer to_container() const override {
    json h{{"kind", "pca"},
           {"views", to_string(views_)},
           {"enc", pca_.enc()},
           {"networks", {"projection"}},
           {"normalization", {{"input", scaler_json(scaler_)}}},
           {"pca_mean", vec_json(pca_.mean)},
           {"explained_variance", vec_json(pca_.explained_variance)}};
    // The projection is affine: z = components (x - mean).
    DenseLayer layer;
    layer.weights = pca_.components.transpose();
    layer.bias = -(pca_.components * pca_.mean);
    layer.activation = Activation::linear;
    return {h.dump(), {Mlp({layer})}};
  }

 private:
  ViewSelection views_;
  FeatureScaler scaler_;
  PcaModel pca_;
};

class PassthroughRepresentation final : public Representation {
 public:
  PassthroughRepresentation(ViewSelection views, int columns) : views_(views), columns_(columns) {}
  std::string kind() const override { return "passthrough"; }
  int latent_dim() const override { return columns_; }
  Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& t, const Eigen::MatrixXd& r) const override {
    const Eigen::MatrixXd x = select_views(views_, t, r);
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(x.rows(), columns_);
    const Eigen::Index keep = std::min<Eigen::Index>(columns_, x.cols());
    z.leftCols(keep) = x.leftCols(keep);
    return z;
  }
  MvnnContainer to_container() const override {
    return {json{{"kind", "passthrough"}, {"views", to_string(views_)}, {"columns", columns_}}.dump(), {}};
  }

 private:
  ViewSelection views_;
  int columns_;
};

class LinearRepresentation final : public Representation {
 public:
  explicit LinearRepresentation(Eigen::MatrixXd projection) : projection_(std::move(projection)) {}
  std::string kind() const override { return "linear"; }
  int latent_dim() const override { return static_cast<int>(projection_.cols()); }
  Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& t, const Eigen::MatrixXd& r) const override {
    const Eigen::MatrixXd x = select_views(ViewSelection::both, t, r);
    if (x.cols() != projection_.rows()) throw ShapeError("linear representation: input width mismatch");
    return x * projection_;
  }
  MvnnContainer to_container() const override {
    DenseLayer layer{projection_, Eigen::VectorXd::Zero(projection_.cols()), Activation::linear};
    return {json{{"kind", "linear"}, {"networks", {"projection"}}}.dump(), {Mlp({layer})}};
  }

 private:
  Eigen::MatrixXd projection_;
};

}  // namespace

std::unique_ptr<Representation> make_representation(ConcatAutoencoder model) {
  return std::make_unique<AutoencoderRepresentation>(std::move(model));
}

std::unique_ptr<Representation> make_representation(MdaeModel model) {
  return std::make_unique<MdaeRepresentation>(std::move(model));
}

std::unique_ptr<Representation> fit_representation(const RepresentationSpec& spec, const ViewData& train,
                                                   std::uint64_t seed) {
  switch (spec.method) {
    case RepresentationMethod::autoencoder: {
      TrainConfig t = spec.train;
      t.seed = seed;
      if (spec.arch.kind == ArchitectureKind::mdae) return make_representation(train_mdae(train, spec.arch, t));
      return make_representation(train_concat_ae(train, spec.arch, t));
    }
    case RepresentationMethod::pca: {
      const Eigen::MatrixXd x = select_views(spec.views, train.task, train.rest);
      FeatureScaler scaler = FeatureScaler::fit(x, false);
      PcaOptions opts;
      opts.seed = seed;
      PcaModel pca = fit_pca(scaler.transform(x), spec.enc, opts);
      return std::make_unique<PcaRepresentation>(spec.views, std::move(scaler), std::move(pca));
    }
    case RepresentationMethod::passthrough: {
      const Eigen::Index width = select_views(spec.views, train.task.topRows(0), train.rest.topRows(0)).cols();
      const int cols = spec.columns > 0 ? spec.columns : static_cast<int>(width);
      if (cols <= 0) throw ConfigError("columns", "passthrough representation has no columns");
      return std::make_unique<PassthroughRepresentation>(spec.views, cols);
    }
    case RepresentationMethod::fixed_linear:
      if (spec.projection.size() == 0) throw ConfigError("projection", "linear representation needs a projection");
      return std::make_unique<LinearRepresentation>(spec.projection);
  }
  throw ConfigError("method", "unknown representation method");
}

std::unique_ptr<Representation> representation_from_container(const MvnnContainer& c) {
  const json h = json::parse(c.header.empty() ? std::string("{}") : c.header);
  const std::string kind = h.value("kind", std::string{});
  auto need = [&](std::size_t n) {
    if (c.networks.size() != n) throw ParseError("MVNN container for '" + kind + "' has wrong network count");
  };
  if (kind == "mdae") {
    need(4);
    const ArchitectureConfig a = json_arch(h);
    const ViewSpec v{h.at("d_task").get<int>(), h.at("d_rest").get<int>()};
    const auto& n = h.at("normalization");
    return make_representation(MdaeModel(a, v, json_scaler(n.at("task")), json_scaler(n.at("rest")),
                                         c.networks[0], c.networks[1], c.networks[2], c.networks[3]));
  }
  if (kind == "concat-ae" || kind == "monomodal-task" || kind == "monomodal-rest") {
    need(2);
    const ArchitectureConfig a = json_arch(h);
    const ViewSpec v{h.at("d_task").get<int>(), h.at("d_rest").get<int>()};
    return make_representation(ConcatAutoencoder(a, v, json_scaler(h.at("normalization").at("input")),
                                                 c.networks[0], c.networks[1]));
  }
  if (kind == "pca") {
    need(1);
    PcaModel p;
    p.mean = json_vec(h.at("pca_mean"));
    p.explained_variance = json_vec(h.at("explained_variance"));
    p.components = c.networks[0].layers().at(0).weights.transpose();
    return std::make_unique<PcaRepresentation>(view_selection_from_string(h.at("views").get<std::string>()),
                                               json_scaler(h.at("normalization").at("input")), std::move(p));
  }
  if (kind == "passthrough") {
    return std::make_unique<PassthroughRepresentation>(
        view_selection_from_string(h.at("views").get<std::string>()), h.at("columns").get<int>());
  }
  if (kind == "linear") {
    need(1);
    return std::make_unique<LinearRepresentation>(c.networks[0].layers().at(0).weights);
  }
  throw ParseError("unknown model kind '" + kind + "' in MVNN header");
}

void save_representation(const std::filesystem::path& path, const Representation& rep) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_container(out, rep.to_container());
}

std::unique_ptr<Representation> load_representation(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return representation_from_container(read_container(in));
}

}  // namespace mvtrace
