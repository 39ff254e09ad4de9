#include "mvtrace/autoencoder.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "mvtrace/error.hpp"

namespace mvtrace {

std::string to_string(ArchitectureKind k) {
  switch (k) {
    case ArchitectureKind::monomodal_task: return "monomodal-task";
    case ArchitectureKind::monomodal_rest: return "monomodal-rest";
    case ArchitectureKind::concat_ae: return "concat-ae";
    case ArchitectureKind::mdae: return "mdae";
  }
  return "unknown";
}

ArchitectureKind architecture_from_string(const std::string& name) {
  if (name == "monomodal-task") return ArchitectureKind::monomodal_task;
  if (name == "monomodal-rest") return ArchitectureKind::monomodal_rest;
  if (name == "concat-ae") return ArchitectureKind::concat_ae;
  if (name == "mdae") return ArchitectureKind::mdae;
  throw ConfigError("arch", "unknown architecture '" + name + "'");
}

std::vector<int> ArchitectureConfig::resolved_hidden() const {
  if (!hidden_dims.empty()) return hidden_dims;
  if (kind == ArchitectureKind::concat_ae) return {200, 130};
  return {140, 120};
}

ArchitectureConfig ArchitectureConfig::validated() const {
  ArchitectureConfig c = *this;
  if (c.enc < 2 || c.enc > 100) throw ConfigError("enc", "encoding dimension must lie in [2, 100]");
  for (int h : c.resolved_hidden()) {
    if (h <= 0) throw ConfigError("hidden", "hidden widths must be positive");
  }
  if (c.hidden_activation == Activation::sigmoid) {
    throw ConfigError("hidden_act", "hidden activation must be linear or relu");
  }
  if (c.output_activation == Activation::relu) {
    throw ConfigError("output_act", "output activation must be linear or sigmoid");
  }
  if (c.kind == ArchitectureKind::mdae) {
    if (c.enc_t == 0 && c.enc_r == 0) {
      c.enc_r = c.enc / 2;
      c.enc_t = c.enc - c.enc_r;
    }
    if (c.enc_t < 1 || c.enc_r < 1 || c.enc_t + c.enc_r != c.enc) {
      throw ConfigError("enc_t", "MDAE split must satisfy enc_t >= 1, enc_r >= 1, enc_t + enc_r = enc");
    }
  } else {
    c.enc_t = 0;
    c.enc_r = 0;
  }
  return c;
}

const std::vector<CatalogEntry>& architecture_catalog() {
  static const std::vector<CatalogEntry> catalog = {
      {"AE (one layer)", "task", {}},
      {"AE (one layer)", "rest", {}},
      {"AE (one layer)", "concat", {}},
      {"MDAE/AE (two layers)", "task", {120}},
      {"MDAE/AE (two layers)", "task", {130}},
      {"MDAE/AE (two layers)", "rest", {120}},
      {"MDAE/AE (two layers)", "rest", {130}},
      {"MDAE/AE (two layers)", "concat", {150}},
      {"MDAE/AE (two layers)", "concat", {200}},
      {"MDAE/AE (three layers)", "task", {140, 120}},
      {"MDAE/AE (three layers)", "task", {140, 130}},
      {"MDAE/AE (three layers)", "rest", {140, 120}},
      {"MDAE/AE (three layers)", "rest", {140, 130}},
      {"MDAE/AE (three layers)", "concat", {250, 150}},
      {"MDAE/AE (three layers)", "concat", {200, 130}},
  };
  return catalog;
}

std::vector<int> catalog_layer_dims(const CatalogEntry& entry, const ViewSpec& views, int enc) {
  int d = 0;
  if (entry.input == "task") d = views.d_task;
  else if (entry.input == "rest") d = views.d_rest;
  else d = views.d_concat();
  std::vector<int> dims{d};
  dims.insert(dims.end(), entry.hidden.begin(), entry.hidden.end());
  dims.push_back(enc);
  dims.insert(dims.end(), entry.hidden.rbegin(), entry.hidden.rend());
  dims.push_back(d);
  return dims;
}

FeatureScaler FeatureScaler::fit(const Eigen::MatrixXd& x, bool minmax_target) {
  if (x.rows() == 0) throw ValidationError("cannot fit feature scaling on empty data");
  FeatureScaler s;
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = (x.col(c).array() - s.mean(c)).square().mean();
    s.scale(c) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  s.minmax_target = minmax_target;
  if (minmax_target) {
    const Eigen::MatrixXd z = s.transform(x);
    s.target_min = z.colwise().minCoeff().transpose();
    s.target_range = z.colwise().maxCoeff().transpose() - s.target_min;
    for (Eigen::Index c = 0; c < s.target_range.size(); ++c) {
      if (s.target_range(c) <= 1e-12) s.target_range(c) = 1.0;
    }
  }
  return s;
}

Eigen::MatrixXd FeatureScaler::transform(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw ShapeError("feature scaler: column count mismatch");
  return ((x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

Eigen::MatrixXd FeatureScaler::target(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd z = transform(x);
  if (!minmax_target) return z;
  return ((z.rowwise() - target_min.transpose()).array().rowwise() / target_range.transpose().array()).matrix();
}

namespace {

void check_views(const ViewData& data, const ViewSpec& views) {
  if (data.task.rows() != data.rest.rows()) throw ShapeError("task and rest sample counts differ");
  if (data.task.cols() != views.d_task || data.rest.cols() != views.d_rest) {
    throw ShapeError("view widths do not match the model");
  }
}

Eigen::MatrixXd select_view_input(ArchitectureKind kind, const Eigen::MatrixXd& task,
                                  const Eigen::MatrixXd& rest) {
  switch (kind) {
    case ArchitectureKind::monomodal_task: return task;
    case ArchitectureKind::monomodal_rest: return rest;
    default: {
      if (task.rows() != rest.rows()) throw ShapeError("task and rest sample counts differ");
      Eigen::MatrixXd x(task.rows(), task.cols() + rest.cols());
      x << task, rest;
      return x;
    }
  }
}

std::vector<int> encoder_dims(int input, const std::vector<int>& hidden, int code) {
  std::vector<int> dims{input};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(code);
  return dims;
}

std::vector<int> decoder_dims(int code, const std::vector<int>& hidden, int output) {
  std::vector<int> dims{code};
  dims.insert(dims.end(), hidden.rbegin(), hidden.rend());
  dims.push_back(output);
  return dims;
}

void check_train(const TrainConfig& t) {
  if (t.epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (t.batch < 1) throw ConfigError("batch", "must be >= 1");
  if (!(t.learning_rate > 0)) throw ConfigError("lr", "must be > 0");
}

// Shuffled mini-batch epochs. `step` trains on one batch of row indices and
// returns its loss; the epoch loss is the sample-weighted mean.
std::vector<double> run_epochs(Eigen::Index samples, const TrainConfig& train, std::mt19937_64& rng,
                               const std::function<double(const std::vector<Eigen::Index>&)>& step) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(samples));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(train.epochs));
  const std::size_t batch = static_cast<std::size_t>(train.batch);
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(stop));
      total += step(idx) * static_cast<double>(idx.size());
    }
    history.push_back(total / static_cast<double>(samples));
    if (epoch == 0 || (epoch + 1) % 50 == 0) {
      spdlog::debug("epoch {:4d} loss {:.6g}", epoch + 1, history.back());
    }
  }
  return history;
}

}  // namespace

ConcatAutoencoder::ConcatAutoencoder(ArchitectureConfig config, ViewSpec views, FeatureScaler scaler,
                                     Mlp encoder, Mlp decoder)
    : config_(std::move(config)),
      views_(views),
      scaler_(std::move(scaler)),
      encoder_(std::move(encoder)),
      decoder_(std::move(decoder)) {
  if (config_.kind == ArchitectureKind::mdae) throw ConfigError("arch", "MDAE is not a single-stack autoencoder");
  if (encoder_.output_dim() != config_.enc || decoder_.input_dim() != config_.enc) {
    throw ShapeError("autoencoder bottleneck width does not match enc");
  }
}

Eigen::MatrixXd ConcatAutoencoder::select_input(const Eigen::MatrixXd& task, const Eigen::MatrixXd& rest) const {
  return select_view_input(config_.kind, task, rest);
}

Eigen::MatrixXd ConcatAutoencoder::encode_rows(const Eigen::MatrixXd& task, const Eigen::MatrixXd& rest) const {
  return encoder_.forward(scaler_.transform(select_input(task, rest)));
}

double ConcatAutoencoder::reconstruction_mse(const ViewData& data) const {
  const Eigen::MatrixXd x = select_input(data.task, data.rest);
  const Eigen::MatrixXd recon = decoder_.forward(encoder_.forward(scaler_.transform(x)));
  return mse_loss(recon, scaler_.target(x));
}

MdaeModel::MdaeModel(ArchitectureConfig config, ViewSpec views, FeatureScaler scaler_t, FeatureScaler scaler_r,
                     Mlp encoder_t, Mlp encoder_r, Mlp decoder_t, Mlp decoder_r)
    : config_(std::move(config)),
      views_(views),
      scaler_t_(std::move(scaler_t)),
      scaler_r_(std::move(scaler_r)),
      encoder_t_(std::move(encoder_t)),
      encoder_r_(std::move(encoder_r)),
      decoder_t_(std::move(decoder_t)),
      decoder_r_(std::move(decoder_r)) {
  if (encoder_t_.output_dim() != config_.enc_t || encoder_r_.output_dim() != config_.enc_r) {
    throw ShapeError("MDAE encoder widths do not match enc_split");
  }
  if (decoder_t_.input_dim() != config_.enc || decoder_r_.input_dim() != config_.enc) {
    throw ShapeError("MDAE decoders must read the full concatenated code");
  }
}

Eigen::MatrixXd MdaeModel::encode_rows(const Eigen::MatrixXd& task, const Eigen::MatrixXd& rest) const {
  if (task.rows() != rest.rows()) throw ShapeError("task and rest sample counts differ");
  Eigen::MatrixXd z(task.rows(), config_.enc);
  z << encoder_t_.forward(scaler_t_.transform(task)), encoder_r_.forward(scaler_r_.transform(rest));
  return z;
}

std::pair<double, double> MdaeModel::view_losses(const ViewData& data) const {
  check_views(data, views_);
  const Eigen::MatrixXd z = encode_rows(data.task, data.rest);
  return {mse_loss(decoder_t_.forward(z), scaler_t_.target(data.task)),
          mse_loss(decoder_r_.forward(z), scaler_r_.target(data.rest))};
}

ConcatAutoencoder train_concat_ae(const ViewData& data, const ArchitectureConfig& config_in,
                                  const TrainConfig& train) {
  const ArchitectureConfig config = config_in.validated();
  if (config.kind == ArchitectureKind::mdae) throw ConfigError("arch", "use train_mdae for the MDAE");
  check_train(train);
  if (data.samples() == 0) throw ValidationError("no training samples");
  const ViewSpec views{static_cast<int>(data.task.cols()), static_cast<int>(data.rest.cols())};
  const Eigen::MatrixXd raw = select_view_input(config.kind, data.task, data.rest);
  if (raw.cols() == 0) throw ShapeError("selected view has no features");
  const int input_dim = static_cast<int>(raw.cols());

  const bool sigmoid_out = config.output_activation == Activation::sigmoid;
  const std::vector<int> hidden = config.resolved_hidden();
  std::mt19937_64 rng(train.seed);
  Mlp encoder = Mlp::glorot(encoder_dims(input_dim, hidden, config.enc), config.hidden_activation,
                            config.hidden_activation, rng);
  Mlp decoder = Mlp::glorot(decoder_dims(config.enc, hidden, input_dim), config.hidden_activation,
                            config.output_activation, rng);
  FeatureScaler scaler = FeatureScaler::fit(raw, sigmoid_out);
  const Eigen::MatrixXd inputs = scaler.transform(raw);
  const Eigen::MatrixXd targets = scaler.target(raw);

  AdamState adam_e = AdamState::for_model(encoder, train.learning_rate);
  AdamState adam_d = AdamState::for_model(decoder, train.learning_rate);

  auto step = [&](const std::vector<Eigen::Index>& idx) {
    const Eigen::MatrixXd xb = inputs(idx, Eigen::all);
    const Eigen::MatrixXd tb = targets(idx, Eigen::all);
    const ForwardCache ce = forward_cached(encoder, xb);
    const ForwardCache cd = forward_cached(decoder, ce.result());
    const double loss = mse_loss(cd.result(), tb);
    const BackwardResult bd = backpropagate(decoder, cd, mse_gradient(cd.result(), tb));
    const BackwardResult be = backpropagate(encoder, ce, bd.input_grad);
    adam_step(adam_d, decoder, bd.grads);
    adam_step(adam_e, encoder, be.grads);
    return loss;
  };
  std::vector<double> history = run_epochs(inputs.rows(), train, rng, step);

  ConcatAutoencoder model(config, views, std::move(scaler), std::move(encoder), std::move(decoder));
  model.loss_history = std::move(history);
  return model;
}

MdaeModel train_mdae(const ViewData& data, const ArchitectureConfig& config_in, const TrainConfig& train) {
  const ArchitectureConfig config = config_in.validated();
  if (config.kind != ArchitectureKind::mdae) throw ConfigError("arch", "train_mdae requires kind mdae");
  check_train(train);
  if (data.samples() == 0) throw ValidationError("no training samples");
  if (data.task.rows() != data.rest.rows()) throw ShapeError("task and rest sample counts differ");
  const ViewSpec views{static_cast<int>(data.task.cols()), static_cast<int>(data.rest.cols())};
  if (views.d_task <= 0 || views.d_rest <= 0) throw ShapeError("MDAE needs both views");

  const bool sigmoid_out = config.output_activation == Activation::sigmoid;
  const std::vector<int> hidden = config.resolved_hidden();
  const Activation ha = config.hidden_activation;

  std::mt19937_64 rng(train.seed);
  Mlp enc_t = Mlp::glorot(encoder_dims(views.d_task, hidden, config.enc_t), ha, ha, rng);
  Mlp enc_r = Mlp::glorot(encoder_dims(views.d_rest, hidden, config.enc_r), ha, ha, rng);
  Mlp dec_t = Mlp::glorot(decoder_dims(config.enc, hidden, views.d_task), ha, config.output_activation, rng);
  Mlp dec_r = Mlp::glorot(decoder_dims(config.enc, hidden, views.d_rest), ha, config.output_activation, rng);

  FeatureScaler sc_t = FeatureScaler::fit(data.task, sigmoid_out);
  FeatureScaler sc_r = FeatureScaler::fit(data.rest, sigmoid_out);
  const Eigen::MatrixXd in_t = sc_t.transform(data.task), tg_t = sc_t.target(data.task);
  const Eigen::MatrixXd in_r = sc_r.transform(data.rest), tg_r = sc_r.target(data.rest);

  AdamState a_et = AdamState::for_model(enc_t, train.learning_rate);
  AdamState a_er = AdamState::for_model(enc_r, train.learning_rate);
  AdamState a_dt = AdamState::for_model(dec_t, train.learning_rate);
  AdamState a_dr = AdamState::for_model(dec_r, train.learning_rate);

  double epoch_task = 0.0, epoch_rest = 0.0;
  std::vector<double> task_hist, rest_hist;
  Eigen::Index seen = 0;

  auto step = [&](const std::vector<Eigen::Index>& idx) {
    const Eigen::MatrixXd xt = in_t(idx, Eigen::all), yt = tg_t(idx, Eigen::all);
    const Eigen::MatrixXd xr = in_r(idx, Eigen::all), yr = tg_r(idx, Eigen::all);
    const ForwardCache cet = forward_cached(enc_t, xt);
    const ForwardCache cer = forward_cached(enc_r, xr);
    Eigen::MatrixXd z(xt.rows(), config.enc);
    z << cet.result(), cer.result();
    const ForwardCache cdt = forward_cached(dec_t, z);
    const ForwardCache cdr = forward_cached(dec_r, z);
    const double lt = mse_loss(cdt.result(), yt), lr = mse_loss(cdr.result(), yr);

    const BackwardResult bdt = backpropagate(dec_t, cdt, mse_gradient(cdt.result(), yt));
    const BackwardResult bdr = backpropagate(dec_r, cdr, mse_gradient(cdr.result(), yr));
    const Eigen::MatrixXd gz = bdt.input_grad + bdr.input_grad;
    const BackwardResult bet = backpropagate(enc_t, cet, gz.leftCols(config.enc_t));
    const BackwardResult ber = backpropagate(enc_r, cer, gz.rightCols(config.enc_r));
    adam_step(a_dt, dec_t, bdt.grads);
    adam_step(a_dr, dec_r, bdr.grads);
    adam_step(a_et, enc_t, bet.grads);
    adam_step(a_er, enc_r, ber.grads);

    const double w = static_cast<double>(idx.size());
    epoch_task += lt * w;
    epoch_rest += lr * w;
    seen += static_cast<Eigen::Index>(idx.size());
    if (seen == in_t.rows()) {
      task_hist.push_back(epoch_task / static_cast<double>(seen));
      rest_hist.push_back(epoch_rest / static_cast<double>(seen));
      epoch_task = epoch_rest = 0.0;
      seen = 0;
    }
    return lt + lr;
  };
  std::vector<double> history = run_epochs(in_t.rows(), train, rng, step);

  MdaeModel model(config, views, std::move(sc_t), std::move(sc_r), std::move(enc_t), std::move(enc_r),
                  std::move(dec_t), std::move(dec_r));
  model.loss_history = std::move(history);
  model.task_loss_history = std::move(task_hist);
  model.rest_loss_history = std::move(rest_hist);
  return model;
}

Eigen::VectorXd encode(const ConcatAutoencoder& model, const Eigen::VectorXd& x_t, const Eigen::VectorXd& x_r) {
  return model.encode_rows(x_t.transpose(), x_r.transpose()).row(0).transpose();
}

Eigen::VectorXd encode(const MdaeModel& model, const Eigen::VectorXd& x_t, const Eigen::VectorXd& x_r) {
  return model.encode_rows(x_t.transpose(), x_r.transpose()).row(0).transpose();
}

Eigen::MatrixXd encode_subject(const ConcatAutoencoder& model, const SubjectRecord& subject) {
  if (subject.task.rows() != subject.rest.rows()) {
    throw ShapeError("subject " + subject.id + ": task and rest vertex counts differ");
  }
  return model.encode_rows(subject.task, subject.rest);
}

Eigen::MatrixXd encode_subject(const MdaeModel& model, const SubjectRecord& subject) {
  if (subject.task.rows() != subject.rest.rows()) {
    throw ShapeError("subject " + subject.id + ": task and rest vertex counts differ");
  }
  return model.encode_rows(subject.task, subject.rest);
}

}  // namespace mvtrace
