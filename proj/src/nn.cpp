#include "mvtrace/nn.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mvtrace/error.hpp"
#include "mvtrace/matrix_io.hpp"

namespace mvtrace {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("activation", "unknown activation '" + name + "'");
}

namespace {

void activate(Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::linear: break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::sigmoid: z = (1.0 + (-z.array()).exp()).inverse().matrix(); break;
  }
}

// Multiplies `grad` in place by the activation derivative, expressed through
// the layer's post-activation output.
void apply_derivative(Eigen::MatrixXd& grad, const Eigen::MatrixXd& out, Activation a) {
  switch (a) {
    case Activation::linear: break;
    case Activation::relu: grad.array() *= (out.array() > 0.0).cast<double>(); break;
    case Activation::sigmoid: grad.array() *= out.array() * (1.0 - out.array()); break;
  }
}

void check_input(const Mlp& mlp, const Eigen::MatrixXd& x) {
  if (mlp.empty()) throw ShapeError("network has no layers");
  if (x.cols() != mlp.input_dim()) {
    throw ShapeError("network expects " + std::to_string(mlp.input_dim()) + " input columns, got " +
                     std::to_string(x.cols()));
  }
}

}  // namespace

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("network must have at least one layer");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const DenseLayer& l = layers_[k];
    if (l.bias.size() != l.fan_out()) throw ShapeError("layer " + std::to_string(k) + ": bias size mismatch");
    if (k > 0 && layers_[k - 1].fan_out() != l.fan_in()) {
      throw ShapeError("layer " + std::to_string(k) + ": fan_in does not match previous fan_out");
    }
  }
}

Mlp Mlp::glorot(const std::vector<int>& dims, Activation hidden, Activation output,
                std::mt19937_64& rng) {
  if (dims.size() < 2) throw ShapeError("network needs at least input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const int in = dims[k], out = dims[k + 1];
    if (in <= 0 || out <= 0) throw ShapeError("layer widths must be positive");
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer l;
    l.weights.resize(in, out);
    for (int c = 0; c < out; ++c)
      for (int r = 0; r < in; ++r) l.weights(r, c) = dist(rng);
    l.bias = Eigen::VectorXd::Zero(out);
    l.activation = (k + 2 == dims.size()) ? output : hidden;
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  check_input(*this, x);
  Eigen::MatrixXd a = x;
  for (const DenseLayer& l : layers_) {
    Eigen::MatrixXd z = a * l.weights;
    z.rowwise() += l.bias.transpose();
    activate(z, l.activation);
    a = std::move(z);
  }
  return a;
}

ForwardCache forward_cached(const Mlp& mlp, const Eigen::MatrixXd& x) {
  check_input(mlp, x);
  ForwardCache cache;
  cache.outputs.reserve(mlp.layers().size() + 1);
  cache.outputs.push_back(x);
  for (const DenseLayer& l : mlp.layers()) {
    Eigen::MatrixXd z = cache.outputs.back() * l.weights;
    z.rowwise() += l.bias.transpose();
    activate(z, l.activation);
    cache.outputs.push_back(std::move(z));
  }
  return cache;
}

Gradients zero_gradients(const Mlp& mlp) {
  Gradients g;
  g.reserve(mlp.layers().size());
  for (const DenseLayer& l : mlp.layers()) {
    g.push_back({Eigen::MatrixXd::Zero(l.fan_in(), l.fan_out()), Eigen::VectorXd::Zero(l.fan_out())});
  }
  return g;
}

BackwardResult backpropagate(const Mlp& mlp, const ForwardCache& cache,
                             const Eigen::MatrixXd& output_grad) {
  const auto& layers = mlp.layers();
  if (cache.outputs.size() != layers.size() + 1) throw ShapeError("forward cache does not match network");
  if (output_grad.rows() != cache.result().rows() || output_grad.cols() != cache.result().cols()) {
    throw ShapeError("output gradient shape mismatch");
  }
  BackwardResult res;
  res.grads.resize(layers.size());
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t k = layers.size(); k-- > 0;) {
    apply_derivative(delta, cache.outputs[k + 1], layers[k].activation);
    res.grads[k].weights = cache.outputs[k].transpose() * delta;
    res.grads[k].bias = delta.colwise().sum().transpose();
    delta = delta * layers[k].weights.transpose();
  }
  res.input_grad = std::move(delta);
  return res;
}

double mse_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    throw ShapeError("mse_loss: prediction and target shapes differ");
  }
  if (prediction.size() == 0) return 0.0;
  return (prediction - target).squaredNorm() / static_cast<double>(prediction.size());
}

Eigen::MatrixXd mse_gradient(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    throw ShapeError("mse_gradient: prediction and target shapes differ");
  }
  return (2.0 / static_cast<double>(prediction.size())) * (prediction - target);
}

Gradients backward(const Mlp& mlp, const Eigen::MatrixXd& x, const Eigen::MatrixXd& target) {
  const ForwardCache cache = forward_cached(mlp, x);
  return backpropagate(mlp, cache, mse_gradient(cache.result(), target)).grads;
}

AdamState AdamState::for_model(const Mlp& mlp, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.first_moment = zero_gradients(mlp);
  s.second_moment = zero_gradients(mlp);
  return s;
}

void adam_step(AdamState& state, Mlp& mlp, const Gradients& grads) {
  auto& layers = mlp.layers();
  if (grads.size() != layers.size() || state.first_moment.size() != layers.size()) {
    throw ShapeError("adam_step: layer count mismatch");
  }
  ++state.timestep;
  const double t = static_cast<double>(state.timestep);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    if (param.rows() != g.rows() || param.cols() != g.cols()) throw ShapeError("adam_step: gradient shape mismatch");
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseAbs2();
    param.array() -= state.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  };
  for (std::size_t k = 0; k < layers.size(); ++k) {
    update(layers[k].weights, state.first_moment[k].weights, state.second_moment[k].weights, grads[k].weights);
    update(layers[k].bias, state.first_moment[k].bias, state.second_moment[k].bias, grads[k].bias);
  }
}

void write_layers(std::ostream& out, const Mlp& mlp) {
  binio::put_u32(out, static_cast<std::uint32_t>(mlp.layers().size()));
  for (const DenseLayer& l : mlp.layers()) {
    binio::put_u32(out, static_cast<std::uint32_t>(l.fan_in()));
    binio::put_u32(out, static_cast<std::uint32_t>(l.fan_out()));
    binio::put_u32(out, static_cast<std::uint32_t>(l.activation));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) binio::put_f64(out, l.weights(r, c));
    for (Eigen::Index c = 0; c < l.bias.size(); ++c) binio::put_f64(out, l.bias(c));
  }
}

Mlp read_layers(std::istream& in) {
  const std::uint32_t count = binio::get_u32(in);
  if (count == 0) throw ParseError("MVNN network with zero layers");
  std::vector<DenseLayer> layers;
  layers.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t fan_in = binio::get_u32(in), fan_out = binio::get_u32(in);
    const std::uint32_t code = binio::get_u32(in);
    if (code > 2) throw ParseError("unknown activation code " + std::to_string(code));
    DenseLayer l;
    l.activation = static_cast<Activation>(code);
    l.weights.resize(fan_in, fan_out);
    for (std::uint32_t r = 0; r < fan_in; ++r)
      for (std::uint32_t c = 0; c < fan_out; ++c) l.weights(r, c) = binio::get_f64(in);
    l.bias.resize(fan_out);
    for (std::uint32_t c = 0; c < fan_out; ++c) l.bias(c) = binio::get_f64(in);
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

void write_mlp(std::ostream& out, const Mlp& mlp) {
  out.write("MVNN", 4);
  binio::put_u32(out, kMvnnVersionSingle);
  write_layers(out, mlp);
}

Mlp read_mlp(std::istream& in) {
  binio::expect_magic(in, "MVNN");
  const std::uint32_t version = binio::get_u32(in);
  if (version != kMvnnVersionSingle) throw ParseError("expected a single-network MVNN file");
  return read_layers(in);
}

void save_mlp(const std::filesystem::path& path, const Mlp& mlp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_mlp(out, mlp);
}

Mlp load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return read_mlp(in);
}

void write_container(std::ostream& out, const MvnnContainer& c) {
  out.write("MVNN", 4);
  binio::put_u32(out, kMvnnVersionContainer);
  binio::put_u64(out, c.header.size());
  out.write(c.header.data(), static_cast<std::streamsize>(c.header.size()));
  binio::put_u32(out, static_cast<std::uint32_t>(c.networks.size()));
  for (const Mlp& n : c.networks) write_layers(out, n);
}

MvnnContainer read_container(std::istream& in) {
  binio::expect_magic(in, "MVNN");
  const std::uint32_t version = binio::get_u32(in);
  MvnnContainer c;
  if (version == kMvnnVersionSingle) {
    c.networks.push_back(read_layers(in));
    return c;
  }
  if (version != kMvnnVersionContainer) throw ParseError("unsupported MVNN version " + std::to_string(version));
  const std::uint64_t len = binio::get_u64(in);
  if (len > (1ull << 30)) throw ParseError("MVNN header too large");
  c.header.resize(len);
  if (!in.read(c.header.data(), static_cast<std::streamsize>(len))) throw ParseError("truncated MVNN header");
  const std::uint32_t nets = binio::get_u32(in);
  for (std::uint32_t k = 0; k < nets; ++k) c.networks.push_back(read_layers(in));
  return c;
}

}  // namespace mvtrace
