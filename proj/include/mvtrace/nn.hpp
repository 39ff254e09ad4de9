#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mvtrace {

// Wire codes are part of the MVNN file format.
enum class Activation : std::uint32_t { linear = 0, relu = 1, sigmoid = 2 };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Samples are rows: a layer maps a batch x fan_in block to batch x fan_out.
struct DenseLayer {
  Eigen::MatrixXd weights;  // fan_in x fan_out
  Eigen::VectorXd bias;     // fan_out
  Activation activation = Activation::linear;

  Eigen::Index fan_in() const { return weights.rows(); }
  Eigen::Index fan_out() const { return weights.cols(); }
};

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  // Glorot-uniform weights, zero biases. `dims` lists every width from input
  // to output; hidden layers use `hidden`, the last layer uses `output`.
  static Mlp glorot(const std::vector<int>& dims, Activation hidden, Activation output,
                    std::mt19937_64& rng);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  bool empty() const { return layers_.empty(); }
  Eigen::Index input_dim() const { return layers_.front().fan_in(); }
  Eigen::Index output_dim() const { return layers_.back().fan_out(); }
  std::size_t parameter_count() const;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

 private:
  std::vector<DenseLayer> layers_;
};

// Layer outputs retained for backprop. `outputs[0]` is the input batch,
// `outputs[k + 1]` the post-activation output of layer k.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> outputs;
  const Eigen::MatrixXd& result() const { return outputs.back(); }
};

ForwardCache forward_cached(const Mlp& mlp, const Eigen::MatrixXd& x);

struct LayerGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};
using Gradients = std::vector<LayerGradient>;

Gradients zero_gradients(const Mlp& mlp);

struct BackwardResult {
  Gradients grads;
  Eigen::MatrixXd input_grad;  // dL/d(input), batch x fan_in
};

// Reverse pass given dL/d(output) for the batch in `cache`.
BackwardResult backpropagate(const Mlp& mlp, const ForwardCache& cache,
                             const Eigen::MatrixXd& output_grad);

// Mean over every entry of the squared difference.
double mse_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target);
// d(mse_loss)/d(prediction).
Eigen::MatrixXd mse_gradient(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target);

// Exact gradient of mse_loss(mlp.forward(x), target) w.r.t. every parameter.
Gradients backward(const Mlp& mlp, const Eigen::MatrixXd& x, const Eigen::MatrixXd& target);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t timestep = 0;
  Gradients first_moment;
  Gradients second_moment;

  static AdamState for_model(const Mlp& mlp, double learning_rate = 1e-3);
};

// One bias-corrected Adam update of `mlp` in place.
void adam_step(AdamState& state, Mlp& mlp, const Gradients& grads);

// MVNN serialization. A bare network is written as
//   "MVNN" | u32 version=1 | u32 layer_count | layers...
// and each layer as
//   u32 fan_in | u32 fan_out | u32 activation | f64 weights (row-major) | f64 bias
// Multi-network containers (version 2) prefix a JSON text header:
//   "MVNN" | u32 version=2 | u64 header_len | header bytes | u32 net_count | nets...
// where each net is "u32 layer_count | layers...".
inline constexpr std::uint32_t kMvnnVersionSingle = 1;
inline constexpr std::uint32_t kMvnnVersionContainer = 2;

void write_layers(std::ostream& out, const Mlp& mlp);
Mlp read_layers(std::istream& in);

void write_mlp(std::ostream& out, const Mlp& mlp);
Mlp read_mlp(std::istream& in);
void save_mlp(const std::filesystem::path& path, const Mlp& mlp);
Mlp load_mlp(const std::filesystem::path& path);

struct MvnnContainer {
  std::string header;  // JSON text
  std::vector<Mlp> networks;
};

void write_container(std::ostream& out, const MvnnContainer& c);
MvnnContainer read_container(std::istream& in);

}  // namespace mvtrace
