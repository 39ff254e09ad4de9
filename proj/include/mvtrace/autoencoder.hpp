#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvtrace/nn.hpp"
#include "mvtrace/subject.hpp"

namespace mvtrace {

struct ViewSpec {
  int d_task = 0;
  int d_rest = 0;
  int d_concat() const { return d_task + d_rest; }
};

enum class ArchitectureKind { monomodal_task, monomodal_rest, concat_ae, mdae };

std::string to_string(ArchitectureKind k);
ArchitectureKind architecture_from_string(const std::string& name);

// Layer layout of an autoencoder. `hidden_dims` lists the encoder widths
// between input and bottleneck; the decoder mirrors them. For the MDAE each
// view gets its own stack with these widths. An empty list selects the
// catalog default for the kind.
struct ArchitectureConfig {
  ArchitectureKind kind = ArchitectureKind::mdae;
  std::vector<int> hidden_dims;
  int enc = 10;
  // MDAE bottleneck split; enc_t + enc_r == enc. Zero means "split evenly".
  int enc_t = 0;
  int enc_r = 0;
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::linear;

  std::vector<int> resolved_hidden() const;
  // Resolves a zero split and checks every invariant.
  ArchitectureConfig validated() const;
};

struct TrainConfig {
  int epochs = 300;
  int batch = 500;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

// One row of the architecture table: widths from input to output layer.
struct CatalogEntry {
  std::string label;       // e.g. "AE/MDAE (three layers)"
  std::string input;       // "task", "rest" or "concat"
  std::vector<int> hidden; // encoder half, bottleneck excluded
};

const std::vector<CatalogEntry>& architecture_catalog();
// Full widths [D, h..., enc, ...h reversed, D] of a catalog row.
std::vector<int> catalog_layer_dims(const CatalogEntry& entry, const ViewSpec& views, int enc);

// Per-feature standardisation fitted on training samples. When the output
// layer is a sigmoid, reconstruction targets are additionally min-max mapped
// to [0, 1] with training statistics.
struct FeatureScaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  bool minmax_target = false;
  Eigen::VectorXd target_min;
  Eigen::VectorXd target_range;

  static FeatureScaler fit(const Eigen::MatrixXd& x, bool minmax_target);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd target(const Eigen::MatrixXd& x) const;
};

// Single-stack autoencoder over the concatenated views (t then r) or over one
// view for the monomodal kinds.
class ConcatAutoencoder {
 public:
  ConcatAutoencoder(ArchitectureConfig config, ViewSpec views, FeatureScaler scaler, Mlp encoder,
                    Mlp decoder);

  const ArchitectureConfig& config() const { return config_; }
  const ViewSpec& views() const { return views_; }
  const FeatureScaler& scaler() const { return scaler_; }
  const Mlp& encoder() const { return encoder_; }
  const Mlp& decoder() const { return decoder_; }
  int enc() const { return config_.enc; }

  // Raw input block the network reads: concat(task, rest), task, or rest.
  Eigen::MatrixXd select_input(const Eigen::MatrixXd& task, const Eigen::MatrixXd& rest) const;
  Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& task, const Eigen::MatrixXd& rest) const;
  // Mean squared reconstruction error in the normalised target space.
  double reconstruction_mse(const ViewData& data) const;

  std::vector<double> loss_history;

 private:
  ArchitectureConfig config_;
  ViewSpec views_;
  FeatureScaler scaler_;
  Mlp encoder_;
  Mlp decoder_;
};

// Multi-view autoencoder: one encoder per view, bottleneck z = [z_t, z_r],
// and two decoders that each read the full z.
class MdaeModel {
 public:
  MdaeModel(ArchitectureConfig config, ViewSpec views, FeatureScaler scaler_t, FeatureScaler scaler_r,
            Mlp encoder_t, Mlp encoder_r, Mlp decoder_t, Mlp decoder_r);

  const ArchitectureConfig& config() const { return config_; }
  const ViewSpec& views() const { return views_; }
  const FeatureScaler& scaler_t() const { return scaler_t_; }
  const FeatureScaler& scaler_r() const { return scaler_r_; }
  const Mlp& encoder_t() const { return encoder_t_; }
  const Mlp& encoder_r() const { return encoder_r_; }
  const Mlp& decoder_t() const { return decoder_t_; }
  const Mlp& decoder_r() const { return decoder_r_; }
  int enc() const { return config_.enc; }

  Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& task, const Eigen::MatrixXd& rest) const;
  // Per-view reconstruction MSE (normalised space) from the shared code.
  std::pair<double, double> view_losses(const ViewData& data) const;

  std::vector<double> loss_history;
  std::vector<double> task_loss_history;
  std::vector<double> rest_loss_history;

 private:
  ArchitectureConfig config_;
  ViewSpec views_;
  FeatureScaler scaler_t_, scaler_r_;
  Mlp encoder_t_, encoder_r_, decoder_t_, decoder_r_;
};

ConcatAutoencoder train_concat_ae(const ViewData& data, const ArchitectureConfig& config,
                                  const TrainConfig& train);
MdaeModel train_mdae(const ViewData& data, const ArchitectureConfig& config, const TrainConfig& train);

Eigen::VectorXd encode(const ConcatAutoencoder& model, const Eigen::VectorXd& x_t, const Eigen::VectorXd& x_r);
Eigen::VectorXd encode(const MdaeModel& model, const Eigen::VectorXd& x_t, const Eigen::VectorXd& x_r);

// Z in R^{m x enc}: row j encodes vertex j of the subject.
Eigen::MatrixXd encode_subject(const ConcatAutoencoder& model, const SubjectRecord& subject);
Eigen::MatrixXd encode_subject(const MdaeModel& model, const SubjectRecord& subject);

}  // namespace mvtrace
