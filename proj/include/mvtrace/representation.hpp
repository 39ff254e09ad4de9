#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "mvtrace/autoencoder.hpp"
#include "mvtrace/nn.hpp"
#include "mvtrace/pca.hpp"
#include "mvtrace/subject.hpp"

namespace mvtrace {

enum class RepresentationMethod { autoencoder, pca, passthrough, fixed_linear };
enum class ViewSelection { task, rest, both };

std::string to_string(RepresentationMethod m);
std::string to_string(ViewSelection v);
ViewSelection view_selection_from_string(const std::string& name);

// What to fit on the training vertices of a fold.
//   autoencoder  : `arch` + `train` (monomodal, concat-AE or MDAE)
//   pca          : `enc` components over the standardised `views`
//   passthrough  : raw features of `views`, truncated or zero-padded to
//                  `columns` (0 keeps every column); the raw-data baseline
//   fixed_linear : z = concat(x_t, x_r) * projection, nothing is fitted
struct RepresentationSpec {
  RepresentationMethod method = RepresentationMethod::autoencoder;
  ArchitectureConfig arch;
  TrainConfig train;
  int enc = 10;
  ViewSelection views = ViewSelection::both;
  int columns = 0;
  Eigen::MatrixXd projection;

  std::string label() const;
};

// A fitted per-vertex encoder. Immutable; safe to share across threads.
class Representation {
 public:
  virtual ~Representation() = default;
  virtual std::string kind() const = 0;
  virtual int latent_dim() const = 0;
  virtual Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& task, const Eigen::MatrixXd& rest) const = 0;
  // MVNN container (JSON header + networks) describing this model.
  virtual MvnnContainer to_container() const = 0;

  Eigen::MatrixXd encode_subject(const SubjectRecord& subject) const;
};

// `seed` replaces spec.train.seed so callers can derive per-fold seeds.
std::unique_ptr<Representation> fit_representation(const RepresentationSpec& spec, const ViewData& train,
                                                   std::uint64_t seed);

std::unique_ptr<Representation> make_representation(ConcatAutoencoder model);
std::unique_ptr<Representation> make_representation(MdaeModel model);

void save_representation(const std::filesystem::path& path, const Representation& rep);
std::unique_ptr<Representation> load_representation(const std::filesystem::path& path);
std::unique_ptr<Representation> representation_from_container(const MvnnContainer& c);

}  // namespace mvtrace
