#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "flare/affine.hpp"
#include "flare/data.hpp"
#include "flare/io.hpp"
#include "flare/neural_field.hpp"
#include "flare/optimizer.hpp"
#include "flare/parameters.hpp"

namespace flare::train {

enum class Mode { Flare, Lamp };

struct TrainConfig {
  nn::Architecture arch = nn::desk_architecture();
  double lambda = 0.3;
  long phase1_epochs = 5000;
  long phase2_epochs = 5000;
  opt::OptimizerSettings optimizer;
  Mode mode = Mode::Flare;
  std::uint64_t seed = 0;
  int threads = 1;

  /// LAMP ablation: same settings with the regularizer switched off.
  TrainConfig as_lamp() const;
  /// Throws ConfigError unless lambda >= 0 and (mode == Lamp) == (lambda == 0).
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::json& j);

/// One row of the training log.
struct EpochRecord {
  int phase = 1;
  long epoch = 0;
  double objective = 0.0;
  double regularization = 0.0;  // sum_i ||W a_i - w_i||^2 (phase 2)
  double lr = 0.0;
};
using EpochCallback = std::function<void(const EpochRecord&)>;

struct FieldFit {
  nn::NetworkWeights weights;
  double final_loss = 0.0;
  long epochs = 0;
};

/// Full-batch Adam fit of one network to one sample, starting from `init`,
/// for at most `epochs` epochs under the configured schedule and early stop.
FieldFit fit_field(const data::FieldSample& sample, const nn::NetworkWeights& init,
                   const TrainConfig& cfg, long epochs, const EpochCallback& on_epoch = {});

/// Phase 1: fresh seeded initialization, then fit_field for phase1_epochs.
FieldFit train_base(const data::FieldSample& sample, const TrainConfig& cfg,
                    const EpochCallback& on_epoch = {});

struct TrainedEnsemble {
  nn::Architecture arch;
  Eigen::MatrixXd W;        // D x N flat weights, one column per sample
  Eigen::MatrixXd P;        // k x N raw parameters
  ParameterBounds bounds;
  Eigen::MatrixXd alphas;   // N x N, column i = training coefficients of sample i
  Eigen::VectorXd final_losses;
  std::vector<std::uint32_t> sample_ids;
  std::size_t base_index = 0;
  long epochs_run = 0;
  double final_objective = 0.0;
  double output_scale = 1.0;  // networks predict targets / output_scale
  TrainConfig config;

  std::size_t size() const { return static_cast<std::size_t>(W.cols()); }
  nn::NetworkWeights network(std::size_t j) const;
  Eigen::MatrixXd normalized_params() const { return bounds.normalize(P); }
};

/// Index of the Phase-1 sample: first entry of a seeded shuffle of 0..n-1.
std::size_t select_base_index(std::size_t n, std::uint64_t seed);

/// Training coefficients for every sample from min-max normalized parameters.
Eigen::MatrixXd compute_alphas(const Eigen::MatrixXd& P, const ParameterBounds& bounds);

struct RegularizationTerm {
  double value = 0.0;     // sum_i ||W a_i - w_i||^2
  Eigen::MatrixXd grad;   // d(lambda * value)/dW
};

/// lambda * sum_i ||W a_i - w_i||^2 and its gradient with respect to every
/// column, 2 lambda (W (A - I)) (A - I)^T.
RegularizationTerm regularization(const Eigen::MatrixXd& W, const Eigen::MatrixXd& alphas,
                                  double lambda);

/// Phase 2: every column starts at `base`, then all columns are optimized
/// jointly on sum_i L_rec(i) + lambda * L_reg(i) with one Adam state.
TrainedEnsemble train_joint(const std::vector<data::FieldSample>& samples,
                            const ParameterBounds& bounds, const nn::NetworkWeights& base,
                            const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Root mean square of every target entry (1 if all are zero).
double target_scale(const std::vector<data::FieldSample>& samples);

/// Copies of `samples` with targets divided by `scale`.
std::vector<data::FieldSample> scale_targets(const std::vector<data::FieldSample>& samples, double scale);

/// Both phases on targets divided by target_scale(samples): base fit on the
/// seeded base sample, then train_joint. Losses in the result are in those
/// network units; predictions are rescaled.
TrainedEnsemble train_ensemble(const std::vector<data::FieldSample>& samples,
                               const ParameterBounds& bounds, const TrainConfig& cfg,
                               const EpochCallback& on_epoch = {});

struct Prediction {
  affine::AffineCoefficients coefficients;
  nn::NetworkWeights weights;
};

/// Weights for raw parameters p: inference coefficients on normalized
/// parameters, then W alpha.
Prediction predict_weights(const TrainedEnsemble& ens, const Eigen::VectorXd& params);
Eigen::MatrixXd predict_field(const TrainedEnsemble& ens, const Eigen::VectorXd& params,
                              const Eigen::MatrixXd& coords);

io::Checkpoint to_checkpoint(const TrainedEnsemble& ens);
TrainedEnsemble ensemble_from_checkpoint(const io::Checkpoint& ckpt);

}  // namespace flare::train
