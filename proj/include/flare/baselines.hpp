#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flare/data.hpp"
#include "flare/io.hpp"
#include "flare/neural_field.hpp"
#include "flare/parameters.hpp"
#include "flare/trainer.hpp"

namespace flare::baselines {

// ---------------------------------------------------------------------------
// Nearest neighbour in parameter space
// ---------------------------------------------------------------------------

/// Per-sample overfit networks with their normalized parameters.
struct NeighborSet {
  nn::Architecture arch;
  Eigen::MatrixXd networks;           // D x N
  Eigen::MatrixXd normalized_params;  // k x N
  ParameterBounds bounds;
  double output_scale = 1.0;
  std::vector<std::uint32_t> sample_ids;
};

NeighborSet neighbors_from_ensemble(const train::TrainedEnsemble& ens);

/// Column of `normalized` with the largest cosine similarity to `query`;
/// ties go to the lowest index. Throws DegenerateQuery for a zero query.
std::size_t nearest_index(const Eigen::MatrixXd& normalized, const Eigen::VectorXd& query);

/// Field of the nearest training sample, evaluated through its network.
Eigen::MatrixXd nn_predict(const NeighborSet& set, const Eigen::VectorXd& params,
                           const Eigen::MatrixXd& coords);

io::Checkpoint to_checkpoint(const NeighborSet& set);
NeighborSet neighbors_from_checkpoint(const io::Checkpoint& ckpt);

// ---------------------------------------------------------------------------
// Parameter-conditioned networks
// ---------------------------------------------------------------------------

enum class Kind { Concat, FiLM, DeepONet };

std::string to_string(Kind kind);
Kind kind_from_string(const std::string& name);

/// Flat layouts (each block uses the dense row-major-weight-then-bias layout):
///   Concat:   dense stack [3 + 6L + k, hidden..., 3] on [phi(x); q].
///   FiLM:     the field network [3 + 6L, hidden..., 3], then for every
///             hidden layer a gamma generator (h x k, h) and a beta generator
///             (h x k, h). gamma = 1 + G_g q + c_g, beta = G_b q + c_b,
///             applied after the ReLU.
///   DeepONet: branch [k, hidden..., 3 b], trunk [3 + 6L, hidden..., 3 b],
///             then 3 output biases; u_c = <branch_c(q), trunk_c(phi(x))> + bias_c.
struct ConditionalModel {
  Kind kind = Kind::Concat;
  nn::Architecture arch;
  int latent = 64;  // DeepONet basis size per component
  int param_dim = static_cast<int>(kParamCount);
  ParameterBounds bounds;
  double output_scale = 1.0;  // forward passes return network output * output_scale
  Eigen::VectorXd weights;

  std::size_t parameter_count() const;
};

ConditionalModel init_conditional(Kind kind, const nn::Architecture& arch,
                                  const ParameterBounds& bounds, std::uint64_t seed, int latent = 64);

/// Forward pass on normalized parameters q.
Eigen::MatrixXd forward_normalized(const ConditionalModel& model, const Eigen::VectorXd& q,
                                   const Eigen::MatrixXd& coords);
/// Forward pass on raw parameters.
Eigen::MatrixXd predict_conditional(const ConditionalModel& model, const Eigen::VectorXd& params,
                                    const Eigen::MatrixXd& coords);

/// One training sample as seen by a conditional model.
struct ConditionalBatch {
  Eigen::VectorXd q;        // normalized parameters
  Eigen::MatrixXd encoded;  // Fourier-encoded coordinates
  Eigen::MatrixXd targets;  // in network units (divided by the output scale)
};

std::vector<ConditionalBatch> make_batches(const std::vector<data::FieldSample>& samples,
                                           const ParameterBounds& bounds, int octaves,
                                           double output_scale = 1.0);

/// Mean over batches of the per-batch mean squared error, and its gradient.
nn::LossGrad conditional_loss_and_grad(const ConditionalModel& model,
                                       const std::vector<ConditionalBatch>& batches,
                                       int threads = 1);

/// Full-batch Adam from the given weights on pooled samples with the shared
/// schedule and early stop; sets the output scale to train::target_scale.
ConditionalModel fit_conditional(ConditionalModel model, const std::vector<data::FieldSample>& samples,
                                 const train::TrainConfig& cfg, long epochs,
                                 const train::EpochCallback& on_epoch = {});

/// Seeded initialization, then fit_conditional.
ConditionalModel train_conditional(Kind kind, const std::vector<data::FieldSample>& samples,
                                   const ParameterBounds& bounds, const train::TrainConfig& cfg,
                                   long epochs, const train::EpochCallback& on_epoch = {},
                                   int latent = 64);

io::Checkpoint to_checkpoint(const ConditionalModel& model);
ConditionalModel conditional_from_checkpoint(const io::Checkpoint& ckpt);

}  // namespace flare::baselines
