#include "flare/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "flare/error.hpp"
#include "flare/parallel.hpp"
#include "flare/random.hpp"

namespace flare::train {

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

const char* mode_name(Mode m) { return m == Mode::Flare ? "flare" : "lamp"; }

}  // namespace

TrainConfig TrainConfig::as_lamp() const {
  TrainConfig c = *this;
  c.mode = Mode::Lamp;
  c.lambda = 0.0;
  return c;
}

void TrainConfig::validate() const {
  arch.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw Error(ErrorCode::ConfigError, "lambda must be finite and >= 0");
  if (mode == Mode::Lamp && lambda != 0.0)
    throw Error(ErrorCode::ConfigError, "LAMP mode requires lambda = 0");
  if (mode == Mode::Flare && lambda == 0.0)
    throw Error(ErrorCode::ConfigError, "FLARE mode requires lambda > 0 (use LAMP for lambda = 0)");
  if (phase1_epochs < 0 || phase2_epochs < 0)
    throw Error(ErrorCode::ConfigError, "epoch counts must be >= 0");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  const auto& o = cfg.optimizer;
  return {{"mode", mode_name(cfg.mode)},
          {"lambda", cfg.lambda},
          {"octaves", cfg.arch.octaves},
          {"hidden", cfg.arch.hidden},
          {"phase1_epochs", cfg.phase1_epochs},
          {"phase2_epochs", cfg.phase2_epochs},
          {"seed", cfg.seed},
          {"optimizer",
           {{"base_lr", o.base_lr},
            {"min_lr", o.min_lr},
            {"plateau_factor", o.plateau_factor},
            {"plateau_patience", o.plateau_patience},
            {"warmup_epochs", o.warmup_epochs},
            {"early_stop_patience", o.early_stop_patience},
            {"min_delta", o.min_delta}}}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
  try {
    TrainConfig cfg;
    const auto mode = j.at("mode").get<std::string>();
    if (mode != "flare" && mode != "lamp")
      throw Error(ErrorCode::FormatError, "training config: unknown mode '" + mode + "'");
    cfg.mode = mode == "lamp" ? Mode::Lamp : Mode::Flare;
    cfg.lambda = j.at("lambda").get<double>();
    cfg.arch.octaves = j.at("octaves").get<int>();
    cfg.arch.hidden = j.at("hidden").get<std::vector<int>>();
    cfg.phase1_epochs = j.at("phase1_epochs").get<long>();
    cfg.phase2_epochs = j.at("phase2_epochs").get<long>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    const auto& o = j.at("optimizer");
    cfg.optimizer.base_lr = o.at("base_lr").get<double>();
    cfg.optimizer.min_lr = o.at("min_lr").get<double>();
    cfg.optimizer.plateau_factor = o.at("plateau_factor").get<double>();
    cfg.optimizer.plateau_patience = o.at("plateau_patience").get<int>();
    cfg.optimizer.warmup_epochs = o.at("warmup_epochs").get<int>();
    cfg.optimizer.early_stop_patience = o.at("early_stop_patience").get<int>();
    cfg.optimizer.min_delta = o.at("min_delta").get<double>();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("training config: ") + e.what());
  }
}

FieldFit fit_field(const data::FieldSample& sample, const nn::NetworkWeights& init,
                   const TrainConfig& cfg, long epochs, const EpochCallback& on_epoch) {
  init.validate();
  if (sample.coords.rows() == 0) throw Error(ErrorCode::InvalidArgument, "sample has no points");
  const auto widths = init.arch.widths();
  const Eigen::MatrixXd encoded = nn::fourier_encode(sample.coords, init.arch.octaves);

  FieldFit fit{init, 0.0, 0};
  Eigen::VectorXd& w = fit.weights.flat;
  auto adam = opt::AdamState::zeros(w.size());
  auto schedule = cfg.optimizer.make_schedule();
  auto stopper = cfg.optimizer.make_early_stop();
  for (long epoch = 0; epoch < epochs; ++epoch) {
    const nn::LossGrad lg = nn::loss_and_grad_encoded(as_span(w), widths, encoded, sample.targets);
    const double lr = opt::schedule_lr(schedule, epoch, lg.loss);
    if (on_epoch) on_epoch({1, epoch, lg.loss, 0.0, lr});
    if (opt::early_stop(stopper, lg.loss)) break;
    opt::adam_step(w, lg.grad, adam, lr);
    fit.epochs = epoch + 1;
  }
  const Eigen::MatrixXd pred = nn::dense_forward(as_span(w), widths, encoded);
  fit.final_loss = (pred - sample.targets).squaredNorm() / static_cast<double>(encoded.rows());
  if (!std::isfinite(fit.final_loss))
    throw Error(ErrorCode::NonFiniteLoss, "final loss of sample " + std::to_string(sample.id) +
                                              " is not finite");
  return fit;
}

FieldFit train_base(const data::FieldSample& sample, const TrainConfig& cfg,
                    const EpochCallback& on_epoch) {
  cfg.validate();
  const auto init = nn::init_weights(cfg.arch, derive_seed(cfg.seed, "init"));
  return fit_field(sample, init, cfg, cfg.phase1_epochs, on_epoch);
}

nn::NetworkWeights TrainedEnsemble::network(std::size_t j) const {
  return {arch, W.col(static_cast<Eigen::Index>(j))};
}

std::size_t select_base_index(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InsufficientData, "no samples to choose a base from");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "base"));
  rng.shuffle(std::span<std::size_t>(order));
  return order.front();
}

Eigen::MatrixXd compute_alphas(const Eigen::MatrixXd& P, const ParameterBounds& bounds) {
  // A lone sample has no neighbours; the identity makes its term vanish.
  if (P.cols() < 2) return Eigen::MatrixXd::Identity(P.cols(), P.cols());
  return affine::training_coefficient_matrix(bounds.normalize(P));
}

RegularizationTerm regularization(const Eigen::MatrixXd& W, const Eigen::MatrixXd& alphas,
                                  double lambda) {
  const Eigen::Index N = W.cols();
  if (alphas.rows() != N || alphas.cols() != N)
    throw Error(ErrorCode::ShapeMismatch, "coefficient matrix must be N x N");
  Eigen::MatrixXd shift = alphas;
  shift.diagonal().array() -= 1.0;
  const Eigen::MatrixXd residual = W * shift;  // column i: W a_i - w_i
  RegularizationTerm term;
  term.value = residual.squaredNorm();
  term.grad = (2.0 * lambda) * residual * shift.transpose();
  return term;
}

TrainedEnsemble train_joint(const std::vector<data::FieldSample>& samples,
                            const ParameterBounds& bounds, const nn::NetworkWeights& base,
                            const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  base.validate();
  if (!(base.arch == cfg.arch))
    throw Error(ErrorCode::ShapeMismatch, "base network architecture differs from config");
  if (samples.empty()) throw Error(ErrorCode::InsufficientData, "joint training needs samples");
  const auto N = static_cast<Eigen::Index>(samples.size());
  const auto D = base.flat.size();
  const auto widths = cfg.arch.widths();

  TrainedEnsemble ens;
  ens.arch = cfg.arch;
  ens.bounds = bounds;
  ens.config = cfg;
  ens.P.resize(bounds.dim(), N);
  for (Eigen::Index i = 0; i < N; ++i) {
    ens.P.col(i) = samples[static_cast<std::size_t>(i)].params;
    ens.sample_ids.push_back(samples[static_cast<std::size_t>(i)].id);
  }
  ens.alphas = compute_alphas(ens.P, bounds);
  ens.W = base.flat.replicate(1, N);

  std::vector<Eigen::MatrixXd> encoded(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    encoded[i] = nn::fourier_encode(samples[i].coords, cfg.arch.octaves);

  Eigen::VectorXd rec(N);
  Eigen::MatrixXd grad(D, N);
  auto evaluate = [&]() {
    parallel_for(samples.size(), cfg.threads, [&](std::size_t i) {
      const auto col = static_cast<Eigen::Index>(i);
      const Eigen::VectorXd w = ens.W.col(col);
      nn::LossGrad lg = nn::loss_and_grad_encoded(as_span(w), widths, encoded[i], samples[i].targets);
      rec[col] = lg.loss;
      grad.col(col) = lg.grad;
    });
    double reg_value = 0.0;
    if (cfg.lambda != 0.0) {
      RegularizationTerm term = regularization(ens.W, ens.alphas, cfg.lambda);
      grad += term.grad;
      reg_value = term.value;
    }
    return reg_value;
  };

  Eigen::Map<Eigen::VectorXd> flat_w(ens.W.data(), D * N);
  Eigen::Map<const Eigen::VectorXd> flat_g(grad.data(), D * N);
  auto adam = opt::AdamState::zeros(D * N);
  auto schedule = cfg.optimizer.make_schedule();
  auto stopper = cfg.optimizer.make_early_stop();
  for (long epoch = 0; epoch < cfg.phase2_epochs; ++epoch) {
    const double reg_value = evaluate();
    const double objective = rec.sum() + cfg.lambda * reg_value;
    if (!std::isfinite(objective))
      throw Error(ErrorCode::NonFiniteLoss,
                  "joint objective became non-finite at epoch " + std::to_string(epoch));
    const double lr = opt::schedule_lr(schedule, epoch, objective);
    if (on_epoch) on_epoch({2, epoch, objective, reg_value, lr});
    if (opt::early_stop(stopper, objective)) break;
    opt::adam_step(flat_w, flat_g, adam, lr);
    ens.epochs_run = epoch + 1;
  }
  const double reg_value = evaluate();
  ens.final_losses = rec;
  ens.final_objective = rec.sum() + cfg.lambda * reg_value;
  return ens;
}

double target_scale(const std::vector<data::FieldSample>& samples) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : samples) {
    sum += s.targets.squaredNorm();
    count += static_cast<std::size_t>(s.targets.size());
  }
  const double rms = count == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(count));
  return rms > 0.0 && std::isfinite(rms) ? rms : 1.0;
}

std::vector<data::FieldSample> scale_targets(const std::vector<data::FieldSample>& samples, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "target scale must be positive");
  std::vector<data::FieldSample> out = samples;
  for (auto& s : out) s.targets /= scale;
  return out;
}

TrainedEnsemble train_ensemble(const std::vector<data::FieldSample>& samples,
                               const ParameterBounds& bounds, const TrainConfig& cfg,
                               const EpochCallback& on_epoch) {
  cfg.validate();
  const double scale = target_scale(samples);
  const auto scaled = scale_targets(samples, scale);
  const std::size_t base_index = select_base_index(scaled.size(), cfg.seed);
  const FieldFit base = train_base(scaled[base_index], cfg, on_epoch);
  TrainedEnsemble ens = train_joint(scaled, bounds, base.weights, cfg, on_epoch);
  ens.base_index = base_index;
  ens.output_scale = scale;
  return ens;
}

Prediction predict_weights(const TrainedEnsemble& ens, const Eigen::VectorXd& params) {
  Prediction out;
  out.coefficients = affine::solve_inference_coeffs(ens.normalized_params(), ens.bounds.normalize(params));
  out.weights = {ens.arch, affine::mix_weights(ens.W, out.coefficients)};
  return out;
}

Eigen::MatrixXd predict_field(const TrainedEnsemble& ens, const Eigen::VectorXd& params,
                              const Eigen::MatrixXd& coords) {
  return ens.output_scale * nn::forward(predict_weights(ens, params).weights, coords);
}

io::Checkpoint to_checkpoint(const TrainedEnsemble& ens) {
  io::Checkpoint c = io::Checkpoint::for_architecture(ens.arch, ens.W);
  c.meta = {{"kind", mode_name(ens.config.mode)},
            {"config", to_json(ens.config)},
            {"sample_ids", ens.sample_ids},
            {"params", io::to_json(ens.P)},
            {"bounds", {{"lo", io::to_json(ens.bounds.lo)}, {"hi", io::to_json(ens.bounds.hi)}}},
            {"alphas", io::to_json(ens.alphas)},
            {"final_losses", io::to_json(ens.final_losses)},
            {"base_index", ens.base_index},
            {"epochs_run", ens.epochs_run},
            {"final_objective", ens.final_objective},
            {"output_scale", ens.output_scale}};
  return c;
}

TrainedEnsemble ensemble_from_checkpoint(const io::Checkpoint& ckpt) {
  const std::string kind = ckpt.meta.value("kind", "");
  if (kind != "flare" && kind != "lamp")
    throw Error(ErrorCode::FormatError, "checkpoint kind '" + kind + "' is not an ensemble");
  try {
    TrainedEnsemble ens;
    ens.arch = ckpt.architecture();
    ens.W = ckpt.columns;
    ens.config = config_from_json(ckpt.meta.at("config"));
    ens.sample_ids = ckpt.meta.at("sample_ids").get<std::vector<std::uint32_t>>();
    ens.P = io::matrix_from_json(ckpt.meta.at("params"));
    ens.bounds.lo = io::vector_from_json(ckpt.meta.at("bounds").at("lo"));
    ens.bounds.hi = io::vector_from_json(ckpt.meta.at("bounds").at("hi"));
    ens.alphas = io::matrix_from_json(ckpt.meta.at("alphas"));
    ens.final_losses = io::vector_from_json(ckpt.meta.at("final_losses"));
    ens.base_index = ckpt.meta.at("base_index").get<std::size_t>();
    ens.epochs_run = ckpt.meta.at("epochs_run").get<long>();
    ens.final_objective = ckpt.meta.at("final_objective").get<double>();
    ens.output_scale = ckpt.meta.at("output_scale").get<double>();
    if (!(ens.output_scale > 0.0)) throw Error(ErrorCode::FormatError, "output scale must be positive");
    if (static_cast<std::size_t>(ens.W.rows()) != ens.arch.parameter_count() ||
        ens.W.cols() != ens.P.cols() || ens.P.rows() != ens.bounds.dim())
      throw Error(ErrorCode::FormatError, "checkpoint shapes are inconsistent");
    return ens;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("ensemble sidecar: ") + e.what());
  }
}

}  // namespace flare::train
