#include "flare/baselines.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "flare/error.hpp"
#include "flare/parallel.hpp"
#include "flare/random.hpp"

namespace flare::baselines {

namespace {

using ConstRowMap = Eigen::Map<const nn::RowMajorMatrix>;
using RowMap = Eigen::Map<nn::RowMajorMatrix>;

std::span<const double> span_of(const Eigen::VectorXd& v, std::size_t offset, std::size_t count) {
  return {v.data() + offset, count};
}
std::span<double> span_of(Eigen::VectorXd& v, std::size_t offset, std::size_t count) {
  return {v.data() + offset, count};
}

std::vector<int> concat_widths(const nn::Architecture& arch, int k) {
  auto w = arch.widths();
  w.front() += k;
  return w;
}

std::vector<int> branch_widths(const nn::Architecture& arch, int k, int latent) {
  std::vector<int> w{k};
  w.insert(w.end(), arch.hidden.begin(), arch.hidden.end());
  w.push_back(3 * latent);
  return w;
}

std::vector<int> trunk_widths(const nn::Architecture& arch, int latent) {
  auto w = arch.widths();
  w.back() = 3 * latent;
  return w;
}

std::size_t film_generator_count(const nn::Architecture& arch, int k) {
  std::size_t n = 0;
  for (int h : arch.hidden) n += 2 * (static_cast<std::size_t>(h) * k + h);
  return n;
}

// ----------------------------------------------------------------- FiLM ----

struct FilmTape {
  std::vector<Eigen::MatrixXd> inputs;  // input of every layer
  std::vector<Eigen::MatrixXd> acts;    // post-ReLU, pre-modulation (hidden layers)
  std::vector<Eigen::RowVectorXd> gammas;
};

Eigen::MatrixXd film_forward(const ConditionalModel& m, const Eigen::VectorXd& q,
                             const Eigen::MatrixXd& encoded, FilmTape* tape) {
  const auto widths = m.arch.widths();
  const int k = m.param_dim;
  const double* p = m.weights.data();
  const double* gen = p + nn::dense_parameter_count(widths);
  Eigen::MatrixXd h = encoded;
  const std::size_t n_layers = widths.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int in = widths[l], out = widths[l + 1];
    ConstRowMap weight(p, out, in);
    p += static_cast<std::ptrdiff_t>(in) * out;
    Eigen::Map<const Eigen::RowVectorXd> bias(p, out);
    p += out;
    if (tape) tape->inputs.push_back(h);
    Eigen::MatrixXd z = h * weight.transpose();
    z.rowwise() += bias;
    if (l + 1 == n_layers) return z;
    Eigen::MatrixXd a = z.cwiseMax(0.0);
    ConstRowMap g_gamma(gen, out, k);
    Eigen::Map<const Eigen::VectorXd> c_gamma(gen + out * k, out);
    gen += out * k + out;
    ConstRowMap g_beta(gen, out, k);
    Eigen::Map<const Eigen::VectorXd> c_beta(gen + out * k, out);
    gen += out * k + out;
    const Eigen::RowVectorXd gamma = (1.0 + (g_gamma * q + c_gamma).array()).matrix().transpose();
    const Eigen::RowVectorXd beta = (g_beta * q + c_beta).transpose();
    h = (a.array().rowwise() * gamma.array()).matrix();
    h.rowwise() += beta;
    if (tape) {
      tape->acts.push_back(std::move(a));
      tape->gammas.push_back(gamma);
    }
  }
  return h;
}

void film_backward(const ConditionalModel& m, const Eigen::VectorXd& q, const FilmTape& tape,
                   const Eigen::MatrixXd& d_out, Eigen::VectorXd& grad) {
  const auto widths = m.arch.widths();
  const int k = m.param_dim;
  const std::size_t n_layers = widths.size() - 1;
  std::vector<std::size_t> offset(n_layers + 1, 0);
  for (std::size_t l = 0; l < n_layers; ++l)
    offset[l + 1] = offset[l] + static_cast<std::size_t>(widths[l]) * widths[l + 1] + widths[l + 1];
  std::vector<std::size_t> gen_offset(n_layers, offset[n_layers]);
  for (std::size_t l = 0; l + 1 < n_layers; ++l)
    gen_offset[l + 1] = gen_offset[l] + 2 * (static_cast<std::size_t>(widths[l + 1]) * k + widths[l + 1]);

  Eigen::MatrixXd dz = d_out;
  for (std::size_t l = n_layers; l-- > 0;) {
    const int in = widths[l], out = widths[l + 1];
    ConstRowMap weight(m.weights.data() + offset[l], out, in);
    RowMap g_weight(grad.data() + offset[l], out, in);
    Eigen::Map<Eigen::RowVectorXd> g_bias(grad.data() + offset[l] + in * out, out);
    g_weight.noalias() += dz.transpose() * tape.inputs[l];
    g_bias += dz.colwise().sum();
    if (l == 0) break;
    const Eigen::MatrixXd dh = dz * weight;  // w.r.t. modulated activation of layer l-1
    const Eigen::MatrixXd& a = tape.acts[l - 1];
    const int h = in;
    const Eigen::VectorXd d_gamma = (dh.array() * a.array()).colwise().sum().transpose();
    const Eigen::VectorXd d_beta = dh.colwise().sum().transpose();
    double* gen = grad.data() + gen_offset[l - 1];
    RowMap(gen, h, k).noalias() += d_gamma * q.transpose();
    Eigen::Map<Eigen::VectorXd>(gen + h * k, h) += d_gamma;
    gen += h * k + h;
    RowMap(gen, h, k).noalias() += d_beta * q.transpose();
    Eigen::Map<Eigen::VectorXd>(gen + h * k, h) += d_beta;
    const Eigen::MatrixXd da = (dh.array().rowwise() * tape.gammas[l - 1].array()).matrix();
    dz = (a.array() > 0.0).select(da, 0.0);
  }
}

// ------------------------------------------------------------- DeepONet ----

struct DeepOnetLayout {
  std::vector<int> branch, trunk;
  std::size_t branch_size = 0, trunk_size = 0;
};

DeepOnetLayout deeponet_layout(const ConditionalModel& m) {
  DeepOnetLayout l;
  l.branch = branch_widths(m.arch, m.param_dim, m.latent);
  l.trunk = trunk_widths(m.arch, m.latent);
  l.branch_size = nn::dense_parameter_count(l.branch);
  l.trunk_size = nn::dense_parameter_count(l.trunk);
  return l;
}

Eigen::MatrixXd combine(const Eigen::RowVectorXd& branch, const Eigen::MatrixXd& trunk,
                        const double* bias, int latent) {
  Eigen::MatrixXd out(trunk.rows(), 3);
  for (int c = 0; c < 3; ++c)
    out.col(c) = (trunk.middleCols(c * latent, latent) * branch.segment(c * latent, latent).transpose())
                     .array() + bias[c];
  return out;
}

// ------------------------------------------------------- dispatch --------

nn::LossGrad batch_loss_and_grad(const ConditionalModel& m, const ConditionalBatch& b) {
  const double n = static_cast<double>(b.encoded.rows());
  nn::LossGrad out;
  out.grad = Eigen::VectorXd::Zero(m.weights.size());
  const std::size_t total = static_cast<std::size_t>(m.weights.size());
  switch (m.kind) {
    case Kind::Concat: {
      const auto widths = concat_widths(m.arch, m.param_dim);
      Eigen::MatrixXd input(b.encoded.rows(), b.encoded.cols() + m.param_dim);
      input << b.encoded, b.q.transpose().replicate(b.encoded.rows(), 1);
      nn::DenseTape tape;
      const Eigen::MatrixXd pred = nn::dense_forward(span_of(m.weights, 0, total), widths, input, &tape);
      const Eigen::MatrixXd diff = pred - b.targets;
      out.loss = diff.squaredNorm() / n;
      nn::dense_backward(span_of(m.weights, 0, total), widths, tape, (2.0 / n) * diff,
                         span_of(out.grad, 0, total));
      break;
    }
    case Kind::FiLM: {
      FilmTape tape;
      const Eigen::MatrixXd diff = film_forward(m, b.q, b.encoded, &tape) - b.targets;
      out.loss = diff.squaredNorm() / n;
      film_backward(m, b.q, tape, (2.0 / n) * diff, out.grad);
      break;
    }
    case Kind::DeepONet: {
      const DeepOnetLayout lay = deeponet_layout(m);
      nn::DenseTape branch_tape, trunk_tape;
      const Eigen::MatrixXd branch = nn::dense_forward(span_of(m.weights, 0, lay.branch_size), lay.branch,
                                                       Eigen::MatrixXd(b.q.transpose()), &branch_tape);
      const Eigen::MatrixXd trunk = nn::dense_forward(span_of(m.weights, lay.branch_size, lay.trunk_size),
                                                      lay.trunk, b.encoded, &trunk_tape);
      const double* bias = m.weights.data() + lay.branch_size + lay.trunk_size;
      const Eigen::MatrixXd diff = combine(branch.row(0), trunk, bias, m.latent) - b.targets;
      out.loss = diff.squaredNorm() / n;
      const Eigen::MatrixXd d_pred = (2.0 / n) * diff;
      Eigen::MatrixXd d_branch(1, 3 * m.latent);
      Eigen::MatrixXd d_trunk(trunk.rows(), 3 * m.latent);
      for (int c = 0; c < 3; ++c) {
        d_trunk.middleCols(c * m.latent, m.latent) =
            d_pred.col(c) * branch.row(0).segment(c * m.latent, m.latent);
        d_branch.row(0).segment(c * m.latent, m.latent) =
            d_pred.col(c).transpose() * trunk.middleCols(c * m.latent, m.latent);
        out.grad[static_cast<Eigen::Index>(lay.branch_size + lay.trunk_size) + c] = d_pred.col(c).sum();
      }
      nn::dense_backward(span_of(m.weights, 0, lay.branch_size), lay.branch, branch_tape, d_branch,
                         span_of(out.grad, 0, lay.branch_size));
      nn::dense_backward(span_of(m.weights, lay.branch_size, lay.trunk_size), lay.trunk, trunk_tape,
                         d_trunk, span_of(out.grad, lay.branch_size, lay.trunk_size));
      break;
    }
  }
  return out;
}

Eigen::VectorXd checked_query(const Eigen::VectorXd& q, int k) {
  if (q.size() != k) throw Error(ErrorCode::ShapeMismatch, "parameter vector length mismatch");
  return q;
}

}  // namespace

// ------------------------------------------------------------------ NN ----

NeighborSet neighbors_from_ensemble(const train::TrainedEnsemble& ens) {
  return {ens.arch, ens.W, ens.normalized_params(), ens.bounds, ens.output_scale, ens.sample_ids};
}

std::size_t nearest_index(const Eigen::MatrixXd& normalized, const Eigen::VectorXd& query) {
  if (normalized.cols() == 0) throw Error(ErrorCode::InsufficientData, "empty training set");
  if (query.size() != normalized.rows()) throw Error(ErrorCode::LengthMismatch, "query length");
  const double qn = query.norm();
  if (!(qn > 0.0)) throw Error(ErrorCode::DegenerateQuery, "query parameter vector is zero");
  std::size_t best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < normalized.cols(); ++j) {
    const double cn = normalized.col(j).norm();
    const double sim = cn > 0.0 ? normalized.col(j).dot(query) / (cn * qn) : 0.0;
    if (sim > best_sim) {
      best_sim = sim;
      best = static_cast<std::size_t>(j);
    }
  }
  return best;
}

Eigen::MatrixXd nn_predict(const NeighborSet& set, const Eigen::VectorXd& params,
                           const Eigen::MatrixXd& coords) {
  const std::size_t j = nearest_index(set.normalized_params, set.bounds.normalize(params));
  return set.output_scale * nn::forward({set.arch, set.networks.col(static_cast<Eigen::Index>(j))}, coords);
}

io::Checkpoint to_checkpoint(const NeighborSet& set) {
  io::Checkpoint c = io::Checkpoint::for_architecture(set.arch, set.networks);
  c.meta = {{"kind", "nn"},
            {"sample_ids", set.sample_ids},
            {"normalized_params", io::to_json(set.normalized_params)},
            {"bounds", {{"lo", io::to_json(set.bounds.lo)}, {"hi", io::to_json(set.bounds.hi)}}},
            {"output_scale", set.output_scale}};
  return c;
}

NeighborSet neighbors_from_checkpoint(const io::Checkpoint& ckpt) {
  if (ckpt.meta.value("kind", "") != "nn")
    throw Error(ErrorCode::FormatError, "checkpoint is not a nearest-neighbour set");
  try {
    NeighborSet set;
    set.arch = ckpt.architecture();
    set.networks = ckpt.columns;
    set.sample_ids = ckpt.meta.at("sample_ids").get<std::vector<std::uint32_t>>();
    set.normalized_params = io::matrix_from_json(ckpt.meta.at("normalized_params"));
    set.bounds.lo = io::vector_from_json(ckpt.meta.at("bounds").at("lo"));
    set.bounds.hi = io::vector_from_json(ckpt.meta.at("bounds").at("hi"));
    set.output_scale = ckpt.meta.at("output_scale").get<double>();
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("nn sidecar: ") + e.what());
  }
}

// ---------------------------------------------------------- conditional ----

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::Concat: return "concat";
    case Kind::FiLM: return "film";
    case Kind::DeepONet: return "deeponet";
  }
  return "unknown";
}

Kind kind_from_string(const std::string& name) {
  if (name == "concat") return Kind::Concat;
  if (name == "film") return Kind::FiLM;
  if (name == "deeponet") return Kind::DeepONet;
  throw Error(ErrorCode::InvalidArgument, "unknown baseline kind '" + name + "'");
}

std::size_t ConditionalModel::parameter_count() const {
  switch (kind) {
    case Kind::Concat: return nn::dense_parameter_count(concat_widths(arch, param_dim));
    case Kind::FiLM: return arch.parameter_count() + film_generator_count(arch, param_dim);
    case Kind::DeepONet:
      return nn::dense_parameter_count(branch_widths(arch, param_dim, latent)) +
             nn::dense_parameter_count(trunk_widths(arch, latent)) + 3;
  }
  return 0;
}

ConditionalModel init_conditional(Kind kind, const nn::Architecture& arch,
                                  const ParameterBounds& bounds, std::uint64_t seed, int latent) {
  arch.validate();
  bounds.validate();
  if (latent <= 0) throw Error(ErrorCode::ConfigError, "DeepONet latent width must be positive");
  ConditionalModel m;
  m.kind = kind;
  m.arch = arch;
  m.latent = latent;
  m.param_dim = static_cast<int>(bounds.dim());
  m.bounds = bounds;
  m.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.parameter_count()));
  const std::size_t total = m.parameter_count();
  switch (kind) {
    case Kind::Concat:
      nn::init_dense(span_of(m.weights, 0, total), concat_widths(arch, m.param_dim), seed);
      break;
    case Kind::FiLM:
      // Generators start at zero, i.e. identity modulation.
      nn::init_dense(span_of(m.weights, 0, arch.parameter_count()), arch.widths(), seed);
      break;
    case Kind::DeepONet: {
      const DeepOnetLayout lay = deeponet_layout(m);
      nn::init_dense(span_of(m.weights, 0, lay.branch_size), lay.branch, derive_seed(seed, "branch"));
      nn::init_dense(span_of(m.weights, lay.branch_size, lay.trunk_size), lay.trunk,
                     derive_seed(seed, "trunk"));
      break;
    }
  }
  return m;
}

static Eigen::MatrixXd forward_network(const ConditionalModel& m, const Eigen::VectorXd& q_in,
                                       const Eigen::MatrixXd& coords) {
  if (static_cast<std::size_t>(m.weights.size()) != m.parameter_count())
    throw Error(ErrorCode::ShapeMismatch, "model weights do not match its layout");
  const Eigen::VectorXd q = checked_query(q_in, m.param_dim);
  const Eigen::MatrixXd encoded = nn::fourier_encode(coords, m.arch.octaves);
  const std::size_t total = m.parameter_count();
  switch (m.kind) {
    case Kind::Concat: {
      Eigen::MatrixXd input(encoded.rows(), encoded.cols() + m.param_dim);
      input << encoded, q.transpose().replicate(encoded.rows(), 1);
      return nn::dense_forward(span_of(m.weights, 0, total), concat_widths(m.arch, m.param_dim), input);
    }
    case Kind::FiLM:
      return film_forward(m, q, encoded, nullptr);
    case Kind::DeepONet: {
      const DeepOnetLayout lay = deeponet_layout(m);
      const Eigen::MatrixXd branch = nn::dense_forward(span_of(m.weights, 0, lay.branch_size), lay.branch,
                                                       Eigen::MatrixXd(q.transpose()));
      const Eigen::MatrixXd trunk =
          nn::dense_forward(span_of(m.weights, lay.branch_size, lay.trunk_size), lay.trunk, encoded);
      return combine(branch.row(0), trunk, m.weights.data() + lay.branch_size + lay.trunk_size,
                     m.latent);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

Eigen::MatrixXd forward_normalized(const ConditionalModel& m, const Eigen::VectorXd& q,
                                   const Eigen::MatrixXd& coords) {
  return m.output_scale * forward_network(m, q, coords);
}

Eigen::MatrixXd predict_conditional(const ConditionalModel& model, const Eigen::VectorXd& params,
                                    const Eigen::MatrixXd& coords) {
  return forward_normalized(model, model.bounds.normalize(params), coords);
}

std::vector<ConditionalBatch> make_batches(const std::vector<data::FieldSample>& samples,
                                           const ParameterBounds& bounds, int octaves,
                                           double output_scale) {
  if (!(output_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "output scale must be positive");
  std::vector<ConditionalBatch> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    out.push_back({bounds.normalize(s.params), nn::fourier_encode(s.coords, octaves), s.targets / output_scale});
  return out;
}

nn::LossGrad conditional_loss_and_grad(const ConditionalModel& model,
                                       const std::vector<ConditionalBatch>& batches, int threads) {
  if (batches.empty()) throw Error(ErrorCode::InsufficientData, "no training batches");
  if (static_cast<std::size_t>(model.weights.size()) != model.parameter_count())
    throw Error(ErrorCode::ShapeMismatch, "model weights do not match its layout");
  std::vector<nn::LossGrad> parts(batches.size());
  parallel_for(batches.size(), threads,
               [&](std::size_t i) { parts[i] = batch_loss_and_grad(model, batches[i]); });
  nn::LossGrad total{0.0, Eigen::VectorXd::Zero(model.weights.size())};
  for (const auto& p : parts) {
    total.loss += p.loss;
    total.grad += p.grad;
  }
  const double scale = 1.0 / static_cast<double>(batches.size());
  total.loss *= scale;
  total.grad *= scale;
  if (!std::isfinite(total.loss)) throw Error(ErrorCode::NonFiniteLoss, "baseline loss is not finite");
  return total;
}

ConditionalModel fit_conditional(ConditionalModel model, const std::vector<data::FieldSample>& samples,
                                 const train::TrainConfig& cfg, long epochs,
                                 const train::EpochCallback& on_epoch) {
  if (samples.empty()) throw Error(ErrorCode::InsufficientData, "no samples to train on");
  if (model.weights.size() != static_cast<Eigen::Index>(model.parameter_count()))
    throw Error(ErrorCode::ShapeMismatch, "weight count does not match the model layout");
  model.output_scale = train::target_scale(samples);
  const auto batches = make_batches(samples, model.bounds, model.arch.octaves, model.output_scale);
  auto adam = opt::AdamState::zeros(model.weights.size());
  auto schedule = cfg.optimizer.make_schedule();
  auto stopper = cfg.optimizer.make_early_stop();
  for (long epoch = 0; epoch < epochs; ++epoch) {
    const nn::LossGrad lg = conditional_loss_and_grad(model, batches, cfg.threads);
    if (!std::isfinite(lg.loss))
      throw Error(ErrorCode::NonFiniteLoss, to_string(model.kind) + " loss became non-finite at epoch " +
                                                std::to_string(epoch));
    const double lr = opt::schedule_lr(schedule, epoch, lg.loss);
    if (on_epoch) on_epoch({1, epoch, lg.loss, 0.0, lr});
    if (opt::early_stop(stopper, lg.loss)) break;
    opt::adam_step(model.weights, lg.grad, adam, lr);
  }
  return model;
}

ConditionalModel train_conditional(Kind kind, const std::vector<data::FieldSample>& samples,
                                   const ParameterBounds& bounds, const train::TrainConfig& cfg,
                                   long epochs, const train::EpochCallback& on_epoch, int latent) {
  if (samples.empty()) throw Error(ErrorCode::InsufficientData, "no samples to train on");
  return fit_conditional(
      init_conditional(kind, cfg.arch, bounds, derive_seed(cfg.seed, "baseline/" + to_string(kind)), latent),
      samples, cfg, epochs, on_epoch);
}

io::Checkpoint to_checkpoint(const ConditionalModel& model) {
  io::Checkpoint c = io::Checkpoint::for_architecture(model.arch, model.weights);
  c.meta = {{"kind", to_string(model.kind)},
            {"latent", model.latent},
            {"param_dim", model.param_dim},
            {"bounds", {{"lo", io::to_json(model.bounds.lo)}, {"hi", io::to_json(model.bounds.hi)}}},
            {"output_scale", model.output_scale}};
  return c;
}

ConditionalModel conditional_from_checkpoint(const io::Checkpoint& ckpt) {
  try {
    ConditionalModel m;
    m.kind = kind_from_string(ckpt.meta.at("kind").get<std::string>());
    m.arch = ckpt.architecture();
    m.latent = ckpt.meta.at("latent").get<int>();
    m.param_dim = ckpt.meta.at("param_dim").get<int>();
    m.bounds.lo = io::vector_from_json(ckpt.meta.at("bounds").at("lo"));
    m.bounds.hi = io::vector_from_json(ckpt.meta.at("bounds").at("hi"));
    m.output_scale = ckpt.meta.at("output_scale").get<double>();
    if (ckpt.columns.cols() != 1) throw Error(ErrorCode::FormatError, "expected one weight column");
    m.weights = ckpt.columns.col(0);
    if (static_cast<std::size_t>(m.weights.size()) != m.parameter_count())
      throw Error(ErrorCode::FormatError, "weight count does not match the model layout");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("baseline sidecar: ") + e.what());
  }
}

}  // namespace flare::baselines
