#include "flare/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "flare/error.hpp"
#include "flare/random.hpp"

namespace flare::feas {

namespace {

// Visit the nondecreasing index tuples of length `degree` over `inputs`
// variables in lexicographic order.
void for_each_monomial(std::size_t inputs, int degree,
                       const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(degree), 0);
  if (inputs == 0) return;
  while (true) {
    fn(idx);
    int pos = degree - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == inputs - 1) --pos;
    if (pos < 0) return;
    const std::size_t next = idx[static_cast<std::size_t>(pos)] + 1;
    for (auto k = static_cast<std::size_t>(pos); k < idx.size(); ++k) idx[k] = next;
  }
}

double log1p_exp(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

void check_labels(const Eigen::VectorXd& y) {
  bool pos = false, neg = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0) pos = true;
    else if (y[i] == 0.0) neg = true;
    else throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
  }
  if (!pos || !neg) throw Error(ErrorCode::SingleClass, "both classes must be present");
}

}  // namespace

std::size_t poly_feature_count(std::size_t inputs, int degree) {
  std::size_t total = 0;
  for (int d = 1; d <= degree; ++d) {
    // C(inputs + d - 1, d)
    std::size_t c = 1;
    for (int k = 1; k <= d; ++k) c = c * (inputs + static_cast<std::size_t>(k) - 1) / static_cast<std::size_t>(k);
    total += c;
  }
  return total;
}

Eigen::VectorXd poly_features(const Eigen::VectorXd& x, int degree) {
  if (degree < 1) throw Error(ErrorCode::InvalidArgument, "polynomial degree must be >= 1");
  const auto inputs = static_cast<std::size_t>(x.size());
  Eigen::VectorXd out(static_cast<Eigen::Index>(poly_feature_count(inputs, degree)));
  Eigen::Index at = 0;
  for (int d = 1; d <= degree; ++d) {
    for_each_monomial(inputs, d, [&](const std::vector<std::size_t>& idx) {
      double v = 1.0;
      for (std::size_t k : idx) v *= x[static_cast<Eigen::Index>(k)];
      out[at++] = v;
    });
  }
  return out;
}

Eigen::MatrixXd poly_features(const Eigen::MatrixXd& X, int degree) {
  const auto width = static_cast<Eigen::Index>(poly_feature_count(static_cast<std::size_t>(X.cols()), degree));
  Eigen::MatrixXd out(X.rows(), width);
  for (Eigen::Index r = 0; r < X.rows(); ++r)
    out.row(r) = poly_features(Eigen::VectorXd(X.row(r).transpose()), degree).transpose();
  return out;
}

double logreg_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& coef, double intercept, double l1) {
  const Eigen::VectorXd s = (X * coef).array() + intercept;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) loss += log1p_exp(s[i]) - y[i] * s[i];
  return loss / static_cast<double>(s.size()) + l1 * coef.lpNorm<1>();
}

FeasibilityModel train_logreg_l1(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double l1,
                                 const LogRegOptions& options) {
  if (X.rows() != y.size() || X.rows() == 0)
    throw Error(ErrorCode::ShapeMismatch, "feature rows and labels differ");
  if (!(l1 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "l1 strength must be >= 0");
  check_labels(y);
  const auto n = static_cast<double>(X.rows());
  const Eigen::Index F = X.cols();

  // Lipschitz constant of the smooth part over (coef, intercept).
  Eigen::MatrixXd augmented(X.rows(), F + 1);
  augmented << X, Eigen::VectorXd::Ones(X.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(augmented);
  const double sigma = svd.singularValues()(0);
  const double step = 4.0 * n / (sigma * sigma);

  auto gradient = [&](const Eigen::VectorXd& theta) {
    Eigen::VectorXd resid = augmented * theta;
    for (Eigen::Index i = 0; i < resid.size(); ++i) resid[i] = sigmoid(resid[i]) - y[i];
    return Eigen::VectorXd(augmented.transpose() * resid / n);
  };
  auto prox = [&](Eigen::VectorXd theta) {
    const double t = step * l1;
    for (Eigen::Index j = 0; j < F; ++j) {
      const double v = theta[j];
      theta[j] = v > t ? v - t : (v < -t ? v + t : 0.0);
    }
    return theta;
  };
  auto objective = [&](const Eigen::VectorXd& theta) {
    return logreg_objective(X, y, theta.head(F), theta[F], l1);
  };

  // FISTA with function-value restart.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(F + 1);
  Eigen::VectorXd z = x;
  double t = 1.0;
  double f = objective(x);
  long it = 0;
  while (it < options.max_iterations) {
    ++it;
    Eigen::VectorXd x_next = prox(z - step * gradient(z));
    double f_next = objective(x_next);
    if (f_next > f) {
      // Momentum overshot: fall back to a plain proximal step from x.
      x_next = prox(x - step * gradient(x));
      f_next = objective(x_next);
      t = 1.0;
      z = x_next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      z = x_next + ((t - 1.0) / t_next) * (x_next - x);
      t = t_next;
    }
    const double change = std::abs(f - f_next);
    x = std::move(x_next);
    f = f_next;
    if (change < options.tolerance) {
      const Eigen::VectorXd mapping = (x - prox(x - step * gradient(x))) / step;
      if (mapping.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) break;
    }
  }

  FeasibilityModel model;
  model.coefficients = x.head(F);
  model.intercept = x[F];
  model.l1_strength = l1;
  model.iterations = it;
  return model;
}

double decision_score(const FeasibilityModel& model, const Eigen::VectorXd& normalized_params) {
  const Eigen::VectorXd f = poly_features(normalized_params, model.degree);
  if (f.size() != model.coefficients.size())
    throw Error(ErrorCode::ShapeMismatch, "feature count does not match model");
  return f.dot(model.coefficients) + model.intercept;
}

double predict_proba(const FeasibilityModel& model, const Eigen::VectorXd& normalized_params) {
  return sigmoid(decision_score(model, normalized_params));
}

double roc_auc(const Eigen::VectorXd& labels, const Eigen::VectorXd& scores) {
  if (labels.size() != scores.size()) throw Error(ErrorCode::ShapeMismatch, "labels vs scores");
  check_labels(labels);
  const auto n = static_cast<std::size_t>(labels.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] < scores[static_cast<Eigen::Index>(b)];
  });
  // Average ranks (1-based) across ties.
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[static_cast<Eigen::Index>(order[j + 1])] ==
                            scores[static_cast<Eigen::Index>(order[i])])
      ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double pos_rank = 0.0, n_pos = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (labels[static_cast<Eigen::Index>(i)] == 1.0) {
      pos_rank += rank[i];
      n_pos += 1.0;
    }
  const double n_neg = static_cast<double>(n) - n_pos;
  return (pos_rank - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

std::vector<double> default_l1_grid() {
  std::vector<double> grid;
  for (int e = -8; e <= 0; ++e) grid.push_back(std::pow(10.0, 0.5 * e));
  return grid;
}

double select_l1_strength(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const std::vector<double>& grid, int folds, std::uint64_t seed) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty l1 grid");
  if (folds < 2 || X.rows() < folds)
    throw Error(ErrorCode::InsufficientData, "not enough samples for cross-validation");
  check_labels(y);
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<int> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));

  double best_l1 = grid.front();
  double best_loss = std::numeric_limits<double>::infinity();
  for (double l1 : grid) {
    double total = 0.0;
    int used = 0;
    for (int f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> tr, va;
      for (std::size_t i = 0; i < n; ++i)
        (fold_of[i] == f ? va : tr).push_back(static_cast<Eigen::Index>(i));
      const Eigen::MatrixXd Xtr = X(tr, Eigen::all);
      const Eigen::VectorXd ytr = y(tr);
      if (ytr.minCoeff() == ytr.maxCoeff()) continue;
      const FeasibilityModel m = train_logreg_l1(Xtr, ytr, l1);
      total += logreg_objective(X(va, Eigen::all), y(va), m.coefficients, m.intercept, 0.0);
      ++used;
    }
    if (used == 0) continue;
    const double mean = total / used;
    if (mean <= best_loss) {
      best_loss = mean;
      best_l1 = l1;
    }
  }
  return best_l1;
}

}  // namespace flare::feas

namespace flare::feas {

io::Checkpoint to_checkpoint(const FeasibilityModel& model, std::size_t inputs) {
  io::Checkpoint c;
  c.octaves = 0;
  c.widths = {static_cast<std::uint32_t>(inputs), static_cast<std::uint32_t>(model.coefficients.size())};
  c.columns.resize(model.coefficients.size() + 1, 1);
  c.columns.col(0) << model.coefficients, model.intercept;
  c.meta = {{"kind", "feas"},
            {"degree", model.degree},
            {"l1_strength", model.l1_strength},
            {"iterations", model.iterations}};
  return c;
}

FeasibilityModel feasibility_from_checkpoint(const io::Checkpoint& ckpt) {
  if (ckpt.meta.value("kind", "") != "feas")
    throw Error(ErrorCode::FormatError, "checkpoint is not a feasibility model");
  if (ckpt.widths.size() != 2 || ckpt.columns.cols() != 1)
    throw Error(ErrorCode::FormatError, "malformed feasibility checkpoint");
  FeasibilityModel m;
  try {
    m.degree = ckpt.meta.at("degree").get<int>();
    m.l1_strength = ckpt.meta.at("l1_strength").get<double>();
    m.iterations = ckpt.meta.at("iterations").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("feasibility sidecar: ") + e.what());
  }
  const auto features = static_cast<Eigen::Index>(ckpt.widths[1]);
  if (ckpt.columns.rows() != features + 1 || poly_feature_count(ckpt.widths[0], m.degree) !=
                                                 static_cast<std::size_t>(features))
    throw Error(ErrorCode::FormatError, "feasibility feature count mismatch");
  m.coefficients = ckpt.columns.col(0).head(features);
  m.intercept = ckpt.columns(features, 0);
  return m;
}

}  // namespace flare::feas
