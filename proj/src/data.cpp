#include "flare/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "flare/error.hpp"
#include "flare/geometry.hpp"
#include "flare/random.hpp"

namespace flare::data {

const FieldSample& Dataset::by_id(std::uint32_t id) const {
  for (const auto& s : samples)
    if (s.id == id) return s;
  throw Error(ErrorCode::InvalidArgument, "no sample with id " + std::to_string(id));
}

std::vector<std::uint32_t> Dataset::ids() const {
  std::vector<std::uint32_t> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.id);
  return out;
}

Eigen::MatrixXd Dataset::parameter_matrix(const std::vector<std::uint32_t>& ids) const {
  Eigen::MatrixXd P(bounds.dim(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) P.col(static_cast<Eigen::Index>(j)) = by_id(ids[j]).params;
  return P;
}

std::string to_string(SplitKind kind) {
  switch (kind) {
    case SplitKind::Random8020: return "random";
    case SplitKind::GreedyMaxMin: return "greedy";
    case SplitKind::TrimCorners: return "trim";
  }
  return "unknown";
}

SplitKind split_kind_from_string(const std::string& name) {
  if (name == "random") return SplitKind::Random8020;
  if (name == "greedy") return SplitKind::GreedyMaxMin;
  if (name == "trim") return SplitKind::TrimCorners;
  throw Error(ErrorCode::InvalidArgument, "unknown split kind '" + name + "'");
}

std::string to_string(Family family) {
  return family == Family::AffineExact ? "affine" : "nonlinear";
}

Family family_from_string(const std::string& name) {
  if (name == "affine") return Family::AffineExact;
  if (name == "nonlinear") return Family::MildlyNonlinear;
  throw Error(ErrorCode::InvalidArgument, "unknown field family '" + name + "'");
}

Eigen::MatrixXd lhs_sample(const ParameterBounds& ranges, std::size_t n, std::uint64_t seed) {
  ranges.validate();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "LHS needs n >= 1");
  Rng rng(seed);
  const Eigen::Index k = ranges.dim();
  Eigen::MatrixXd out(k, static_cast<Eigen::Index>(n));
  std::vector<std::size_t> strata(n);
  for (Eigen::Index d = 0; d < k; ++d) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(strata));
    const double width = (ranges.hi[d] - ranges.lo[d]) / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double v = ranges.lo[d] + width * (static_cast<double>(strata[j]) + rng.uniform());
      // Guard the open upper end of the top stratum against rounding.
      out(d, static_cast<Eigen::Index>(j)) = std::min(v, std::nextafter(ranges.hi[d], ranges.lo[d]));
    }
  }
  return out;
}

Eigen::MatrixXd corner_params(const ParameterBounds& ranges, std::size_t count, std::uint64_t seed) {
  ranges.validate();
  const Eigen::Index k = ranges.dim();
  if (k >= 63) throw Error(ErrorCode::InvalidArgument, "too many dimensions for corner sampling");
  const std::uint64_t vertices = std::uint64_t{1} << k;
  if (count > vertices)
    throw Error(ErrorCode::InsufficientData, "requested more corners than the box has vertices");
  std::vector<std::uint64_t> order(vertices);
  std::iota(order.begin(), order.end(), std::uint64_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::uint64_t>(order));
  Eigen::MatrixXd out(k, static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < count; ++j)
    for (Eigen::Index d = 0; d < k; ++d)
      out(d, static_cast<Eigen::Index>(j)) = (order[j] >> d) & 1U ? ranges.hi[d] : ranges.lo[d];
  return out;
}

Eigen::MatrixXd synthetic_field(const Eigen::VectorXd& params, const Eigen::MatrixXd& coords,
                                Family family, const ParameterBounds& bounds) {
  if (params.size() != static_cast<Eigen::Index>(kParamCount))
    throw Error(ErrorCode::LengthMismatch, "synthetic field needs 7 parameters");
  if (coords.cols() != 3) throw Error(ErrorCode::ShapeMismatch, "coordinates must be n x 3");
  const Eigen::VectorXd q = bounds.normalize(params);
  constexpr double s = kFieldScale;
  constexpr double pi = std::numbers::pi;
  const auto x = coords.col(0).array();
  const auto y = coords.col(1).array();
  const auto z = coords.col(2).array();
  Eigen::MatrixXd out(coords.rows(), 3);
  out.col(0) = (s * (q[0] * x + q[5] * (pi * x).sin())).matrix();
  out.col(1) = (s * (q[1] * y + q[5] * (pi * y).sin())).matrix();
  out.col(2) = (s * (q[2] * z + 0.5 * (q[3] + q[4]) * (pi * z).sin())).matrix();
  if (family == Family::MildlyNonlinear) {
    const double c = s * 0.1 * q[5] * q[6];
    out.col(0).array() += c * x * y;
    out.col(1).array() += c * y * z;
    out.col(2).array() += c;
  }
  return out;
}

bool synthetic_feasible(const Eigen::VectorXd& params, const ParameterBounds& bounds) {
  const Eigen::VectorXd q = bounds.normalize(params);
  return q[kLaserPower] / (q[kVelocity] + 0.5) > kFeasibilityThreshold;
}

Dataset generate_dataset(const GenerateOptions& options) {
  if (options.count == 0) throw Error(ErrorCode::InvalidArgument, "dataset count must be >= 1");
  if (options.points_per_ring == 0)
    throw Error(ErrorCode::InvalidArgument, "points per ring must be >= 1");
  Dataset ds;
  ds.family = to_string(options.family);
  Eigen::MatrixXd params = lhs_sample(ds.bounds, options.count, derive_seed(options.seed, "lhs"));
  if (options.corners > 0) {
    const Eigen::MatrixXd corners =
        corner_params(ds.bounds, options.corners, derive_seed(options.seed, "corners"));
    Eigen::MatrixXd all(params.rows(), params.cols() + corners.cols());
    all << params, corners;
    params = std::move(all);
  }
  for (Eigen::Index j = 0; j < params.cols(); ++j) {
    FieldSample s;
    s.id = static_cast<std::uint32_t>(j);
    s.params = params.col(j);
    s.corner = static_cast<std::size_t>(j) >= options.count;
    const auto domain = geometry::DomainSpec::from_dimensions(
        s.params[kOuterRadius], s.params[kOuterThickness], s.params[kInnerRadius],
        s.params[kInnerThickness], s.params[kHeight]);
    s.coords = geometry::sample_unit_points(
        domain, options.points_per_ring,
        derive_seed(options.seed, "points/" + std::to_string(s.id)));
    s.targets = synthetic_field(s.params, s.coords, options.family, ds.bounds);
    s.feasible = synthetic_feasible(s.params, ds.bounds);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::vector<std::size_t> greedy_maxmin_select(const Eigen::MatrixXd& normalized, std::size_t m) {
  const auto n = static_cast<std::size_t>(normalized.cols());
  if (m == 0 || m > n)
    throw Error(ErrorCode::InsufficientData, "greedy selection of " + std::to_string(m) +
                                                 " from " + std::to_string(n) + " candidates");
  const Eigen::VectorXd centroid = Eigen::VectorXd::Constant(normalized.rows(), 0.5);
  std::size_t first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    const double d = (normalized.col(static_cast<Eigen::Index>(j)) - centroid).norm();
    if (d < best) {
      best = d;
      first = j;
    }
  }
  std::vector<std::size_t> chosen{first};
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  taken[first] = true;
  while (chosen.size() < m) {
    const auto last = static_cast<Eigen::Index>(chosen.back());
    std::size_t pick = n;
    double pick_dist = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (taken[j]) continue;
      min_dist[j] = std::min(
          min_dist[j], (normalized.col(static_cast<Eigen::Index>(j)) - normalized.col(last)).norm());
      if (min_dist[j] > pick_dist) {
        pick_dist = min_dist[j];
        pick = j;
      }
    }
    taken[pick] = true;
    chosen.push_back(pick);
  }
  return chosen;
}

double trim_fraction(std::size_t n, Eigen::Index k) {
  const double keep = std::ceil(static_cast<double>(n) / 2.0) / static_cast<double>(n);
  return 0.5 * (1.0 - std::pow(keep, 1.0 / static_cast<double>(k)));
}

namespace {

Split random_split(const std::vector<std::uint32_t>& pool, std::uint64_t seed) {
  if (pool.size() < 2)
    throw Error(ErrorCode::InsufficientData, "random split needs at least 2 samples");
  std::vector<std::uint32_t> order = pool;
  Rng rng(seed);
  rng.shuffle(std::span<std::uint32_t>(order));
  auto n_train = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(pool.size()) + 0.5));
  n_train = std::clamp<std::size_t>(n_train, 1, pool.size() - 1);
  Split split;
  split.kind = SplitKind::Random8020;
  split.seed = seed;
  split.train_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

}  // namespace

Split build_split(const Dataset& dataset, SplitKind kind, std::uint64_t seed, std::size_t size) {
  std::vector<std::uint32_t> regular, corners;
  for (const auto& s : dataset.samples) (s.corner ? corners : regular).push_back(s.id);

  switch (kind) {
    case SplitKind::Random8020:
      return random_split(regular, seed);
    case SplitKind::GreedyMaxMin: {
      Split base = random_split(regular, seed);
      if (size == 0 || size > base.train_ids.size())
        throw Error(ErrorCode::InsufficientData,
                    "greedy train size " + std::to_string(size) + " exceeds the " +
                        std::to_string(base.train_ids.size()) + " available training samples");
      const Eigen::MatrixXd Q = dataset.bounds.normalize(dataset.parameter_matrix(base.train_ids));
      Split split;
      split.kind = kind;
      split.seed = seed;
      split.size = size;
      for (std::size_t j : greedy_maxmin_select(Q, size)) split.train_ids.push_back(base.train_ids[j]);
      split.test_ids = std::move(base.test_ids);
      return split;
    }
    case SplitKind::TrimCorners: {
      if (regular.empty()) throw Error(ErrorCode::InsufficientData, "no samples to trim");
      const double f = trim_fraction(regular.size(), dataset.bounds.dim());
      Split split;
      split.kind = kind;
      split.seed = seed;
      for (std::uint32_t id : regular) {
        const Eigen::VectorXd q = dataset.bounds.normalize(dataset.by_id(id).params);
        const bool inside = (q.array() >= f).all() && (q.array() <= 1.0 - f).all();
        (inside ? split.train_ids : split.test_ids).push_back(id);
      }
      split.test_ids.insert(split.test_ids.end(), corners.begin(), corners.end());
      if (split.train_ids.empty() || split.test_ids.empty())
        throw Error(ErrorCode::InsufficientData, "trim split left an empty train or test set");
      return split;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown split kind");
}

}  // namespace flare::data
