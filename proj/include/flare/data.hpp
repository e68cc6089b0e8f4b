#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flare/parameters.hpp"

namespace flare::data {

/// One simulated part: its parameters and the displacement field sampled at
/// unit-space coordinates.
struct FieldSample {
  std::uint32_t id = 0;
  Eigen::VectorXd params;   // raw units, length 7
  Eigen::MatrixXd coords;   // n x 3 unit space
  Eigen::MatrixXd targets;  // n x 3 displacement
  std::optional<bool> feasible;
  bool corner = false;      // generated from a vertex of the parameter box

  bool operator==(const FieldSample&) const = default;
};

struct Dataset {
  ParameterBounds bounds = ParameterBounds::dataset_ranges();
  std::vector<FieldSample> samples;
  std::string family;  // provenance only, e.g. "affine"

  const FieldSample& by_id(std::uint32_t id) const;
  std::vector<std::uint32_t> ids() const;
  /// Raw parameter columns (k x ids.size()) in the order given.
  Eigen::MatrixXd parameter_matrix(const std::vector<std::uint32_t>& ids) const;

  bool operator==(const Dataset&) const = default;
};

enum class SplitKind { Random8020, GreedyMaxMin, TrimCorners };

std::string to_string(SplitKind kind);
SplitKind split_kind_from_string(const std::string& name);

struct Split {
  SplitKind kind = SplitKind::Random8020;
  std::uint64_t seed = 0;
  std::size_t size = 0;  // requested train size for GreedyMaxMin
  std::vector<std::uint32_t> train_ids;
  std::vector<std::uint32_t> test_ids;

  bool operator==(const Split&) const = default;
};

/// Latin hypercube design: k x n matrix, one point per equal-width stratum in
/// every dimension, uniform inside the stratum.
Eigen::MatrixXd lhs_sample(const ParameterBounds& ranges, std::size_t n, std::uint64_t seed);

/// `count` distinct vertices of the bounds box (k x count), sampled without
/// replacement.
Eigen::MatrixXd corner_params(const ParameterBounds& ranges, std::size_t count, std::uint64_t seed);

enum class Family { AffineExact, MildlyNonlinear };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

inline constexpr double kFieldScale = 0.02;

/// Closed-form displacement oracle on unit coordinates. With q the min-max
/// normalized parameters and s = 0.02:
///   u_x = s (q1 x + q6 sin(pi x)), u_y = s (q2 y + q6 sin(pi y)),
///   u_z = s (q3 z + (q4 + q5)/2 sin(pi z)),
/// and MildlyNonlinear adds 0.1 s q6 q7 (x y, y z, 1).
Eigen::MatrixXd synthetic_field(const Eigen::VectorXd& params, const Eigen::MatrixXd& coords,
                                Family family,
                                const ParameterBounds& bounds = ParameterBounds::dataset_ranges());

/// Seeded labelling rule standing in for melt-pool analysis: feasible iff
/// q6 / (q7 + 0.5) > 0.42, which yields a 58/42 split for uniform q.
inline constexpr double kFeasibilityThreshold = 0.42;
bool synthetic_feasible(const Eigen::VectorXd& params,
                        const ParameterBounds& bounds = ParameterBounds::dataset_ranges());

struct GenerateOptions {
  std::size_t count = 100;
  std::size_t corners = 0;
  std::size_t points_per_ring = 100;
  Family family = Family::AffineExact;
  std::uint64_t seed = 0;
};

/// LHS parameters, optional corner samples (ids after the LHS block), unit
/// points sampled per sample, oracle targets and feasibility labels.
Dataset generate_dataset(const GenerateOptions& options);

/// Greedy max-min subset of the columns of `normalized` (k x n): start at the
/// column nearest the cube centroid, then repeatedly add the column whose
/// minimum distance to the selection is largest. Ties go to the lower index.
std::vector<std::size_t> greedy_maxmin_select(const Eigen::MatrixXd& normalized, std::size_t m);

/// Per-dimension symmetric trim fraction f with n (1 - 2f)^k = ceil(n / 2).
double trim_fraction(std::size_t n, Eigen::Index k);

/// Random8020: seeded 80/20 partition of all non-corner samples.
/// GreedyMaxMin: test set of Random8020(seed), train = greedy subset of size
/// `size` drawn from its train set.
/// TrimCorners: train = non-corner samples inside the central sub-box, test =
/// the remaining non-corner samples plus every corner sample.
Split build_split(const Dataset& dataset, SplitKind kind, std::uint64_t seed,
                  std::size_t size = 0);

}  // namespace flare::data
