#pragma once

#include <array>
#include <string_view>

#include <Eigen/Dense>

namespace flare {

/// The seven part/process parameters, in storage order.
inline constexpr std::size_t kParamCount = 7;

enum ParamIndex : int {
  kOuterRadius = 0,     // r_out, mm
  kOuterThickness = 1,  // t_out, mm
  kInnerRadius = 2,     // r_in, mm
  kInnerThickness = 3,  // t_in, mm
  kHeight = 4,          // h, mm
  kLaserPower = 5,      // P, kW
  kVelocity = 6,        // v, mm/s
};

inline constexpr std::array<std::string_view, kParamCount> kParamNames{
    "r_out", "t_out", "r_in", "t_in", "h", "power", "velocity"};

/// Per-parameter [lo, hi] box used for sampling and min-max normalization.
struct ParameterBounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  /// Dataset generation ranges (mm, mm, mm, mm, mm, kW, mm/s).
  static ParameterBounds dataset_ranges();

  Eigen::Index dim() const { return lo.size(); }
  void validate() const;

  /// (p - lo) / (hi - lo), componentwise. Works column-wise on k x N matrices.
  Eigen::VectorXd normalize(const Eigen::VectorXd& p) const;
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& P) const;
  Eigen::VectorXd denormalize(const Eigen::VectorXd& q) const;

  bool operator==(const ParameterBounds& o) const { return lo == o.lo && hi == o.hi; }
};

}  // namespace flare
