#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace flare::metrics {

/// Scores for one displacement component. A value is empty when it is
/// undefined (zero variance, or all-zero targets for the weighted variants).
struct ComponentMetrics {
  std::optional<double> r2;
  double rmse = 0.0;
  std::optional<double> weighted_r2;
  std::optional<double> weighted_rmse;
};

struct MetricsBundle {
  std::array<ComponentMetrics, 3> components;  // u_x, u_y, u_z
};

inline constexpr std::array<const char*, 3> kComponentNames{"u_x", "u_y", "u_z"};

/// Per-component R^2, RMSE and the squared-target weighted variants, with
/// w_i = y_i^2 / sum_j y_j^2 and the weighted R^2 measured about the
/// weighted mean.
ComponentMetrics evaluate_component(const Eigen::Ref<const Eigen::VectorXd>& y_true,
                                    const Eigen::Ref<const Eigen::VectorXd>& y_pred);
MetricsBundle evaluate(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred);

/// Unweighted mean over samples; undefined entries are skipped, and a metric
/// stays undefined only if it is undefined for every sample.
MetricsBundle average(const std::vector<MetricsBundle>& per_sample);

/// Mean of the defined R^2 values over the three components.
double mean_r2(const MetricsBundle& m);

/// CSV header: method,split,component,r2,rmse,wr2,wrmse
std::string csv_header();
/// Three rows, one per component. Undefined values are written as "nan".
std::string csv_rows(const std::string& method, const std::string& split, const MetricsBundle& m);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace flare::metrics
