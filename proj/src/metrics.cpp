#include "flare/metrics.hpp"

#include <charconv>
#include <cmath>

#include "flare/error.hpp"

namespace flare::metrics {

ComponentMetrics evaluate_component(const Eigen::Ref<const Eigen::VectorXd>& y_true,
                                    const Eigen::Ref<const Eigen::VectorXd>& y_pred) {
  const Eigen::Index n = y_true.size();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "metrics need at least two points");
  if (y_pred.size() != n) throw Error(ErrorCode::ShapeMismatch, "prediction length differs");

  ComponentMetrics m;
  const Eigen::ArrayXd err = (y_true - y_pred).array();
  const double sse = err.square().sum();
  m.rmse = std::sqrt(sse / static_cast<double>(n));

  const double sst = (y_true.array() - y_true.mean()).square().sum();
  if (sst > 0.0) m.r2 = 1.0 - sse / sst;

  const Eigen::ArrayXd sq = y_true.array().square();
  const double total = sq.sum();
  if (total > 0.0) {
    const Eigen::ArrayXd w = sq / total;
    const double weighted_sse = (w * err.square()).sum();
    m.weighted_rmse = std::sqrt(weighted_sse);
    const double weighted_mean = (w * y_true.array()).sum();
    const double weighted_sst = (w * (y_true.array() - weighted_mean).square()).sum();
    if (weighted_sst > 0.0) m.weighted_r2 = 1.0 - weighted_sse / weighted_sst;
  }
  return m;
}

MetricsBundle evaluate(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred) {
  if (y_true.cols() != 3 || y_pred.cols() != 3 || y_true.rows() != y_pred.rows())
    throw Error(ErrorCode::ShapeMismatch, "metrics need matching n x 3 fields");
  MetricsBundle b;
  for (int c = 0; c < 3; ++c) b.components[c] = evaluate_component(y_true.col(c), y_pred.col(c));
  return b;
}

namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

MetricsBundle average(const std::vector<MetricsBundle>& per_sample) {
  if (per_sample.empty()) throw Error(ErrorCode::InsufficientData, "nothing to average");
  MetricsBundle out;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> r2, rmse, wr2, wrmse;
    for (const auto& b : per_sample) {
      const auto& m = b.components[c];
      if (m.r2) r2.push_back(*m.r2);
      rmse.push_back(m.rmse);
      if (m.weighted_r2) wr2.push_back(*m.weighted_r2);
      if (m.weighted_rmse) wrmse.push_back(*m.weighted_rmse);
    }
    out.components[c].r2 = mean_of(r2);
    out.components[c].rmse = *mean_of(rmse);
    out.components[c].weighted_r2 = mean_of(wr2);
    out.components[c].weighted_rmse = mean_of(wrmse);
  }
  return out;
}

double mean_r2(const MetricsBundle& m) {
  double s = 0.0;
  int n = 0;
  for (const auto& c : m.components)
    if (c.r2) {
      s += *c.r2;
      ++n;
    }
  return n == 0 ? std::nan("") : s / n;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_header() { return "method,split,component,r2,rmse,wr2,wrmse\n"; }

std::string csv_rows(const std::string& method, const std::string& split, const MetricsBundle& m) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("nan"); };
  std::string out;
  for (int c = 0; c < 3; ++c) {
    const auto& x = m.components[c];
    out += method + "," + split + "," + kComponentNames[c] + "," + opt(x.r2) + "," +
           format_double(x.rmse) + "," + opt(x.weighted_r2) + "," + opt(x.weighted_rmse) + "\n";
  }
  return out;
}

}  // namespace flare::metrics
