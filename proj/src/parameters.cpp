#include "flare/parameters.hpp"

#include "flare/error.hpp"

namespace flare {

ParameterBounds ParameterBounds::dataset_ranges() {
  ParameterBounds b;
  b.lo.resize(kParamCount);
  b.hi.resize(kParamCount);
  b.lo << 35.0, 5.0, 20.0, 5.0, 0.2, 5.0, 5.0;
  b.hi << 40.0, 10.0, 25.0, 10.0, 1.0, 10.0, 10.0;
  return b;
}

void ParameterBounds::validate() const {
  if (lo.size() != hi.size() || lo.size() == 0)
    throw Error(ErrorCode::ShapeMismatch, "bounds need matching nonempty lo/hi");
  if (!(lo.array() < hi.array()).all())
    throw Error(ErrorCode::InvalidArgument, "bounds need lo < hi in every dimension");
}

Eigen::VectorXd ParameterBounds::normalize(const Eigen::VectorXd& p) const {
  if (p.size() != lo.size()) throw Error(ErrorCode::LengthMismatch, "parameter vector length");
  return ((p - lo).array() / (hi - lo).array()).matrix();
}

Eigen::MatrixXd ParameterBounds::normalize(const Eigen::MatrixXd& P) const {
  if (P.rows() != lo.size()) throw Error(ErrorCode::LengthMismatch, "parameter matrix rows");
  return ((P.colwise() - lo).array().colwise() / (hi - lo).array()).matrix();
}

Eigen::VectorXd ParameterBounds::denormalize(const Eigen::VectorXd& q) const {
  if (q.size() != lo.size()) throw Error(ErrorCode::LengthMismatch, "parameter vector length");
  return lo + (q.array() * (hi - lo).array()).matrix();
}

}  // namespace flare
