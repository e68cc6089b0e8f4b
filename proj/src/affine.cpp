#include "flare/affine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "flare/error.hpp"

namespace flare::affine {

namespace {

// Reduced simplex least-squares problem min ||A b - p||^2, b in the simplex.
struct SimplexLs {
  Eigen::MatrixXd gram;   // A^T A
  Eigen::VectorXd cross;  // A^T p
  double lipschitz = 0.0; // 2 * lambda_max(A^T A)

  Eigen::VectorXd gradient(const Eigen::VectorXd& b) const { return 2.0 * (gram * b - cross); }

  double mapping_norm(const Eigen::VectorXd& b) const {
    if (lipschitz <= 0.0) return 0.0;
    const Eigen::VectorXd step = project_to_simplex(b - gradient(b) / lipschitz);
    return lipschitz * (b - step).norm();
  }
};

SimplexLs make_problem(const Eigen::MatrixXd& A, const Eigen::VectorXd& p) {
  SimplexLs prob;
  prob.gram = A.transpose() * A;
  prob.cross = A.transpose() * p;
  if (prob.gram.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prob.gram, Eigen::EigenvaluesOnly);
    prob.lipschitz = 2.0 * std::max(eig.eigenvalues().maxCoeff(), 0.0);
  }
  return prob;
}

// Solve the equality-constrained problem on the support of `b`; returns an
// empty vector if the solution leaves the nonnegative orthant.
Eigen::VectorXd polish_on_support(const SimplexLs& prob, const Eigen::VectorXd& b) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < b.size(); ++j)
    if (b[j] > 1e-12) support.push_back(j);
  const auto s = static_cast<Eigen::Index>(support.size());
  if (s == 0) return {};
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
  Eigen::VectorXd rhs(s + 1);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index c = 0; c < s; ++c) kkt(a, c) = 2.0 * prob.gram(support[a], support[c]);
    kkt(a, s) = 1.0;
    kkt(s, a) = 1.0;
    rhs[a] = 2.0 * prob.cross[support[a]];
  }
  rhs[s] = 1.0;
  const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(b.size());
  for (Eigen::Index a = 0; a < s; ++a) {
    if (!(sol[a] >= 0.0)) return {};
    out[support[a]] = sol[a];
  }
  const double total = out.sum();
  if (!(std::abs(total - 1.0) < 1e-9)) return {};
  return out / total;
}

}  // namespace

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) return v;
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

AffineCoefficients solve_training_coeffs(const Eigen::MatrixXd& P, Eigen::Index i,
                                         const SimplexSolverOptions& options) {
  const Eigen::Index N = P.cols();
  if (N < 2) throw Error(ErrorCode::InsufficientData, "training coefficients need N >= 2");
  if (i < 0 || i >= N) throw Error(ErrorCode::InvalidArgument, "sample index out of range");

  Eigen::MatrixXd others(P.rows(), N - 1);
  for (Eigen::Index j = 0, c = 0; j < N; ++j)
    if (j != i) others.col(c++) = P.col(j);
  const Eigen::VectorXd target = P.col(i);
  const SimplexLs prob = make_problem(others, target);
  const Eigen::Index n = N - 1;

  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  long iterations = 0;
  bool converged = n == 1 || prob.lipschitz <= 0.0 || prob.mapping_norm(x) < options.tolerance;

  // FISTA with gradient-based restart, plus an exact solve on the current
  // support every few iterations once the active set has settled.
  Eigen::VectorXd y = x;
  double t = 1.0;
  while (!converged && iterations < options.max_iterations) {
    ++iterations;
    const Eigen::VectorXd x_next = project_to_simplex(y - prob.gradient(y) / prob.lipschitz);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if ((y - x_next).dot(x_next - x) > 0.0) {
      y = x_next;
      t = 1.0;
    } else {
      y = x_next + ((t - 1.0) / t_next) * (x_next - x);
      t = t_next;
    }
    x = x_next;
    if (prob.mapping_norm(x) < options.tolerance) {
      converged = true;
    } else if (iterations % 25 == 0) {
      Eigen::VectorXd polished = polish_on_support(prob, x);
      if (polished.size() == n && prob.mapping_norm(polished) < options.tolerance) {
        x = std::move(polished);
        converged = true;
      }
    }
  }
  if (!converged)
    throw Error(ErrorCode::SolverDivergence,
                "simplex solver hit " + std::to_string(options.max_iterations) +
                    " iterations without satisfying KKT (gradient mapping " +
                    std::to_string(prob.mapping_norm(x)) + ")");

  AffineCoefficients out;
  out.mode = CoeffMode::TrainSimplexExcl;
  out.excluded = i;
  out.iterations = iterations;
  out.alpha = Eigen::VectorXd::Zero(N);
  for (Eigen::Index j = 0, c = 0; j < N; ++j)
    if (j != i) out.alpha[j] = x[c++];
  out.residual = (P * out.alpha - target).norm();
  return out;
}

double training_kkt_residual(const Eigen::MatrixXd& P, Eigen::Index excluded,
                             const Eigen::VectorXd& alpha) {
  const Eigen::Index N = P.cols();
  if (alpha.size() != N) throw Error(ErrorCode::LengthMismatch, "alpha length != N");
  Eigen::MatrixXd others(P.rows(), N - 1);
  Eigen::VectorXd reduced(N - 1);
  for (Eigen::Index j = 0, c = 0; j < N; ++j)
    if (j != excluded) {
      others.col(c) = P.col(j);
      reduced[c++] = alpha[j];
    }
  return make_problem(others, P.col(excluded)).mapping_norm(reduced);
}

AffineCoefficients solve_inference_coeffs(const Eigen::MatrixXd& P, const Eigen::VectorXd& p) {
  const Eigen::Index N = P.cols();
  if (N < 1) throw Error(ErrorCode::InsufficientData, "inference needs at least one sample");
  if (p.size() != P.rows()) throw Error(ErrorCode::LengthMismatch, "query length != P rows");
  AffineCoefficients out;
  out.mode = CoeffMode::InferenceAffine;
  if (N == 1) {
    out.alpha = Eigen::VectorXd::Ones(1);
  } else {
    // alpha = 1/N + Z beta with Z an orthonormal basis of the sum-zero
    // subspace (trailing columns of the Householder reflector taking
    // 1/sqrt(N) to e_1). The offset is orthogonal to range(Z), so the
    // minimum-norm beta gives the minimum-norm alpha.
    const double n = static_cast<double>(N);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(N, 1.0 / std::sqrt(n));
    v[0] -= 1.0;
    const Eigen::MatrixXd reflector =
        Eigen::MatrixXd::Identity(N, N) - (2.0 / v.squaredNorm()) * v * v.transpose();
    const Eigen::MatrixXd Z = reflector.rightCols(N - 1);
    const Eigen::VectorXd offset = Eigen::VectorXd::Constant(N, 1.0 / n);
    const Eigen::MatrixXd A = P * Z;
    const Eigen::VectorXd beta = A.completeOrthogonalDecomposition().solve(p - P * offset);
    out.alpha = offset + Z * beta;
  }
  out.residual = (P * out.alpha - p).norm();
  return out;
}

Eigen::MatrixXd training_coefficient_matrix(const Eigen::MatrixXd& P,
                                            const SimplexSolverOptions& options) {
  const Eigen::Index N = P.cols();
  Eigen::MatrixXd A(N, N);
  for (Eigen::Index i = 0; i < N; ++i) A.col(i) = solve_training_coeffs(P, i, options).alpha;
  return A;
}

Eigen::VectorXd mix_weights(const Eigen::MatrixXd& W, const Eigen::VectorXd& alpha) {
  if (alpha.size() != W.cols())
    throw Error(ErrorCode::LengthMismatch, "alpha has " + std::to_string(alpha.size()) +
                                               " entries for " + std::to_string(W.cols()) +
                                               " weight columns");
  return W * alpha;
}

}  // namespace flare::affine
