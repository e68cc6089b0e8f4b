#pragma once

#include <Eigen/Dense>

namespace flare::affine {

enum class CoeffMode { TrainSimplexExcl, InferenceAffine };

struct AffineCoefficients {
  Eigen::VectorXd alpha;
  CoeffMode mode = CoeffMode::InferenceAffine;
  Eigen::Index excluded = -1;  // sample left out in TrainSimplexExcl mode
  double residual = 0.0;       // ||P alpha - p||_2
  long iterations = 0;
};

struct SimplexSolverOptions {
  long max_iterations = 100'000;
  double tolerance = 1e-9;  // gradient-mapping norm
};

/// Euclidean projection onto {x >= 0, sum x = 1} (sort-based, exact).
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

/// Coefficients reconstructing column i of the (normalized) parameter matrix
/// from the other columns:
///   min ||P a - p_i||^2  s.t.  sum a = 1, a >= 0, a_i = 0.
/// Solved by accelerated projected gradient with the 1/L step, L = 2 ||P||_2^2.
/// Throws SolverDivergence if the iteration cap is reached first.
AffineCoefficients solve_training_coeffs(const Eigen::MatrixXd& P, Eigen::Index i,
                                         const SimplexSolverOptions& options = {});

/// Gradient-mapping norm L * ||a - proj(a - grad/L)|| of the training problem
/// at `alpha`, restricted to the coordinates other than `excluded`. Zero
/// exactly at a KKT point.
double training_kkt_residual(const Eigen::MatrixXd& P, Eigen::Index excluded,
                             const Eigen::VectorXd& alpha);

/// Minimum-norm minimizer of ||P a - p||^2 subject only to sum a = 1.
AffineCoefficients solve_inference_coeffs(const Eigen::MatrixXd& P, const Eigen::VectorXd& p);

/// N x N matrix whose column i holds the training coefficients of sample i.
Eigen::MatrixXd training_coefficient_matrix(const Eigen::MatrixXd& P,
                                            const SimplexSolverOptions& options = {});

/// Flat weights W * alpha. Throws LengthMismatch when alpha has the wrong size.
Eigen::VectorXd mix_weights(const Eigen::MatrixXd& W, const Eigen::VectorXd& alpha);
inline Eigen::VectorXd mix_weights(const Eigen::MatrixXd& W, const AffineCoefficients& a) {
  return mix_weights(W, a.alpha);
}

}  // namespace flare::affine
