#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "flare/io.hpp"

namespace flare::feas {

/// Number of monomials of total degree 1..degree in `inputs` variables.
std::size_t poly_feature_count(std::size_t inputs, int degree);

/// All monomials of total degree 1..degree (no constant), degree-graded and
/// lexicographic within a degree: x1..x7, x1^2, x1 x2, ..., x7^2, ...
Eigen::VectorXd poly_features(const Eigen::VectorXd& x, int degree);
/// Row-wise version; rows of `X` are inputs.
Eigen::MatrixXd poly_features(const Eigen::MatrixXd& X, int degree);

struct FeasibilityModel {
  int degree = 2;
  Eigen::VectorXd coefficients;  // one per polynomial feature
  double intercept = 0.0;
  double l1_strength = 0.0;
  long iterations = 0;
};

struct LogRegOptions {
  long max_iterations = 200'000;
  double tolerance = 1e-10;          // objective change
  double gradient_tolerance = 1e-8;  // max-norm of the proximal gradient mapping
};

/// Mean logistic loss + l1 * ||coef||_1 (intercept unpenalized).
double logreg_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& coef, double intercept, double l1);

/// Proximal gradient (soft-thresholding) on the features `X` (rows are
/// samples) with binary labels y in {0, 1}. The returned model's degree is
/// left for the caller to set. Throws SingleClass if only one label occurs.
FeasibilityModel train_logreg_l1(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double l1,
                                 const LogRegOptions& options = {});

/// Linear score (logit) and probability for a normalized parameter vector.
double decision_score(const FeasibilityModel& model, const Eigen::VectorXd& normalized_params);
double predict_proba(const FeasibilityModel& model, const Eigen::VectorXd& normalized_params);

/// Area under the ROC curve via the Mann-Whitney rank statistic (ties get
/// half credit). Throws SingleClass if only one label occurs.
double roc_auc(const Eigen::VectorXd& labels, const Eigen::VectorXd& scores);

/// log10-spaced grid from 1e-4 to 1.
std::vector<double> default_l1_grid();

/// k-fold cross-validated choice of l1 (lowest mean held-out log loss; ties
/// go to the larger l1).
double select_l1_strength(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const std::vector<double>& grid, int folds, std::uint64_t seed);

/// Stored as a single column [coefficients; intercept] with kind tag "feas";
/// widths are {inputs, feature count}.
io::Checkpoint to_checkpoint(const FeasibilityModel& model, std::size_t inputs);
FeasibilityModel feasibility_from_checkpoint(const io::Checkpoint& ckpt);

}  // namespace flare::feas
