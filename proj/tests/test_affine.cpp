#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "flare/affine.hpp"
#include "flare/error.hpp"
#include "flare/random.hpp"

using namespace flare;
using namespace flare::affine;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform();
  return m;
}

double objective(const Eigen::MatrixXd& P, const Eigen::VectorXd& target, const Eigen::VectorXd& a) {
  return (P * a - target).squaredNorm();
}

// Exhaustive search over the simplex of the columns other than `excluded`,
// with coordinates on a 1/steps lattice.
double grid_best(const Eigen::MatrixXd& P, Eigen::Index excluded, int steps) {
  const Eigen::Index N = P.cols();
  std::vector<Eigen::Index> free;
  for (Eigen::Index j = 0; j < N; ++j)
    if (j != excluded) free.push_back(j);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(N);
  double best = std::numeric_limits<double>::infinity();
  const Eigen::VectorXd target = P.col(excluded);
  std::function<void(std::size_t, int)> rec = [&](std::size_t slot, int left) {
    if (slot + 1 == free.size()) {
      a[free[slot]] = static_cast<double>(left) / steps;
      best = std::min(best, objective(P, target, a));
      return;
    }
    for (int u = 0; u <= left; ++u) {
      a[free[slot]] = static_cast<double>(u) / steps;
      rec(slot + 1, left - u);
    }
  };
  rec(0, steps);
  return best;
}

// Minimum-norm constrained least squares through an SVD null-space basis.
Eigen::VectorXd min_norm_oracle(const Eigen::MatrixXd& P, const Eigen::VectorXd& p) {
  const Eigen::Index N = P.cols();
  const Eigen::VectorXd center = Eigen::VectorXd::Constant(N, 1.0 / static_cast<double>(N));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd::Ones(1, N), Eigen::ComputeFullV);
  const Eigen::MatrixXd Z = svd.matrixV().rightCols(N - 1);
  const Eigen::MatrixXd A = P * Z;
  Eigen::JacobiSVD<Eigen::MatrixXd> s2(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  s2.setThreshold(1e-12);
  const Eigen::VectorXd beta = s2.solve(p - P * center);
  return center + Z * beta;
}

}  // namespace

TEST_CASE("simplex projection satisfies its variational inequality") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(8));
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-3.0, 3.0);
    const Eigen::VectorXd x = project_to_simplex(v);
    CHECK(std::abs(x.sum() - 1.0) < 1e-12);
    CHECK(x.minCoeff() >= 0.0);
    // (v - x) . (e_j - x) <= 0 for every vertex e_j
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[j] = 1.0;
      CHECK((v - x).dot(e - x) <= 1e-12);
    }
  }
  Eigen::VectorXd inside(3);
  inside << 0.2, 0.3, 0.5;
  CHECK((project_to_simplex(inside) - inside).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("two samples: all mass on the other one") {
  Eigen::MatrixXd P(2, 2);
  P << 0.1, 0.7, 0.4, 0.2;
  const AffineCoefficients a = solve_training_coeffs(P, 0);
  CHECK(a.alpha[0] == 0.0);
  CHECK(a.alpha[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.residual == doctest::Approx((P.col(1) - P.col(0)).norm()).epsilon(1e-10));
  CHECK(a.mode == CoeffMode::TrainSimplexExcl);
  CHECK(a.excluded == 0);
}

TEST_CASE("a midpoint is reconstructed from its two neighbours") {
  Eigen::MatrixXd P(2, 3);
  P << 0.0, 0.5, 1.0, 0.2, 0.4, 0.6;
  const AffineCoefficients a = solve_training_coeffs(P, 1);
  CHECK(a.alpha[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(a.alpha[1] == 0.0);
  CHECK(a.alpha[2] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(a.residual < 1e-9);
}

TEST_CASE("training solver matches a grid search and satisfies KKT") {
  Rng rng(77);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index N = 2 + static_cast<Eigen::Index>(rng.below(4));  // 2..5
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(3));  // 1..3
    const Eigen::MatrixXd P = random_matrix(k, N, rng);
    const Eigen::Index i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(N)));
    const AffineCoefficients a = solve_training_coeffs(P, i);
    const double ours = objective(P, P.col(i), a.alpha);
    const double grid = grid_best(P, i, 100);
    CHECK(ours <= grid + 1e-12);
    CHECK(grid - ours <= 1e-3);
    CHECK(training_kkt_residual(P, i, a.alpha) < 1e-7);
    CHECK(std::abs(a.alpha.sum() - 1.0) < 1e-9);
    CHECK(a.alpha.minCoeff() >= -1e-12);
    CHECK(a.alpha[i] == 0.0);
    CHECK(a.residual == doctest::Approx(std::sqrt(ours)).epsilon(1e-9));
  }
}

TEST_CASE("training solver errors") {
  try {
    solve_training_coeffs(Eigen::MatrixXd::Ones(3, 1), 0);
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
  }
  CHECK_THROWS_AS(solve_training_coeffs(Eigen::MatrixXd::Ones(3, 3), 5), Error);
  Rng rng(5);
  const Eigen::MatrixXd P = random_matrix(3, 8, rng);
  try {
    solve_training_coeffs(P, 0, {1, 1e-9});
    FAIL("expected SolverDivergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SolverDivergence);
  }
}

TEST_CASE("coefficient matrix stacks the per-sample solves") {
  Rng rng(6);
  const Eigen::MatrixXd P = random_matrix(3, 5, rng);
  const Eigen::MatrixXd A = training_coefficient_matrix(P);
  CHECK(A.rows() == 5);
  for (Eigen::Index i = 0; i < 5; ++i) {
    CHECK(A(i, i) == 0.0);
    CHECK((A.col(i) - solve_training_coeffs(P, i).alpha).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("inference at a training point in the unique regime returns e_j") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index k = 3;
    const Eigen::Index N = 1 + static_cast<Eigen::Index>(rng.below(4));  // N - 1 <= k
    const Eigen::MatrixXd P = random_matrix(k, N, rng);
    const Eigen::Index j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(N)));
    const AffineCoefficients a = solve_inference_coeffs(P, P.col(j));
    CHECK(a.residual < 1e-9);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(N);
    e[j] = 1.0;
    CHECK((a.alpha - e).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(a.mode == CoeffMode::InferenceAffine);
  }
}

TEST_CASE("single training sample gives alpha = 1") {
  Eigen::MatrixXd P(2, 1);
  P << 0.3, 0.9;
  Eigen::VectorXd p(2);
  p << 0.0, 0.0;
  const AffineCoefficients a = solve_inference_coeffs(P, p);
  REQUIRE(a.alpha.size() == 1);
  CHECK(a.alpha[0] == 1.0);
}

TEST_CASE("extrapolation inside the affine hull uses a negative coefficient") {
  Eigen::MatrixXd P(1, 2);
  P << 0.0, 1.0;
  const AffineCoefficients a = solve_inference_coeffs(P, Eigen::VectorXd::Constant(1, 1.5));
  CHECK(a.alpha[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(a.alpha[1] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(a.residual < 1e-12);
}

TEST_CASE("inference returns the minimum-norm minimizer") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(4));
    const Eigen::Index N = 2 + static_cast<Eigen::Index>(rng.below(10));
    const Eigen::MatrixXd P = random_matrix(k, N, rng);
    Eigen::VectorXd p(k);
    for (Eigen::Index r = 0; r < k; ++r) p[r] = rng.uniform(-0.5, 1.5);
    const AffineCoefficients a = solve_inference_coeffs(P, p);
    const Eigen::VectorXd want = min_norm_oracle(P, p);
    CHECK((a.alpha - want).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(a.alpha.sum() - 1.0) < 1e-9);
    CHECK(a.residual == doctest::Approx((P * a.alpha - p).norm()).epsilon(1e-12));
  }
}

TEST_CASE("inference is deterministic and rejects bad shapes") {
  Rng rng(10);
  const Eigen::MatrixXd P = random_matrix(3, 9, rng);
  const Eigen::VectorXd p = P.rowwise().mean();
  CHECK(solve_inference_coeffs(P, p).alpha == solve_inference_coeffs(P, p).alpha);
  CHECK_THROWS_AS(solve_inference_coeffs(P, Eigen::VectorXd::Zero(2)), Error);
  CHECK_THROWS_AS(solve_inference_coeffs(Eigen::MatrixXd(3, 0), Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("weight mixing") {
  Rng rng(11);
  const Eigen::MatrixXd W = random_matrix(40, 5, rng) * 2.0 - Eigen::MatrixXd::Ones(40, 5);
  SUBCASE("unit vector selects a column") {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(5);
    e[3] = 1.0;
    CHECK(mix_weights(W, e) == W.col(3));
  }
  SUBCASE("identical columns average to themselves") {
    Eigen::MatrixXd same(40, 2);
    same.col(0) = W.col(0);
    same.col(1) = W.col(0);
    CHECK((mix_weights(same, Eigen::Vector2d(0.5, 0.5)) - W.col(0)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("matches a double-loop accumulation") {
    Eigen::VectorXd a(5);
    for (int j = 0; j < 5; ++j) a[j] = rng.uniform(-1.0, 1.0);
    const Eigen::VectorXd got = mix_weights(W, a);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < W.cols(); ++j) acc += W(r, j) * a[j];
      CHECK(std::abs(got[r] - acc) < 1e-12);
    }
  }
  SUBCASE("is linear in the coefficients") {
    Eigen::VectorXd a(5), b(5);
    for (int j = 0; j < 5; ++j) {
      a[j] = rng.uniform(-1.0, 1.0);
      b[j] = rng.uniform(-1.0, 1.0);
    }
    const Eigen::VectorXd lhs = mix_weights(W, Eigen::VectorXd(0.3 * a + 2.0 * b));
    const Eigen::VectorXd rhs = 0.3 * mix_weights(W, a) + 2.0 * mix_weights(W, b);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("length mismatch") {
    try {
      mix_weights(W, Eigen::VectorXd::Zero(4));
      FAIL("expected LengthMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::LengthMismatch);
    }
  }
}
