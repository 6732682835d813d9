#include "ccmm/frank_wolfe.hpp"
#include "ccmm/lp.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ccmm;
using ccmm::test::vec;

namespace {

// Minimum over basic feasible solutions, by enumerating column subsets.
std::optional<double> lp_by_bases(const Mat& A, const Vec& b, const Vec& c) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  std::optional<double> best;
  for (int mask = 0; mask < (1 << n); ++mask) {
    if (__builtin_popcount(mask) != m) continue;
    std::vector<int> cols;
    for (int j = 0; j < n; ++j)
      if (mask & (1 << j)) cols.push_back(j);
    Mat B(m, m);
    for (int k = 0; k < m; ++k) B.col(k) = A.col(cols[k]);
    Eigen::FullPivLU<Mat> lu(B);
    if (lu.rank() < m) continue;
    const Vec xb = lu.solve(b);
    if ((xb.array() < -1e-9).any()) continue;
    double obj = 0.0;
    for (int k = 0; k < m; ++k) obj += c(cols[k]) * xb(k);
    if (!best || obj < *best) best = obj;
  }
  return best;
}

}  // namespace

TEST(Numeric, LogSumExpIsOverflowSafe) {
  EXPECT_NEAR(log_sum_exp(vec({0, 0})), std::log(2.0), 1e-15);
  EXPECT_NEAR(log_sum_exp(vec({1000, 1000})), 1000 + std::log(2.0), 1e-12);
  EXPECT_NEAR(log_sum_exp(vec({-1000, -1000})), -1000 + std::log(2.0), 1e-12);
}

TEST(Numeric, SoftplusAndSigmoidAreStable) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
  EXPECT_NEAR(softplus(-800.0), 0.0, 1e-300);
  EXPECT_NEAR(sigmoid(0.0), 0.5, 1e-16);
  EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
}

TEST(Numeric, XlogxAtZeroIsZero) {
  EXPECT_EQ(xlogx(0.0), 0.0);
  EXPECT_NEAR(xlogx(0.5), 0.5 * std::log(0.5), 1e-16);
}

TEST(Numeric, SaturatingAddKeepsInfinity) {
  EXPECT_EQ(sat_add(kInf, -5.0), kInf);
  EXPECT_EQ(sat_add(1.0, 2.0), 3.0);
  EXPECT_TRUE(is_inf(sat_add(-3.0, kInf)));
}

TEST(Numeric, RequireFiniteThrows) {
  Vec v = vec({1.0, std::nan("")});
  EXPECT_THROW(require_finite(v, "v"), std::invalid_argument);
}

TEST(Lp, MatchesBasisEnumerationOnRandomBoundedPrograms) {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + trial % 4;
    const int m = 1 + trial % 2;
    Mat A(m + 1, n);
    A.topRows(m) = Mat::NullaryExpr(m, n, [&]() { return std::uniform_real_distribution<double>(-1, 1)(rng); });
    A.row(m).setOnes();
    // Right-hand side from a random feasible point, or an arbitrary one.
    Vec b(m + 1);
    if (trial % 3) {
      b = A * random_simplex_weights(rng, n);
    } else {
      b.head(m) = random_uniform(rng, m, -2, 2);
      b(m) = 1.0;
    }
    const Vec c = random_uniform(rng, n, -1, 1);
    const auto oracle = lp_by_bases(A, b, c);
    const auto res = lp::minimize(A, b, c);
    if (!oracle) {
      EXPECT_EQ(res.status, lp::Status::infeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(res.status, lp::Status::optimal) << "trial " << trial;
    EXPECT_NEAR(res.objective, *oracle, 1e-8) << "trial " << trial;
    EXPECT_LE((A * res.x - b).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_GE(res.x.minCoeff(), -1e-12);
  }
}

TEST(Lp, DetectsUnboundedness) {
  Mat A(1, 2);
  A << 1, -1;
  const auto res = lp::minimize(A, vec({0}), vec({-1, 0}));
  EXPECT_EQ(res.status, lp::Status::unbounded);
}

TEST(Lp, HandlesNoConstraints) {
  const auto res = lp::minimize(Mat(0, 2), Vec(0), vec({1, 2}));
  ASSERT_EQ(res.status, lp::Status::optimal);
  EXPECT_EQ(res.objective, 0.0);
}

TEST(FrankWolfe, MinimizesQuadraticOverSimplex) {
  // min |x - t|^2 over the simplex; t inside, so the minimizer is t.
  const Vec t = vec({0.2, 0.3, 0.5});
  fw::Problem p;
  p.value = [&](const Vec& x) { return (x - t).squaredNorm(); };
  p.gradient = [&](const Vec& x) { return Vec(2 * (x - t)); };
  p.oracle = [](const Vec& g) {
    Eigen::Index i = 0;
    g.minCoeff(&i);
    return Vec(Vec::Unit(3, i));
  };
  std::vector<Vec> atoms = {Vec::Unit(3, 0), Vec::Unit(3, 1), Vec::Unit(3, 2)};
  fw::Options o;
  o.gap_tol = 1e-12;
  const auto res = fw::minimize(p, atoms, Vec::Constant(3, 1.0 / 3), o);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(max_abs_diff(res.x, t), 1e-6);
}

TEST(FrankWolfe, ReachesFaceMinimizer) {
  // Target outside the simplex: projection lands on the edge {x0 + x1 = 1}.
  const Vec t = vec({1.0, 0.6, -0.4});
  fw::Problem p;
  p.value = [&](const Vec& x) { return (x - t).squaredNorm(); };
  p.gradient = [&](const Vec& x) { return Vec(2 * (x - t)); };
  p.oracle = [](const Vec& g) {
    Eigen::Index i = 0;
    g.minCoeff(&i);
    return Vec(Vec::Unit(3, i));
  };
  std::vector<Vec> atoms = {Vec::Unit(3, 0), Vec::Unit(3, 1), Vec::Unit(3, 2)};
  const auto res = fw::minimize(p, atoms, Vec::Constant(3, 1.0 / 3));
  EXPECT_LE(max_abs_diff(res.x, vec({0.7, 0.3, 0.0})), 1e-6);
}
