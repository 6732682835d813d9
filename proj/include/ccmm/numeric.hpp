#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace ccmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using OutcomeSet = std::vector<int>;

// +inf is the value of R outside the price space.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_inf(double v) { return v == kInf; }

// Saturating sum: +inf absorbs any finite or -inf operand.
inline double sat_add(double a, double b) {
  if (a == kInf || b == kInf) return kInf;
  return a + b;
}

double xlogx(double x);
double log_sum_exp(const Vec& q);
double softplus(double x);
double sigmoid(double x);
Vec softmax(const Vec& q);

// Clamped logarithm used in gradients of entropy-type conjugates.
double safe_log(double x);

void require_finite(const Vec& v, const char* what);

using Rng = std::mt19937_64;

// Uniform point of the probability simplex of size n.
Vec random_simplex_weights(Rng& rng, int n);
Vec random_uniform(Rng& rng, int n, double lo, double hi);

double max_abs_diff(const Vec& a, const Vec& b);

}  // namespace ccmm
