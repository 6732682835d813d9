#include "ccmm/numeric.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ccmm {

double xlogx(double x) {
  if (x <= 0.0) return 0.0;
  return x * std::log(x);
}

double log_sum_exp(const Vec& q) {
  if (q.size() == 0) return -kInf;
  const double m = q.maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) s += std::exp(q(i) - m);
  return m + std::log(s);
}

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec softmax(const Vec& q) {
  const double m = q.maxCoeff();
  Vec p = (q.array() - m).exp().matrix();
  return p / p.sum();
}

double safe_log(double x) { return std::log(std::max(x, 1e-300)); }

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string("non-finite ") + what);
}

Vec random_simplex_weights(Rng& rng, int n) {
  std::exponential_distribution<double> e(1.0);
  Vec w(n);
  for (int i = 0; i < n; ++i) w(i) = e(rng);
  return w / w.sum();
}

Vec random_uniform(Rng& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

double max_abs_diff(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return kInf;
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace ccmm
