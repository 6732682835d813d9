#include "ccmm/frank_wolfe.hpp"

#include <cmath>
#include <stdexcept>

namespace ccmm::fw {
namespace {

double line_search(const Problem& p, const Vec& x, const Vec& d, double step_max) {
  auto slope = [&](double t) { return p.gradient(x + t * d).dot(d); };
  if (slope(step_max) <= 0.0) return step_max;
  double lo = 0.0, hi = step_max;
  for (int i = 0; i < 100 && hi - lo > 1e-16 * step_max; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) > 0.0) hi = mid;
    else lo = mid;
  }
  // The slope may be unreliable where gradients are clamped; keep the better endpoint.
  const double f_lo = p.value(x + lo * d);
  const double f_hi = p.value(x + hi * d);
  return f_hi < f_lo ? hi : lo;
}

int find_atom(const std::vector<Vec>& atoms, const Vec& a) {
  for (size_t i = 0; i < atoms.size(); ++i)
    if (max_abs_diff(atoms[i], a) <= 1e-12) return static_cast<int>(i);
  return -1;
}

}  // namespace

Result minimize(const Problem& problem, const std::vector<Vec>& atoms_in, const Vec& weights_in,
                const Options& options) {
  if (atoms_in.empty() || static_cast<Eigen::Index>(atoms_in.size()) != weights_in.size())
    throw std::invalid_argument("conditional gradient needs a weighted starting set");
  std::vector<Vec> atoms = atoms_in;
  std::vector<double> w(weights_in.data(), weights_in.data() + weights_in.size());
  Vec x = Vec::Zero(atoms[0].size());
  for (size_t i = 0; i < atoms.size(); ++i) x += w[i] * atoms[i];

  Result res;
  double fx = problem.value(x);
  for (int it = 0; it < options.max_iter; ++it) {
    res.iterations = it + 1;
    const Vec g = problem.gradient(x);
    const Vec s = problem.oracle(g);
    const Vec d_fw = s - x;
    const double gap = -g.dot(d_fw);
    res.gap = gap;
    if (gap <= options.gap_tol) {
      res.converged = true;
      break;
    }

    int away = -1;
    double worst = -kInf;
    for (size_t i = 0; i < atoms.size(); ++i) {
      if (w[i] <= 0.0) continue;
      const double v = g.dot(atoms[i]);
      if (v > worst) {
        worst = v;
        away = static_cast<int>(i);
      }
    }
    const Vec d_away = away >= 0 ? Vec(x - atoms[away]) : Vec(Vec::Zero(x.size()));
    const bool use_away = away >= 0 && w[away] < 1.0 && -g.dot(d_away) > gap;

    Vec x_new;
    if (use_away) {
      const double step_max = w[away] / (1.0 - w[away]);
      const double t = line_search(problem, x, d_away, step_max);
      x_new = x + t * d_away;
      for (auto& wi : w) wi *= (1.0 + t);
      w[away] -= t;
      if (t >= step_max) w[away] = 0.0;
    } else {
      const double t = line_search(problem, x, d_fw, 1.0);
      x_new = x + t * d_fw;
      for (auto& wi : w) wi *= (1.0 - t);
      int idx = find_atom(atoms, s);
      if (idx < 0) {
        atoms.push_back(s);
        w.push_back(0.0);
        idx = static_cast<int>(atoms.size()) - 1;
      }
      w[idx] += t;
    }
    const double f_new = problem.value(x_new);
    // Near the optimum the decrease drops below rounding, so only a clear increase stops the loop.
    if (!(f_new <= fx + 1e-14 * (1.0 + std::abs(fx)))) break;
    const bool stalled = (x_new - x).norm() < 1e-15;
    x = x_new;
    fx = f_new;
    // Drop atoms with vanished weight.
    for (size_t i = atoms.size(); i-- > 0;) {
      if (w[i] <= 1e-300) {
        atoms.erase(atoms.begin() + i);
        w.erase(w.begin() + i);
      }
    }
    if (stalled) break;
  }
  if (!res.converged) {
    const Vec g = problem.gradient(x);
    res.gap = g.dot(x - problem.oracle(g));
    res.converged = res.gap <= options.gap_tol;
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace ccmm::fw
