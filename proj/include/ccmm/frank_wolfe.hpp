#pragma once

#include "ccmm/numeric.hpp"

#include <functional>

namespace ccmm::fw {

struct Problem {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  // Linear minimization oracle: a vertex of the feasible polytope minimizing g.x.
  std::function<Vec(const Vec&)> oracle;
};

struct Options {
  int max_iter = 1000;
  double gap_tol = 1e-9;
};

struct Result {
  Vec x;
  double value = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Away-step conditional gradient started from a convex combination of atoms.
Result minimize(const Problem& problem, const std::vector<Vec>& atoms, const Vec& weights,
                const Options& options = {});

}  // namespace ccmm::fw
