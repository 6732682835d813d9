#pragma once

#include "ccmm/numeric.hpp"

namespace ccmm::lp {

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  Vec x;
  double objective = 0.0;
};

// min c.x  s.t.  A x = b, x >= 0.  Dense two-phase simplex with Bland's rule.
Result minimize(const Mat& A, const Vec& b, const Vec& c, double tol = 1e-9);

}  // namespace ccmm::lp
