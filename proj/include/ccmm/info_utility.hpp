#pragma once

#include "ccmm/cost.hpp"

namespace ccmm {

struct EventUtility {
  double value = 0.0;
  Vec minimizer;
  double residual = 0.0;
  bool converged = true;
  bool unique = true;
};

struct ConditionalPrice {
  Vec mu;
  bool unique = true;
};

struct OptimizingSequence {
  Vec target;                  // conditional price on E at the start state
  std::vector<Vec> states;     // state after each accepted step
  std::vector<double> trace;   // D(target || state) after each accepted step
  std::vector<double> guaranteed;  // min over E of the cumulative payoff minus cost
};

double util_belief(const CostModel& m, const Vec& mu, const Vec& q);
EventUtility util_event(const CostModel& m, const OutcomeSet& E, const Vec& q);
ConditionalPrice conditional_price(const CostModel& m, const OutcomeSet& E, const Vec& q);
double excess_util(const CostModel& m, const Vec& mu, const OutcomeSet& E, const Vec& q,
                   double tol = 1e-9);
OptimizingSequence optimizing_sequence(const CostModel& m, const OutcomeSet& E, const Vec& q,
                                       int n_steps);

// Guaranteed payoff of holding bundle r bought at state q, for outcomes in E.
double guaranteed_payoff(const CostModel& m, const OutcomeSet& E, const Vec& q, const Vec& r);

// State maximizing mu.q' - C(q'), starting from q.
Vec best_response(const CostModel& m, const Vec& mu, const Vec& q);

}  // namespace ccmm
