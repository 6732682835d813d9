#pragma once

#include "ccmm/cost.hpp"

#include <optional>
#include <string>

namespace ccmm {

struct LcmmModel {
  SpacePtr space;
  BlockStructure blocks = BlockStructure::singletons(0);
  std::vector<CostModel> block_costs;
  Mat A;  // K x Mc
  Vec b;  // Mc

  int dim() const { return blocks.dim(); }
  int num_constraints() const { return static_cast<int>(A.cols()); }
  // Throws std::invalid_argument on a malformed model.
  void validate() const;
  // Same blocks and constraints with each block cost replaced.
  LcmmModel with_block_costs(std::vector<CostModel> costs) const;
};

struct ArbitrageSolution {
  Vec eta;
  Vec delta;
  double value = 0.0;
  double certificate_gap = 0.0;
  double infeasibility = 0.0;
  int iterations = 0;
  bool converged = true;
};

double direct_sum_cost(const LcmmModel& model, const Vec& q);
double direct_sum_conjugate(const LcmmModel& model, const Vec& mu);
double direct_sum_divergence(const LcmmModel& model, const Vec& mu, const Vec& q);
Vec direct_sum_price(const LcmmModel& model, const Vec& q);
Vec direct_sum_conjugate_gradient(const LcmmModel& model, const Vec& mu);

std::pair<double, ArbitrageSolution> lcmm_cost(const LcmmModel& model, const Vec& q,
                                              double tol = 1e-9);
double lcmm_divergence(const LcmmModel& model, const Vec& mu, const Vec& q);
// R(mu) + C(q) - q.mu with R the direct-sum conjugate plus the constraint indicator.
double lcmm_divergence_generic(const LcmmModel& model, const Vec& mu, const Vec& q);
bool in_constraint_set(const LcmmModel& model, const Vec& mu, double tol = 1e-9);
bool certificate_check(const LcmmModel& model, const Vec& q, const Vec& eta, double tol = 1e-7);

LcmmModel medal_count_model(int n);
// K independent binary blocks and no constraints.
LcmmModel independent_binary_model(int K);

CostModel make_lcmm_cost(LcmmModel model);

enum class TightKind { tight, not_tight, tight_by_binary };

struct TightnessVerdict {
  TightKind kind = TightKind::tight;
  int samples = 0;
  std::optional<Vec> counterexample;
  std::optional<Vec> realization;
};

std::string to_string(TightKind kind);

TightnessVerdict tightness_check(const LcmmModel& model, int g, std::uint64_t seed = 7,
                                 int samples_per_value = 16);

// Observation whose realizations are the distinct values of block g's payoffs.
Observation block_observation(const LcmmModel& model, int g);

}  // namespace ccmm
