#pragma once

#include "ccmm/cost.hpp"

#include <optional>
#include <string>

namespace ccmm {

struct ConsistencyProbe {
  int cell = 0;
  Vec mu;
  double offset_conjugate = 0.0;  // R(mu) - b^x
  double roof = 0.0;              // best condensed decomposition value
  double violation = 0.0;         // offset_conjugate - roof
  Vec weights;                    // outcome weights of the best decomposition
};

struct ConsistencyVerdict {
  bool consistent = true;
  std::string reason;
  std::vector<ConsistencyProbe> probes;
  std::optional<ConsistencyProbe> witness;
  std::optional<std::pair<int, int>> overlap;
  double worst_violation = 0.0;
};

enum class Feasibility { guaranteed, unknown };

enum class ConsistencyMode {
  full,             // numeric probe check
  exposure_first,   // skip probes when every cell is exposed
  skip
};

struct PlanOptions {
  ConsistencyMode mode = ConsistencyMode::full;
  double tol = 1e-8;
  std::uint64_t seed = 0x5eedULL;
  int random_probes = 32;
};

struct SwitchPlan {
  Observation X;
  Vec s;
  Vec offsets;
  std::vector<CostModel> restricted;
  CostModel switched;
  std::vector<Vec> cond_prices;
  std::vector<int> ties;
  ConsistencyVerdict consistency;
  Vec shift;
};

class SwitchedCost : public CostFunction {
 public:
  SwitchedCost(CostModel base, Observation X, std::vector<CostModel> restricted, Vec offsets);
  CostKind kind() const override { return CostKind::switched; }
  double value(const Vec& q) const override;
  PriceSet price(const Vec& q) const override;
  double conjugate(const Vec& mu) const override;
  Projection project(const Vec& q, const OutcomeSet& E) const override;
  std::optional<Vec> inverse_price(const Vec& mu) const override;
  bool strictly_convex_conjugate() const override { return false; }

  const CostModel& base() const { return base_; }
  const Observation& observation() const { return X_; }
  const Vec& offsets() const { return offsets_; }
  // Realizations attaining the max at q, lowest index first.
  std::vector<int> active_cells(const Vec& q, double tol = 1e-10) const;

 private:
  CostModel base_;
  Observation X_;
  std::vector<CostModel> restricted_;
  Vec offsets_;
};

// Minimum of sum_x lambda_x (R(mu^x) - b^x) - q.mu over decompositions of mu into
// per-cell points, with mu fixed (target) or free in M(E).
struct RoofResult {
  double value = kInf;
  Vec weights;
  Vec mu;
  double gap = 0.0;
  bool feasible = false;
  bool converged = false;
};

RoofResult roof_at(const CostModel& base, const Observation& X, const Vec& offsets, const Vec& mu);
RoofResult roof_over(const CostModel& base, const Observation& X, const Vec& offsets, const Vec& q,
                     const OutcomeSet& E);

SwitchPlan plan_switch(const CostModel& m, const Observation& X, const Vec& s,
                       const PlanOptions& options = {});
ConsistencyVerdict consistency_check(const CostModel& m, const Observation& X, const Vec& s,
                                     double tol = 1e-8, std::uint64_t seed = 0x5eedULL,
                                     int random_probes = 32);
Feasibility feasibility_precheck(const OutcomeSpace& space, const Observation& X);
std::string to_string(Feasibility f);

enum class Row { price, cond_price, zero_util, dec_util, ex_util };
std::string to_string(Row row);

struct RowResult {
  Row row = Row::price;
  bool pass = true;
  bool informational = false;
  double worst = 0.0;
  std::vector<double> per_cell;
};

struct DesiderataReport {
  std::vector<RowResult> rows;
  bool cross_check_ok = true;
  const RowResult& get(Row row) const;
};

struct MarketState {
  CostModel model;
  Vec state;
};

struct DesiderataOptions {
  int samples_per_cell = 100;
  std::uint64_t seed = 1;
  bool price_informational = false;
};

DesiderataReport check_desiderata(const MarketState& old_market, const MarketState& new_market,
                                  const Observation& X, double tol,
                                  const DesiderataOptions& options = {});

CostModel shift_state(const CostModel& m_tilde, const Vec& s_tilde, const Vec& s);

// Sample points of M(cell): distinct vertices, pairwise midpoints, then
// `random_points` seeded random convex combinations.
std::vector<Vec> hull_probes(const OutcomeSpace& space, const OutcomeSet& cell, int random_points,
                             Rng& rng);

}  // namespace ccmm
