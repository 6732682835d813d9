#include "ccmm/info_utility.hpp"
#include "ccmm/sudden.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ccmm;
using ccmm::test::vec;

namespace {

double softplus_ref(double x) { return std::log1p(std::exp(x)); }

Observation first_coordinate() { return Observation::coordinates(OutcomeSpace::square(), {0}); }
Observation success_count() { return Observation::payoff_sum(OutcomeSpace::square(), {0, 1}); }

}  // namespace

TEST(PlanSwitch, SquareFirstCoordinateClosedForm) {
  Rng rng(21);
  const CostModel m = make_square();
  for (int k = 0; k < 10; ++k) {
    const Vec s = test::random_state(rng, 2);
    const SwitchPlan plan = plan_switch(m, first_coordinate(), s);
    EXPECT_TRUE(plan.consistency.consistent);
    for (double q1 = -3; q1 <= 3; q1 += 0.25)
      for (double q2 = -3; q2 <= 3; q2 += 0.25) {
        const double expect = std::max(0.0, q1 - s(0)) + softplus_ref(s(0)) + softplus_ref(q2);
        EXPECT_NEAR(cost(plan.switched, vec({q1, q2})), expect, 1e-9);
      }
    for (double q2 : {-2.0, 0.0, 1.3}) {
      const PriceSet p = price(plan.switched, vec({s(0), q2}));
      EXPECT_NEAR(p.lo(0), 0.0, 1e-8);
      EXPECT_NEAR(p.hi(0), 1.0, 1e-8);
      const double sig = std::exp(q2) / (1 + std::exp(q2));
      EXPECT_NEAR(p.lo(1), sig, 1e-8);
      EXPECT_NEAR(p.hi(1), sig, 1e-8);
    }
  }
}

TEST(PlanSwitch, OffsetsAreDivergenceToConditionalPrice) {
  Rng rng(22);
  const CostModel m = make_lmsr(4);
  const Observation X = Observation::from_cells(4, {{0, 1}, {2}, {3}});
  for (int k = 0; k < 20; ++k) {
    const Vec s = test::random_state(rng, 4);
    const SwitchPlan plan = plan_switch(m, X, s);
    for (int x = 0; x < 3; ++x) {
      const OutcomeSet& cell = X.cell(x);
      EXPECT_NEAR(plan.offsets(x), util_event(m, cell, s).value, 1e-9);
      EXPECT_NEAR(plan.offsets(x), cost(m, s) - cost(plan.restricted[x], s), 1e-9);
    }
  }
}

TEST(PlanSwitch, ValueAndPriceAtSwitchState) {
  Rng rng(23);
  const CostModel m = make_square();
  for (const Observation& X : {first_coordinate(), success_count()}) {
    for (int k = 0; k < 10; ++k) {
      const Vec s = test::random_state(rng, 2);
      const SwitchPlan plan = plan_switch(m, X, s, {ConsistencyMode::skip});
      EXPECT_NEAR(cost(plan.switched, s), cost(m, s), 1e-9);
      const PriceSet p = price(plan.switched, s);
      for (const Vec& mu : plan.cond_prices) EXPECT_TRUE(p.contains(mu, 1e-7));
      EXPECT_EQ(plan.ties.size(), static_cast<std::size_t>(X.num_realizations()));
    }
  }
}

TEST(PlanSwitch, SwitchedCostDominatesBase) {
  Rng rng(24);
  const CostModel m = make_lmsr(3);
  const SwitchPlan plan = plan_switch(m, Observation::identity(3), vec({0.1, 0.5, -0.2}));
  for (int k = 0; k < 50; ++k) {
    const Vec q = test::random_state(rng, 3, 4.0);
    EXPECT_GE(cost(plan.switched, q), cost(m, q) - 1e-9);
  }
}

TEST(PlanSwitch, SingleCellIsIdentity) {
  const CostModel m = make_square();
  const SwitchPlan plan = plan_switch(m, Observation::trivial(4), vec({1, 0}));
  EXPECT_EQ(plan.switched, m);
  EXPECT_EQ(plan.consistency.reason, "single cell");
}

TEST(PlanSwitch, Modes) {
  const CostModel m = make_square();
  EXPECT_EQ(plan_switch(m, first_coordinate(), vec({1, 0}), {ConsistencyMode::exposure_first}).consistency.reason,
            "exposed");
  EXPECT_EQ(plan_switch(m, first_coordinate(), vec({1, 0}), {ConsistencyMode::skip}).consistency.reason,
            "unchecked");
  const SwitchPlan full = plan_switch(m, success_count(), vec({1, 0}), {ConsistencyMode::exposure_first});
  EXPECT_FALSE(full.consistency.consistent);
}

TEST(PlanSwitch, RejectsBadInput) {
  const CostModel m = make_square();
  EXPECT_THROW(plan_switch(m, Observation::trivial(3), vec({0, 0})), std::invalid_argument);
  EXPECT_THROW(plan_switch(m, first_coordinate(), vec({0})), std::invalid_argument);
  EXPECT_THROW(plan_switch(m, first_coordinate(), vec({0, kInf})), std::invalid_argument);
}

TEST(Consistency, CountObservationViolatesAtMidpoint) {
  const double oracle = oracle::square_count_midpoint_violation(1.0, 0.0);
  EXPECT_NEAR(oracle, 2 * std::log(std::cosh(0.25)), 1e-6);
  const ConsistencyVerdict v = consistency_check(make_square(), success_count(), vec({1, 0}));
  ASSERT_FALSE(v.consistent);
  ASSERT_TRUE(v.witness.has_value());
  double at_mid = 0.0;
  for (const ConsistencyProbe& p : v.probes)
    if ((p.mu - vec({0.5, 0.5})).norm() < 1e-12) at_mid = p.violation;
  EXPECT_NEAR(at_mid, oracle, 1e-4);
  EXPECT_GE(v.worst_violation, at_mid - 1e-9);
}

TEST(Consistency, OracleTracksState) {
  Rng rng(25);
  for (int k = 0; k < 5; ++k) {
    const Vec s = test::random_state(rng, 2);
    const ConsistencyVerdict v = consistency_check(make_square(), success_count(), s);
    for (const ConsistencyProbe& p : v.probes)
      if ((p.mu - vec({0.5, 0.5})).norm() < 1e-12)
        EXPECT_NEAR(p.violation, oracle::square_count_midpoint_violation(s(0), s(1)), 1e-4);
  }
}

TEST(Consistency, SymmetricStatePasses) {
  for (double c : {-1.0, 0.0, 0.4, 2.0}) {
    const ConsistencyVerdict v = consistency_check(make_square(), success_count(), vec({c, c}));
    EXPECT_TRUE(v.consistent) << c << " " << v.worst_violation;
    EXPECT_NEAR(oracle::square_count_midpoint_violation(c, c), 0.0, 1e-6);
  }
}

TEST(Consistency, ExposedPartitionsPass) {
  Rng rng(26);
  for (int k = 0; k < 5; ++k) {
    const Vec s = test::random_state(rng, 4);
    const Observation X = Observation::from_cells(4, {{0, 2}, {1}, {3}});
    EXPECT_TRUE(consistency_check(make_lmsr(4), X, s).consistent);
  }
}

TEST(Feasibility, Precheck) {
  EXPECT_EQ(feasibility_precheck(OutcomeSpace::square(), first_coordinate()), Feasibility::guaranteed);
  EXPECT_EQ(feasibility_precheck(OutcomeSpace::square(), success_count()), Feasibility::unknown);
  EXPECT_EQ(feasibility_precheck(OutcomeSpace::simplex(5), Observation::identity(5)), Feasibility::guaranteed);
}

TEST(SwitchedCost, FenchelYoung) {
  Rng rng(27);
  const CostModel m = make_square();
  const SwitchPlan plan = plan_switch(m, first_coordinate(), vec({0.7, -0.4}));
  for (int k = 0; k < 20; ++k) {
    const Vec q = test::random_state(rng, 2);
    const Vec mu = test::random_price(rng, m->space(), m->space().all());
    EXPECT_GE(cost(plan.switched, q) + conjugate(plan.switched, mu), q.dot(mu) - 1e-7);
    const Vec p = price(plan.switched, q).center;
    EXPECT_NEAR(cost(plan.switched, q) + conjugate(plan.switched, p), q.dot(p), 1e-6);
  }
  EXPECT_EQ(conjugate(plan.switched, vec({2, 0})), kInf);
}

TEST(SwitchedCost, ActiveCells) {
  const SwitchPlan plan = plan_switch(make_square(), first_coordinate(), vec({0, 0}));
  const auto* sw = dynamic_cast<const SwitchedCost*>(plan.switched.get());
  ASSERT_NE(sw, nullptr);
  EXPECT_EQ(sw->active_cells(vec({5, 0})), std::vector<int>{1});
  EXPECT_EQ(sw->active_cells(vec({-5, 0})), std::vector<int>{0});
  EXPECT_EQ(sw->active_cells(vec({0, 3})), (std::vector<int>{0, 1}));
}

TEST(Desiderata, SquareFirstCoordinate) {
  Rng rng(28);
  const CostModel m = make_square();
  for (int k = 0; k < 5; ++k) {
    const Vec s = test::random_state(rng, 2);
    const SwitchPlan plan = plan_switch(m, first_coordinate(), s);
    const DesiderataReport r = check_desiderata({m, s}, {plan.switched, s}, first_coordinate(), 1e-7);
    EXPECT_TRUE(r.get(Row::zero_util).pass);
    EXPECT_LE(r.get(Row::zero_util).worst, 1e-8);
    EXPECT_TRUE(r.get(Row::ex_util).pass);
    EXPECT_LE(r.get(Row::ex_util).worst, 1e-6);
    EXPECT_TRUE(r.get(Row::cond_price).pass);
    EXPECT_TRUE(r.get(Row::dec_util).pass);
    EXPECT_TRUE(r.cross_check_ok);
  }
}

TEST(Desiderata, KeepingTheOldCostFailsZeroUtil) {
  const CostModel m = make_square();
  const Vec s = vec({1, 0});
  const DesiderataReport r = check_desiderata({m, s}, {m, s}, first_coordinate(), 1e-7);
  EXPECT_FALSE(r.get(Row::zero_util).pass);
  EXPECT_TRUE(r.get(Row::price).pass);
  EXPECT_FALSE(r.get(Row::dec_util).pass);
}

TEST(Desiderata, HalvedLiquidityKeepsPriceAndLowersUtility) {
  const CostModel m = make_lmsr(3);
  const Vec s = Vec::Zero(3);
  const DesiderataReport r =
      check_desiderata({m, s}, {scale_liquidity(m, 0.5), s}, Observation::identity(3), 1e-8);
  EXPECT_TRUE(r.get(Row::price).pass);
  EXPECT_TRUE(r.get(Row::dec_util).pass);
  for (double d : r.get(Row::dec_util).per_cell) EXPECT_NEAR(d, 0.5 * std::log(3.0), 1e-8);
  EXPECT_FALSE(r.get(Row::zero_util).pass);
}

TEST(ShiftState, TranslatesTheCost) {
  Rng rng(29);
  const CostModel m = make_lmsr(3);
  const Vec st = vec({0.2, 0.1, -0.3}), s = vec({1, 1, 1});
  const CostModel shifted = shift_state(m, st, s);
  for (int k = 0; k < 10; ++k) {
    const Vec q = test::random_state(rng, 3);
    EXPECT_NEAR(cost(shifted, q), cost(m, q + st - s), 1e-12);
  }
  EXPECT_LE((price(shifted, s).center - price(m, st).center).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(HullProbes, StayInsideCell) {
  Rng rng(30);
  const OutcomeSpace sp = OutcomeSpace::square();
  const std::vector<Vec> probes = hull_probes(sp, {1, 2, 3}, 10, rng);
  EXPECT_GE(probes.size(), 16u);
  for (const Vec& mu : probes) EXPECT_TRUE(membership(sp, mu, {1, 2, 3}).has_value());
  EXPECT_EQ(hull_probes(sp, {2}, 10, rng).size(), 1u);
}
