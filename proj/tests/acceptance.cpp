// One [PASS]/[FAIL] line per acceptance criterion.

#include "ccmm/cli.hpp"
#include "ccmm/gradual.hpp"
#include "ccmm/info_utility.hpp"
#include "ccmm/sim.hpp"
#include "oracles.hpp"
#include "sim_runs.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace ccmm;
using test::vec;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus_ref(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double xlx(double x) { return x > 0 ? x * std::log(x) : 0.0; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

Outcome closed_forms() {
  double worst = 0.0;
  auto note = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  const CostModel lmsr = make_lmsr(3), square = make_square(), pl = make_piecewise_linear();
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      for (int k = 0; k < 10; ++k) {
        const Vec q = vec({-3 + 0.6 * i, -2.5 + 0.55 * j, -4 + 0.8 * k});
        const double z = std::exp(q(0)) + std::exp(q(1)) + std::exp(q(2));
        note(cost(lmsr, q), std::log(z));
        const Vec p = price(lmsr, q).center;
        for (int c = 0; c < 3; ++c) note(p(c), std::exp(q(c)) / z);
        const double a = (i + 0.5) / 10.0, b = (j + 0.5) / 10.0 * (1 - a);
        note(conjugate(lmsr, vec({a, b, 1 - a - b})), xlx(a) + xlx(b) + xlx(1 - a - b));
      }
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      const Vec q = vec({-4 + 0.25 * i, -3 + 0.2 * j});
      note(cost(square, q), softplus_ref(q(0)) + softplus_ref(q(1)));
      const Vec p = price(square, q).center;
      note(p(0), sigmoid(q(0)));
      note(p(1), sigmoid(q(1)));
      const double a = i / 31.0, b = j / 31.0;
      note(conjugate(square, vec({a, b})), xlx(a) + xlx(1 - a) + xlx(b) + xlx(1 - b));
    }
  for (int i = 0; i < 1000; ++i) {
    const double q = -5 + 10.0 * i / 999;
    note(cost(pl, vec({q})), std::max(0.0, q));
    const PriceSet p = price(pl, vec({q}));
    note(p.lo(0), q > 0 ? 1.0 : 0.0);
    note(p.hi(0), q < 0 ? 0.0 : 1.0);
    note(conjugate(pl, vec({i / 999.0})), 0.0);
  }
  const bool outside = conjugate(pl, vec({1.5})) == kInf && conjugate(square, vec({-0.1, 0.5})) == kInf &&
                       conjugate(lmsr, vec({0.5, 0.6, 0.0})) == kInf;
  return {worst <= 1e-9 && outside, "max error " + fmt(worst)};
}

Outcome revealed_coordinate_switch() {
  Rng rng(2024);
  double worst_value = 0.0, worst_spread = 0.0;
  const CostModel m = make_square();
  const Observation X = Observation::coordinates(m->space(), {0});
  for (int k = 0; k < 10; ++k) {
    const Vec s = test::random_state(rng, 2);
    const SwitchPlan plan = plan_switch(m, X, s);
    for (int i = 0; i <= 20; ++i)
      for (int j = 0; j <= 20; ++j) {
        const Vec q = vec({-4 + 0.4 * i, -4 + 0.4 * j});
        const double expect = std::max(0.0, q(0) - s(0)) + softplus_ref(s(0)) + softplus_ref(q(1));
        worst_value = std::max(worst_value, std::abs(cost(plan.switched, q) - expect));
      }
    for (int j = 0; j <= 20; ++j) {
      const double q2 = -4 + 0.4 * j;
      const PriceSet p = price(plan.switched, vec({s(0), q2}));
      const double sig = std::exp(q2) / (1 + std::exp(q2));
      worst_spread = std::max({worst_spread, std::abs(p.lo(0)), std::abs(p.hi(0) - 1), std::abs(p.lo(1) - sig),
                               std::abs(p.hi(1) - sig)});
    }
  }
  return {worst_value <= 1e-9 && worst_spread <= 1e-8,
          "value error " + fmt(worst_value) + ", spread error " + fmt(worst_spread)};
}

Outcome square_desiderata() {
  Rng rng(3);
  const CostModel m = make_square();
  const Observation X = Observation::coordinates(m->space(), {0});
  double zero = 0.0, ex = 0.0, cond = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Vec s = test::random_state(rng, 2);
    const SwitchPlan plan = plan_switch(m, X, s);
    const DesiderataReport r = check_desiderata({m, s}, {plan.switched, s}, X, 1e-6, {100, 7 + std::uint64_t(k)});
    for (double v : r.get(Row::zero_util).per_cell) zero = std::max(zero, v);
    ex = std::max(ex, r.get(Row::ex_util).worst);
    cond = std::max(cond, r.get(Row::cond_price).worst);
  }
  return {zero <= 1e-8 && ex <= 1e-6 && cond <= 1e-7,
          "zero " + fmt(zero) + ", ex " + fmt(ex) + ", cond " + fmt(cond)};
}

Outcome impossibility() {
  const double oracle = oracle::square_count_midpoint_violation(1.0, 0.0);
  const CostModel m = make_square();
  const Observation X = Observation::payoff_sum(m->space(), {0, 1});
  const ConsistencyVerdict bad = consistency_check(m, X, vec({1, 0}));
  double at_mid = -1.0;
  for (const ConsistencyProbe& p : bad.probes)
    if ((p.mu - vec({0.5, 0.5})).norm() < 1e-12) at_mid = p.violation;
  bool symmetric = true;
  for (double c : {-1.5, 0.0, 0.7, 2.0}) symmetric = symmetric && consistency_check(m, X, vec({c, c})).consistent;
  return {!bad.consistent && std::abs(at_mid - oracle) <= 1e-4 && std::abs(oracle - 2 * std::log(std::cosh(0.25))) < 1e-4 &&
              symmetric,
          "oracle " + fmt(oracle) + ", solver " + fmt(at_mid)};
}

Outcome lmsr_conditioning() {
  Rng rng(5);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int K = std::uniform_int_distribution<int>(2, 6)(rng);
    const Vec q = test::random_state(rng, K, 3.0);
    const OutcomeSet E = test::random_event(rng, K);
    Vec expect = Vec::Zero(K);
    double z = 0.0;
    for (int w : E) z += std::exp(q(w));
    for (int w : E) expect(w) = std::exp(q(w)) / z;
    worst = std::max(worst, (conditional_price(make_lmsr(K), E, q).mu - expect).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "max error " + fmt(worst)};
}

Outcome minimax_equivalence() {
  Rng rng(6);
  const std::vector<CostModel> markets = {make_lmsr(3), make_square(), make_piecewise_linear(), make_lmsr(4)};
  double worst = 0.0;
  int cases = 0;
  for (const CostModel& m : markets) {
    const int n = m->space().num_outcomes();
    for (int k = 0; k < 3; ++k) {
      const Vec q = test::random_state(rng, m->dim(), 1.5);
      const OutcomeSet E = test::random_event(rng, n);
      const double grid = oracle::minimax_util(m, E, q, 20.0, m->dim() >= 4 ? 21 : 41);
      worst = std::max(worst, std::abs(util_event(m, E, q).value - grid));
      ++cases;
    }
  }
  return {worst <= 1e-3, std::to_string(cases) + " cases, max error " + fmt(worst)};
}

Outcome lcmm_certificates() {
  Rng rng(7);
  double worst_value = 0.0, worst_gap = 0.0;
  for (int n = 1; n <= 3; ++n) {
    const LcmmModel m = medal_count_model(n);
    for (int k = 0; k < 200; ++k) {
      const Vec q = test::random_state(rng, m.dim(), 2.0);
      const auto [value, sol] = lcmm_cost(m, q);
      worst_value = std::max(worst_value, std::abs(value - oracle::lcmm_eta_search(m, q)));
      worst_gap = std::max(worst_gap, std::abs(sol.certificate_gap));
    }
  }
  return {worst_value <= 1e-4 && worst_gap <= 1e-7,
          "value error " + fmt(worst_value) + ", gap " + fmt(worst_gap)};
}

Schedule random_schedule(Rng& rng, int blocks) {
  std::vector<BlockSchedule> b;
  for (int g = 0; g < blocks; ++g)
    b.push_back({static_cast<ScheduleKind>(std::uniform_int_distribution<int>(0, 2)(rng)),
                 std::uniform_real_distribution<double>(0, 0.5)(rng), 0.1});
  return Schedule(0.0, b);
}

Outcome decomposition() {
  Rng rng(8);
  double worst = 0.0, worst_price = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + k % 3;
    const LcmmModel m = medal_count_model(n);
    const Schedule s = random_schedule(rng, n + 1);
    const Vec q = test::random_state(rng, m.dim());
    const Vec mu = test::random_price(rng, *m.space, m.space->all());
    const double t = std::uniform_real_distribution<double>(0, 3)(rng);
    const double tt = t + std::uniform_real_distribution<double>(0, 3)(rng);
    const Decomposition d = divergence_decomposition(m, s, mu, q, t, tt);
    worst = std::max(worst, std::abs(d.lhs - d.rhs));
    const TimedState next = new_state(m, s, q, t, tt);
    const LcmmModel before = model_at(m, s, t), after = model_at(m, s, tt);
    const Vec p0 = direct_sum_price(before, q + lcmm_cost(before, q).second.delta);
    const Vec p1 = direct_sum_price(after, next.q + lcmm_cost(after, next.q).second.delta);
    worst_price = std::max(worst_price, (p0 - p1).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6 && worst_price <= 1e-6, "identity " + fmt(worst) + ", price " + fmt(worst_price)};
}

Outcome drop_formula() {
  Rng rng(9);
  double worst = 0.0;
  bool pass = true;
  const std::vector<LcmmModel> models = {medal_count_model(2), independent_binary_model(3)};
  for (const LcmmModel& m : models) {
    const int G = m.blocks.num_blocks();
    for (int k = 0; k < 10; ++k) {
      const int g = k % G;
      std::vector<BlockSchedule> b(G);
      b[g] = {ScheduleKind::linear_to_floor, std::uniform_real_distribution<double>(0.05, 0.9)(rng), 0.05};
      const Vec q = test::random_state(rng, m.dim());
      const PartialAudit a = partial_decrease_audit(m, Schedule(0.0, b), g, q, 0.0, 1.0);
      worst = std::max(worst, a.worst_drop_error);
      pass = pass && a.pass;
    }
  }
  return {pass && worst <= 1e-6, "max drop error " + fmt(worst)};
}

Outcome loss_bounds() {
  int runs = 0, violations = 0, aborted = 0;
  double min_slack = kInf;
  auto tally = [&](const Ledger& l, double bound) {
    ++runs;
    if (!l.settled) {
      ++aborted;
      return;
    }
    const LossCheck c = verify_loss(l, bound);
    min_slack = std::min(min_slack, c.slack);
    if (!c.ok) ++violations;
  };
  const CostModel square = make_square();
  const LcmmModel square_lcmm = independent_binary_model(2);
  const LcmmModel medal = medal_count_model(2);
  const CostModel medal_cost = make_lcmm_cost(medal);
  const Observation square_x = Observation::coordinates(square->space(), {0});
  const Observation medal_x = block_observation(medal, 0);
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto a = test::random_protocol1(square, square_x, seed);
    tally(run_protocol1(a), wc_loss_bound(square, a.s_ini));
    const auto b = test::random_protocol1(medal_cost, medal_x, seed);
    tally(run_protocol1(b), wc_loss_bound(medal_cost, b.s_ini));
    const auto c = test::random_protocol2(square_lcmm, seed);
    tally(run_protocol2(c), wc_loss_bound(make_lcmm_cost(square_lcmm), c.s0));
    const auto d = test::random_protocol2(medal, seed);
    tally(run_protocol2(d), wc_loss_bound(medal_cost, d.s0));
  }
  const double ln4 = wc_loss_bound(make_lmsr(4), Vec::Zero(4));
  return {violations == 0 && aborted == 0 && std::abs(ln4 - std::log(4.0)) < 1e-12,
          std::to_string(runs) + " runs, " + std::to_string(violations) + " over bound, " +
              std::to_string(aborted) + " aborted, min slack " + fmt(min_slack)};
}

Outcome optimizing_sequence_converges() {
  Rng rng(11);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Vec q = test::random_state(rng, 3);
    OutcomeSet E = test::random_event(rng, 3);
    if (E.size() == 3) E.pop_back();
    const OptimizingSequence seq = optimizing_sequence(make_lmsr(3), E, q, 200);
    worst = std::max(worst, seq.trace.empty() ? 0.0 : seq.trace.back());
  }
  return {worst < 1e-3, "worst final divergence " + fmt(worst)};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(CCMM_SCENARIO_DIR))
    if (e.path().extension() == ".scn") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  int mismatches = 0;
  for (const fs::path& f : files) {
    for (cli::Format format : {cli::Format::jsonl, cli::Format::csv}) {
      cli::Flags flags;
      flags.format = format;
      std::ostringstream a, b, ea, eb;
      const int ca = cli::cmd_run(f.string(), a, ea, flags);
      const int cb = cli::cmd_run(f.string(), b, eb, flags);
      if (ca != cb || a.str() != b.str() || ea.str() != eb.str()) ++mismatches;
    }
  }
  return {mismatches == 0 && !files.empty(),
          std::to_string(files.size()) + " scenarios, " + std::to_string(mismatches) + " mismatches"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
    double budget_s;
  };
  const Criterion criteria[] = {
      {"AC1 closed-form costs, conjugates and prices", closed_forms, 1.0},
      {"AC2 revealed-coordinate switched cost and spread", revealed_coordinate_switch, 0.0},
      {"AC3 desiderata after revealing one coordinate", square_desiderata, 0.0},
      {"AC4 count observation violation matches oracle", impossibility, 0.0},
      {"AC5 LMSR conditional prices", lmsr_conditioning, 0.0},
      {"AC6 event utility equals grid minimax", minimax_equivalence, 0.0},
      {"AC7 LCMM values and certificates", lcmm_certificates, 30.0},
      {"AC8 divergence decomposition and price preservation", decomposition, 0.0},
      {"AC9 per-block utility drop", drop_formula, 0.0},
      {"AC10 worst-case loss bounds", loss_bounds, 0.0},
      {"AC11 optimizing sequence convergence", optimizing_sequence_converges, 0.0},
      {"AC12 byte-identical scenario runs", determinism, 0.0},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += ", over time budget";
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << o.detail << " (" << fmt(secs) << " s)"
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
