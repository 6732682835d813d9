#include "ccmm/sim.hpp"

#include "ccmm/info_utility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccmm {
namespace {

constexpr double kUtilTol = 1e-9;

struct Action {
  double time;
  int trader;
};

std::vector<Action> schedule_actions(const std::vector<TraderAgent>& traders) {
  std::vector<Action> out;
  for (int i = 0; i < static_cast<int>(traders.size()); ++i) {
    const auto& times = traders[i].times;
    for (size_t k = 0; k < times.size(); ++k) {
      if (!std::isfinite(times[k])) throw std::invalid_argument("trade times must be finite");
      if (k && times[k] < times[k - 1])
        throw std::invalid_argument("trade times of " + traders[i].id + " decrease");
      out.push_back({times[k], i});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Action& a, const Action& b) { return a.time < b.time; });
  return out;
}

std::vector<Rng> agent_rngs(std::uint64_t seed, size_t n) {
  std::vector<Rng> out;
  for (size_t i = 0; i < n; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    out.emplace_back(seq);
  }
  return out;
}

// Largest fraction of r whose cost stays within the budget.
Vec within_budget(const CostModel& m, const Vec& q, const Vec& r, double budget) {
  if (trade_cost(m, q, r) <= budget) return r;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (trade_cost(m, q, mid * r) <= budget ? lo : hi) = mid;
  }
  return lo * r;
}

std::optional<Vec> choose_bundle(const TraderAgent& agent, const CostModel& m, const Vec& q,
                                 const OutcomeSet& known, Rng& rng) {
  Vec r;
  switch (agent.kind) {
    case AgentKind::belief:
      r = best_response(m, agent.belief, q) - q;
      break;
    case AgentKind::jit_arbitrageur: {
      const EventUtility u = util_event(m, known, q);
      if (u.value <= kUtilTol) return std::nullopt;
      r = best_response(m, u.minimizer, q) - q;
      break;
    }
    case AgentKind::noise:
      r = random_uniform(rng, m->dim(), -agent.scale, agent.scale);
      break;
  }
  if (agent.budget) r = within_budget(m, q, r, *agent.budget);
  if (!r.allFinite() || r.isZero(0.0)) return std::nullopt;
  return r;
}

void execute(Ledger& ledger, const TraderAgent& agent, const CostModel& m, Vec& q, const Vec& r,
             double time, bool switched, std::map<std::string, Vec>& holdings) {
  TradeRecord rec{time, agent.id, r, trade_cost(m, q, r), q, q + r, switched};
  ledger.collected += rec.cost;
  ledger.trader_pnl[agent.id] -= rec.cost;
  auto it = holdings.find(agent.id);
  if (it == holdings.end()) it = holdings.emplace(agent.id, Vec::Zero(r.size())).first;
  it->second += r;
  q = rec.after;
  ledger.trades.push_back(std::move(rec));
}

void settle(Ledger& ledger, const OutcomeSpace& space, int outcome,
            const std::map<std::string, Vec>& holdings) {
  const Vec rho = space.row(outcome);
  for (const auto& [id, r] : holdings) {
    const double pay = r.dot(rho);
    ledger.paid += pay;
    ledger.trader_pnl[id] += pay;
  }
  ledger.maker_loss = ledger.paid - ledger.collected;
  ledger.settled = true;
}

void check_traders(const std::vector<TraderAgent>& traders, int K) {
  for (const auto& a : traders) {
    if (a.kind == AgentKind::belief && a.belief.size() != K)
      throw std::invalid_argument("belief of " + a.id + " has the wrong dimension");
    if (a.kind == AgentKind::noise && !(a.scale >= 0.0))
      throw std::invalid_argument("noise scale of " + a.id + " must be >= 0");
  }
}

}  // namespace

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::belief: return "belief";
    case AgentKind::jit_arbitrageur: return "jit_arbitrageur";
    case AgentKind::noise: return "noise";
  }
  return "?";
}

Ledger run_protocol1(const Protocol1Config& config) {
  const CostModel& base = config.cost;
  if (!base) throw std::invalid_argument("protocol needs a cost function");
  const OutcomeSpace& space = base->space();
  if (config.s_ini.size() != base->dim()) throw std::invalid_argument("initial state has the wrong dimension");
  require_finite(config.s_ini, "initial state");
  // A single-cell observation reveals nothing, so there is no switch to make.
  const bool reveals = config.X.num_realizations() > 1;
  if (reveals && config.X.num_outcomes() != space.num_outcomes())
    throw std::invalid_argument("observation does not match outcome space");
  if (config.outcome < 0 || config.outcome >= space.num_outcomes())
    throw std::invalid_argument("settlement outcome out of range");
  check_traders(config.traders, base->dim());

  const auto actions = schedule_actions(config.traders);
  auto rngs = agent_rngs(config.seed, config.traders.size());
  const Observation X = reveals ? config.X : Observation::trivial(space.num_outcomes());
  const OutcomeSet realized = X.cell(X.label(config.outcome));

  Ledger ledger;
  ledger.outcome = config.outcome;
  std::map<std::string, Vec> holdings;
  Vec q = config.s_ini;
  CostModel m = base;
  bool switched = false;
  bool planned = false;

  auto after_switch = [&](double time) {
    return config.boundary_uses_switched ? time >= config.switch_time : time > config.switch_time;
  };
  auto do_switch = [&]() -> bool {
    planned = true;
    SwitchPlan plan = plan_switch(base, X, q, config.plan);
    if (!reveals) {
      // Keep the identity plan for reporting; pricing and agents are unaffected.
      ledger.plan = std::move(plan);
      return true;
    }
    switched = true;
    const bool consistent = plan.consistency.consistent;
    ledger.switches.push_back({config.switch_time, q, plan.offsets, consistent});
    m = plan.switched;
    ledger.plan = std::move(plan);
    if (!consistent && !config.allow_inconsistent) {
      ledger.aborted = true;
      ledger.abort_reason = "inconsistent switch: " + ledger.plan->consistency.reason;
      return false;
    }
    return true;
  };

  for (const Action& a : actions) {
    if (!planned && after_switch(a.time) && !do_switch()) {
      ledger.final_state = q;
      return ledger;
    }
    const TraderAgent& agent = config.traders[a.trader];
    if (agent.kind == AgentKind::jit_arbitrageur && !switched) continue;
    const OutcomeSet& known = agent.event.empty() ? realized : agent.event;
    const auto r = choose_bundle(agent, m, q, known, rngs[a.trader]);
    if (r) execute(ledger, agent, m, q, *r, a.time, switched, holdings);
  }
  if (!planned && std::isfinite(config.switch_time) && !do_switch()) {
    ledger.final_state = q;
    return ledger;
  }
  ledger.final_state = q;
  settle(ledger, space, config.outcome, holdings);
  return ledger;
}

Ledger run_protocol2(const Protocol2Config& config) {
  const LcmmModel& model = config.model;
  model.validate();
  const OutcomeSpace& space = *model.space;
  if (config.s0.size() != model.dim()) throw std::invalid_argument("initial state has the wrong dimension");
  require_finite(config.s0, "initial state");
  if (config.outcome < 0 || config.outcome >= space.num_outcomes())
    throw std::invalid_argument("settlement outcome out of range");
  check_traders(config.traders, model.dim());

  const auto actions = schedule_actions(config.traders);
  auto rngs = agent_rngs(config.seed, config.traders.size());
  const OutcomeSet all = space.all();

  Ledger ledger;
  ledger.outcome = config.outcome;
  std::map<std::string, Vec> holdings;
  Vec q = config.s0;
  double t = config.schedule.t0();
  for (const Action& a : actions) {
    if (a.time < t) throw std::invalid_argument("trade request precedes the schedule start");
    if (a.time > t) {
      const TimedState next = new_state(model, config.schedule, q, t, a.time);
      ledger.updates.push_back({a.time, q, next.q});
      q = next.q;
      t = a.time;
    }
    const CostModel m = make_lcmm_cost(model_at(model, config.schedule, t));
    const TraderAgent& agent = config.traders[a.trader];
    const OutcomeSet& known = agent.event.empty() ? all : agent.event;
    const auto r = choose_bundle(agent, m, q, known, rngs[a.trader]);
    if (r) execute(ledger, agent, m, q, *r, a.time, false, holdings);
  }
  ledger.final_state = q;
  settle(ledger, space, config.outcome, holdings);
  return ledger;
}

double wc_loss_bound(const CostModel& m, const Vec& s) {
  double worst = -kInf;
  for (int w = 0; w < m->space().num_outcomes(); ++w)
    worst = std::max(worst, divergence(m, m->space().row(w), s));
  return worst;
}

LossCheck verify_loss(const Ledger& ledger, double bound, double tol) {
  if (!ledger.settled) throw std::invalid_argument("ledger is not settled");
  return {ledger.maker_loss <= bound + tol, bound - ledger.maker_loss};
}

}  // namespace ccmm
