#pragma once

#include "ccmm/gradual.hpp"
#include "ccmm/sudden.hpp"

#include <map>
#include <optional>
#include <string>

namespace ccmm {

enum class AgentKind { belief, jit_arbitrageur, noise };

std::string to_string(AgentKind kind);

struct TraderAgent {
  std::string id;
  AgentKind kind = AgentKind::noise;
  Vec belief;               // belief agents
  OutcomeSet event;         // arbitrageurs: outcomes consistent with what they know
  double scale = 1.0;       // noise agents: bundle coordinates in [-scale, scale]
  std::vector<double> times;
  std::optional<double> budget;
};

struct TradeRecord {
  double time = 0.0;
  std::string trader;
  Vec bundle;
  double cost = 0.0;
  Vec before;
  Vec after;
  bool switched = false;  // priced by the post-switch cost
};

struct SwitchEvent {
  double time = 0.0;
  Vec state;
  Vec offsets;
  bool consistent = true;
};

struct StateUpdate {
  double time = 0.0;
  Vec before;
  Vec after;
};

struct Ledger {
  std::vector<TradeRecord> trades;
  std::vector<SwitchEvent> switches;
  std::vector<StateUpdate> updates;
  std::optional<SwitchPlan> plan;
  int outcome = 0;
  std::map<std::string, double> trader_pnl;
  double collected = 0.0;
  double paid = 0.0;
  double maker_loss = 0.0;
  bool settled = false;
  bool aborted = false;
  std::string abort_reason;
  Vec final_state;
};

struct Protocol1Config {
  CostModel cost;
  Vec s_ini;
  Observation X = Observation::trivial(1);
  std::vector<TraderAgent> traders;
  double switch_time = kInf;
  int outcome = 0;
  std::uint64_t seed = 1;
  bool allow_inconsistent = false;
  // Trades stamped exactly at switch_time are priced by the switched cost.
  bool boundary_uses_switched = true;
  PlanOptions plan;
};

struct Protocol2Config {
  LcmmModel model;
  Schedule schedule = Schedule::constant(0.0, 0);
  Vec s0;
  std::vector<TraderAgent> traders;
  int outcome = 0;
  std::uint64_t seed = 1;
};

Ledger run_protocol1(const Protocol1Config& config);
Ledger run_protocol2(const Protocol2Config& config);

double wc_loss_bound(const CostModel& m, const Vec& s);

struct LossCheck {
  bool ok = true;
  double slack = 0.0;
};

LossCheck verify_loss(const Ledger& ledger, double bound, double tol = 1e-6);

}  // namespace ccmm
