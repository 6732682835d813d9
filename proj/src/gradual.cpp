#include "ccmm/gradual.hpp"

#include "ccmm/info_utility.hpp"

#include <cmath>
#include <stdexcept>

namespace ccmm {
namespace {

void require_times(const Schedule& schedule, double t, double t_tilde) {
  if (!std::isfinite(t) || !std::isfinite(t_tilde)) throw std::invalid_argument("times must be finite");
  if (t < schedule.t0()) throw std::invalid_argument("time precedes the schedule start");
  if (t_tilde < t) throw std::invalid_argument("update time precedes the current time");
}

double alpha(const Schedule& schedule, int g, double t, double t_tilde) {
  return schedule.beta(g, t_tilde) / schedule.beta(g, t);
}

}  // namespace

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::linear_to_floor: return "linear-to-floor";
    case ScheduleKind::exponential: return "exponential";
  }
  return "?";
}

Schedule::Schedule(double t0, std::vector<BlockSchedule> blocks) : t0_(t0), blocks_(std::move(blocks)) {
  if (!std::isfinite(t0)) throw std::invalid_argument("schedule start must be finite");
  for (const auto& b : blocks_) {
    if (!(b.rate >= 0.0) || !std::isfinite(b.rate)) throw std::invalid_argument("schedule rate must be >= 0");
    if (!(b.floor > 0.0) || b.floor > 1.0) throw std::invalid_argument("schedule floor must lie in (0, 1]");
  }
}

Schedule Schedule::constant(double t0, int num_blocks) {
  return Schedule(t0, std::vector<BlockSchedule>(num_blocks));
}

double Schedule::beta(int g, double t) const {
  if (t < t0_) throw std::invalid_argument("time precedes the schedule start");
  const BlockSchedule& b = blocks_.at(g);
  switch (b.kind) {
    case ScheduleKind::constant: return 1.0;
    case ScheduleKind::linear_to_floor: return std::max(b.floor, 1.0 - b.rate * (t - t0_));
    case ScheduleKind::exponential: return std::exp(-b.rate * (t - t0_));
  }
  return 1.0;
}

LcmmModel model_at(const LcmmModel& model, const Schedule& schedule, double t) {
  if (schedule.num_blocks() != model.blocks.num_blocks())
    throw std::invalid_argument("schedule needs one entry per block");
  std::vector<CostModel> costs;
  for (int g = 0; g < model.blocks.num_blocks(); ++g)
    costs.push_back(scale_liquidity(model.block_costs[g], schedule.beta(g, t)));
  return model.with_block_costs(std::move(costs));
}

std::pair<double, ArbitrageSolution> time_cost(const LcmmModel& model, const Schedule& schedule,
                                              const Vec& q, double t) {
  return lcmm_cost(model_at(model, schedule, t), q);
}

TimedState new_state(const LcmmModel& model, const Schedule& schedule, const Vec& q, double t,
                     double t_tilde) {
  require_times(schedule, t, t_tilde);
  const ArbitrageSolution sol = time_cost(model, schedule, q, t).second;
  TimedState out{Vec::Zero(q.size()), t_tilde, sol};
  for (int g = 0; g < model.blocks.num_blocks(); ++g) {
    const double a = alpha(schedule, g, t, t_tilde);
    const Vec qg = model.blocks.gather(q, g);
    const Vec d = model.blocks.gather(sol.delta, g);
    model.blocks.scatter(a == 1.0 ? qg : Vec(a * (qg + d) - d), g, out.q);
  }
  return out;
}

Decomposition divergence_decomposition(const LcmmModel& model, const Schedule& schedule,
                                       const Vec& mu, const Vec& q, double t, double t_tilde) {
  const TimedState next = new_state(model, schedule, q, t, t_tilde);
  const LcmmModel at_t = model_at(model, schedule, t);
  Decomposition out;
  out.lhs = lcmm_divergence_generic(model_at(model, schedule, t_tilde), mu, next.q);
  const Vec shifted = q + next.cache.delta;
  out.rhs = 0.0;
  for (int g = 0; g < model.blocks.num_blocks(); ++g) {
    const CostModel& cg = at_t.block_costs[g];
    const double term = alpha(schedule, g, t, t_tilde) *
                        divergence(cg, model.blocks.gather(mu, g), model.blocks.gather(shifted, g));
    out.block_terms.push_back(term);
    out.rhs = sat_add(out.rhs, term);
  }
  out.constraint_term = (model.A.transpose() * mu - model.b).dot(next.cache.eta);
  out.rhs = sat_add(out.rhs, out.constraint_term);
  return out;
}

PartialAudit partial_decrease_audit(const LcmmModel& model, const Schedule& schedule, int g,
                                    const Vec& q, double t, double t_tilde, double tol) {
  require_times(schedule, t, t_tilde);
  if (g < 0 || g >= model.blocks.num_blocks()) throw std::invalid_argument("block out of range");
  for (int h = 0; h < model.blocks.num_blocks(); ++h)
    if (h != g && schedule.beta(h, t_tilde) != schedule.beta(h, t))
      throw std::invalid_argument("only the audited block may change liquidity");

  const LcmmModel at_t = model_at(model, schedule, t);
  const TimedState next = new_state(model, schedule, q, t, t_tilde);
  const CostModel old_cost = make_lcmm_cost(at_t);
  const CostModel new_cost = make_lcmm_cost(model_at(model, schedule, t_tilde));
  const Observation X = block_observation(model, g);

  PartialAudit audit;
  audit.report = check_desiderata({old_cost, q}, {new_cost, next.q}, X, tol);
  audit.tightness = tightness_check(model, g);
  const Vec shifted_g = model.blocks.gather(q + next.cache.delta, g);
  audit.differentiable = model.block_costs[g]->hessian(shifted_g).has_value();

  const double a = alpha(schedule, g, t, t_tilde);
  const CostModel& cg = at_t.block_costs[g];
  const auto& drops = audit.report.get(Row::dec_util).per_cell;
  for (int x = 0; x < X.num_realizations(); ++x) {
    const Vec value = model.blocks.gather(model.space->row(X.cell(x)[0]), g);
    const double predicted = (1.0 - a) * divergence(cg, value, shifted_g);
    audit.predicted_drop.push_back(predicted);
    audit.measured_drop.push_back(drops[x]);
    audit.worst_drop_error = std::max(audit.worst_drop_error, std::abs(drops[x] - predicted));
  }

  const bool dec_required =
      audit.tightness.kind != TightKind::not_tight && audit.differentiable && a < 1.0;
  audit.pass = audit.report.get(Row::cond_price).pass && audit.report.get(Row::ex_util).pass &&
               (!dec_required || audit.report.get(Row::dec_util).pass) &&
               audit.worst_drop_error <= tol;
  return audit;
}

}  // namespace ccmm
