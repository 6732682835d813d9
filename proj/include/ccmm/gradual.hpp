#pragma once

#include "ccmm/lcmm.hpp"
#include "ccmm/sudden.hpp"

#include <string>

namespace ccmm {

enum class ScheduleKind { constant, linear_to_floor, exponential };

std::string to_string(ScheduleKind kind);

struct BlockSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  double rate = 0.0;
  double floor = 1e-3;
};

class Schedule {
 public:
  Schedule(double t0, std::vector<BlockSchedule> blocks);
  static Schedule constant(double t0, int num_blocks);

  double t0() const { return t0_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const BlockSchedule& block(int g) const { return blocks_.at(g); }
  double beta(int g, double t) const;

 private:
  double t0_;
  std::vector<BlockSchedule> blocks_;
};

// Block costs replaced by beta_g(t) C_g(. / beta_g(t)).
LcmmModel model_at(const LcmmModel& model, const Schedule& schedule, double t);

std::pair<double, ArbitrageSolution> time_cost(const LcmmModel& model, const Schedule& schedule,
                                              const Vec& q, double t);

struct TimedState {
  Vec q;
  double t = 0.0;
  ArbitrageSolution cache;  // solution at the previous (q, t), valid at the new state
};

TimedState new_state(const LcmmModel& model, const Schedule& schedule, const Vec& q, double t,
                     double t_tilde);

struct Decomposition {
  double lhs = 0.0;
  double rhs = 0.0;
  std::vector<double> block_terms;
  double constraint_term = 0.0;
};

Decomposition divergence_decomposition(const LcmmModel& model, const Schedule& schedule,
                                       const Vec& mu, const Vec& q, double t, double t_tilde);

struct PartialAudit {
  DesiderataReport report;
  TightnessVerdict tightness;
  bool differentiable = true;
  std::vector<double> measured_drop;
  std::vector<double> predicted_drop;
  double worst_drop_error = 0.0;
  bool pass = true;
};

PartialAudit partial_decrease_audit(const LcmmModel& model, const Schedule& schedule, int g,
                                    const Vec& q, double t, double t_tilde, double tol = 1e-6);

}  // namespace ccmm
