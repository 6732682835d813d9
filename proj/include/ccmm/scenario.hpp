#pragma once

#include "ccmm/sim.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace ccmm {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Protocol { sudden, gradual };

// Partial-decrease audit of one block between two times.
struct AuditSpec {
  int block = 0;
  double t = 0.0;
  double t_tilde = 0.0;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  Protocol protocol = Protocol::sudden;
  SpacePtr space;
  CostModel cost;
  std::optional<LcmmModel> lcmm;
  Observation X = Observation::trivial(1);
  Vec initial_state;
  double switch_time = kInf;
  int settlement = 0;
  std::vector<TraderAgent> traders;
  Schedule schedule = Schedule::constant(0.0, 0);
  std::optional<AuditSpec> audit;
  std::vector<std::string> checks;
  double tol = 1e-6;

  bool wants(const std::string& check) const;
};

// Throws ScenarioError on malformed input.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

}  // namespace ccmm
