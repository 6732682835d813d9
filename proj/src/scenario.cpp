#include "ccmm/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace ccmm {
namespace {

const std::set<std::string> kChecks = {"zero_util", "ex_util",   "cond_price",    "dec_util",
                                       "price",     "loss_bound", "decomposition", "tightness"};

[[noreturn]] void fail(const std::string& msg) { throw ScenarioError(msg); }

bool same_payoff(const OutcomeSpace& a, const OutcomeSpace& b) {
  return a.payoff().rows() == b.payoff().rows() && a.payoff().cols() == b.payoff().cols() &&
         a.payoff() == b.payoff();
}

template <typename T>
T as(const YAML::Node& node, const std::string& what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail("bad value for " + what);
  }
}

Vec as_vec(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) fail(what + " must be a list of numbers");
  Vec v(node.size());
  for (size_t i = 0; i < node.size(); ++i) v(i) = as<double>(node[i], what);
  if (!v.allFinite()) fail(what + " must be finite");
  return v;
}

Mat as_rows(const YAML::Node& node, const std::string& what, int cols = -1) {
  if (!node.IsSequence()) fail(what + " must be a list of rows");
  const int rows = static_cast<int>(node.size());
  if (rows > 0 && cols < 0) cols = static_cast<int>(node[0].size());
  Mat M(rows, std::max(cols, 0));
  for (int r = 0; r < rows; ++r) {
    const Vec row = as_vec(node[r], what);
    if (row.size() != cols) fail(what + " rows must have equal length");
    M.row(r) = row.transpose();
  }
  return M;
}

std::vector<int> as_ints(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) fail(what + " must be a list of integers");
  std::vector<int> out;
  for (const auto& n : node) out.push_back(as<int>(n, what));
  return out;
}

std::vector<std::string> as_strings(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) fail(what + " must be a list of strings");
  std::vector<std::string> out;
  for (const auto& n : node) out.push_back(as<std::string>(n, what));
  return out;
}

std::pair<std::string, int> builder(const std::string& text) {
  static const std::regex re(R"(^\s*([a-z_]+)\s*(?:\(\s*(\d+)\s*\))?\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) fail("unknown market builder '" + text + "'");
  return {m[1], m[2].matched ? std::stoi(m[2]) : -1};
}

SpacePtr parse_market(const YAML::Node& node) {
  if (!node) fail("missing market");
  if (node.IsScalar()) {
    const auto [name, n] = builder(node.Scalar());
    if (name == "square") return share(OutcomeSpace::square());
    if (name == "piecewise_linear") return share(OutcomeSpace::line({0.0, 1.0}));
    if (n < 1) fail("market builder '" + name + "' needs a size");
    if (name == "lmsr" || name == "simplex") return share(OutcomeSpace::simplex(n));
    if (name == "binary_cube") return share(OutcomeSpace::binary_cube(n));
    if (name == "medal_counts") return share(OutcomeSpace::medal_counts(n));
    fail("unknown market builder '" + name + "'");
  }
  const Mat P = as_rows(node["payoff"], "market.payoff");
  std::vector<std::string> outcomes, securities;
  if (node["outcomes"]) outcomes = as_strings(node["outcomes"], "market.outcomes");
  if (node["securities"]) securities = as_strings(node["securities"], "market.securities");
  return share(OutcomeSpace(outcomes, P, securities));
}

CostModel block_cost(const std::string& kind, int size) {
  if (kind == "lmsr") return make_lmsr(size);
  if (kind == "product-lmsr") return make_product_lmsr(size);
  if (kind == "piecewise-linear") {
    if (size != 1) fail("piecewise-linear blocks have one security");
    return make_piecewise_linear();
  }
  fail("unknown block cost '" + kind + "'");
}

void parse_cost(const YAML::Node& node, const YAML::Node& market, Scenario& sc) {
  if (!node) fail("missing cost");
  const std::string kind = as<std::string>(node.IsScalar() ? node : node["kind"], "cost.kind");
  if (kind == "lmsr") {
    sc.cost = make_lmsr(sc.space);
  } else if (kind == "product-lmsr") {
    sc.cost = make_product_lmsr(sc.space->dim());
    if (!same_payoff(sc.cost->space(), *sc.space))
      fail("product-lmsr needs the binary cube in lexicographic order");
    sc.space = sc.cost->space_ptr();
  } else if (kind == "piecewise-linear") {
    sc.cost = make_piecewise_linear();
    if (!same_payoff(sc.cost->space(), *sc.space)) fail("piecewise-linear needs the market {0, 1}");
    sc.space = sc.cost->space_ptr();
  } else if (kind == "lcmm") {
    LcmmModel model{sc.space, BlockStructure::singletons(sc.space->dim()), {}, Mat(), Vec()};
    if (!node.IsMap() || !node["blocks"]) {
      if (!market.IsScalar() || builder(market.Scalar()).first != "medal_counts")
        fail("lcmm cost needs blocks unless the market is medal_counts(n)");
      model = medal_count_model(builder(market.Scalar()).second);
    } else {
      std::vector<std::vector<int>> bl;
      for (const auto& b : node["blocks"]) bl.push_back(as_ints(b, "cost.blocks"));
      const auto kinds = as_strings(node["block_costs"], "cost.block_costs");
      if (kinds.size() != bl.size()) fail("cost.block_costs needs one entry per block");
      model.space = sc.space;
      model.blocks = BlockStructure(bl, sc.space->dim());
      for (size_t g = 0; g < bl.size(); ++g)
        model.block_costs.push_back(block_cost(kinds[g], static_cast<int>(bl[g].size())));
      const YAML::Node cons = node["constraints"];
      if (cons) {
        model.A = as_rows(cons["A"], "cost.constraints.A", -1);
        model.b = as_vec(cons["b"], "cost.constraints.b");
        if (model.A.rows() == 0) model.A = Mat(sc.space->dim(), model.b.size());
      } else {
        model.A = Mat(sc.space->dim(), 0);
        model.b = Vec(0);
      }
      model.validate();
    }
    sc.space = model.space;
    sc.lcmm = model;
    sc.cost = make_lcmm_cost(model);
  } else {
    fail("unknown cost kind '" + kind + "'");
  }
  if (node.IsMap() && node["liquidity"]) {
    const double a = as<double>(node["liquidity"], "cost.liquidity");
    if (sc.lcmm) fail("lcmm liquidity is set through schedules");
    sc.cost = scale_liquidity(sc.cost, a);
  }
}

Observation parse_observation(const YAML::Node& node, const Scenario& sc) {
  const OutcomeSpace& sp = *sc.space;
  if (!node) return Observation::trivial(sp.num_outcomes());
  if (node.IsScalar()) {
    const std::string s = node.Scalar();
    if (s == "trivial") return Observation::trivial(sp.num_outcomes());
    if (s == "identity") return Observation::identity(sp.num_outcomes());
    fail("unknown observation '" + s + "'");
  }
  if (node["coordinates"]) return Observation::coordinates(sp, as_ints(node["coordinates"], "observation"));
  if (node["payoff_sum"]) return Observation::payoff_sum(sp, as_ints(node["payoff_sum"], "observation"));
  if (node["cells"]) {
    std::vector<OutcomeSet> cells;
    for (const auto& c : node["cells"]) cells.push_back(as_ints(c, "observation.cells"));
    return Observation::from_cells(sp.num_outcomes(), cells);
  }
  if (node["labels"]) {
    std::vector<std::string> names;
    if (node["names"]) names = as_strings(node["names"], "observation.names");
    return Observation(as_ints(node["labels"], "observation.labels"), names);
  }
  if (node["block"]) {
    if (!sc.lcmm) fail("block observations need an lcmm cost");
    return block_observation(*sc.lcmm, as<int>(node["block"], "observation.block"));
  }
  fail("unrecognized observation");
}

int parse_outcome(const YAML::Node& node, const OutcomeSpace& sp) {
  if (!node) fail("missing settlement");
  int w = -1;
  try {
    w = node.as<int>();
  } catch (const YAML::Exception&) {
    const std::string name = as<std::string>(node, "settlement");
    const auto& names = sp.outcomes();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) fail("unknown settlement outcome '" + name + "'");
    w = static_cast<int>(it - names.begin());
  }
  if (w < 0 || w >= sp.num_outcomes()) fail("settlement outcome out of range");
  return w;
}

TraderAgent parse_trader(const YAML::Node& node, const Scenario& sc) {
  TraderAgent a;
  a.id = as<std::string>(node["id"], "trader.id");
  const std::string kind = as<std::string>(node["kind"], "trader.kind");
  if (kind == "belief") {
    a.kind = AgentKind::belief;
    a.belief = as_vec(node["belief"], "trader.belief");
    if (a.belief.size() != sc.space->dim()) fail("belief of " + a.id + " has the wrong dimension");
    if (!membership(*sc.space, a.belief, sc.space->all(), 1e-9))
      fail("belief of " + a.id + " is not a price vector");
  } else if (kind == "jit_arbitrageur") {
    a.kind = AgentKind::jit_arbitrageur;
    if (node["event"]) a.event = as_ints(node["event"], "trader.event");
    for (int w : a.event)
      if (w < 0 || w >= sc.space->num_outcomes()) fail("event of " + a.id + " is out of range");
  } else if (kind == "noise") {
    a.kind = AgentKind::noise;
    if (node["scale"]) a.scale = as<double>(node["scale"], "trader.scale");
    if (!(a.scale >= 0.0)) fail("noise scale must be >= 0");
  } else {
    fail("unknown trader kind '" + kind + "'");
  }
  if (node["times"]) {
    const Vec t = as_vec(node["times"], "trader.times");
    a.times.assign(t.data(), t.data() + t.size());
  }
  if (node["budget"]) a.budget = as<double>(node["budget"], "trader.budget");
  return a;
}

Schedule parse_schedule(const YAML::Node& node, double t0, int num_blocks) {
  std::vector<BlockSchedule> blocks(num_blocks);
  if (node) {
    for (const auto& s : node) {
      const int g = as<int>(s["block"], "schedules.block");
      if (g < 0 || g >= num_blocks) fail("schedule block out of range");
      const std::string kind = as<std::string>(s["kind"], "schedules.kind");
      if (kind == "constant") blocks[g].kind = ScheduleKind::constant;
      else if (kind == "linear-to-floor") blocks[g].kind = ScheduleKind::linear_to_floor;
      else if (kind == "exponential") blocks[g].kind = ScheduleKind::exponential;
      else fail("unknown schedule kind '" + kind + "'");
      if (s["rate"]) blocks[g].rate = as<double>(s["rate"], "schedules.rate");
      if (s["floor"]) blocks[g].floor = as<double>(s["floor"], "schedules.floor");
    }
  }
  return Schedule(t0, blocks);
}

}  // namespace

bool Scenario::wants(const std::string& check) const {
  return std::find(checks.begin(), checks.end(), check) != checks.end();
}

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    fail(std::string("malformed scenario: ") + e.what());
  }
  if (!root.IsMap()) fail("scenario must be a mapping");
  try {
    Scenario sc;
    sc.name = root["name"] ? as<std::string>(root["name"], "name") : "scenario";
    if (!root["seed"]) fail("seed is mandatory");
    sc.seed = as<std::uint64_t>(root["seed"], "seed");
    const std::string protocol = root["protocol"] ? as<std::string>(root["protocol"], "protocol") : "sudden";
    if (protocol == "sudden") sc.protocol = Protocol::sudden;
    else if (protocol == "gradual") sc.protocol = Protocol::gradual;
    else fail("protocol must be sudden or gradual");

    sc.space = parse_market(root["market"]);
    parse_cost(root["cost"], root["market"], sc);
    if (sc.protocol == Protocol::gradual && !sc.lcmm) fail("gradual protocol needs an lcmm cost");
    sc.X = parse_observation(root["observation"], sc);

    sc.initial_state = root["initial_state"] ? as_vec(root["initial_state"], "initial_state")
                                             : Vec(Vec::Zero(sc.space->dim()));
    if (sc.initial_state.size() != sc.space->dim()) fail("initial_state has the wrong dimension");
    if (root["switch_time"]) sc.switch_time = as<double>(root["switch_time"], "switch_time");
    sc.settlement = parse_outcome(root["settlement"], *sc.space);

    if (root["traders"]) {
      std::set<std::string> ids;
      for (const auto& t : root["traders"]) {
        sc.traders.push_back(parse_trader(t, sc));
        if (!ids.insert(sc.traders.back().id).second) fail("duplicate trader id " + sc.traders.back().id);
      }
    }
    if (sc.lcmm) {
      const double t0 = root["t0"] ? as<double>(root["t0"], "t0") : 0.0;
      sc.schedule = parse_schedule(root["schedules"], t0, sc.lcmm->blocks.num_blocks());
    } else if (root["schedules"]) {
      fail("schedules need an lcmm cost");
    }
    if (root["audit"]) {
      if (!sc.lcmm) fail("audit needs an lcmm cost");
      const YAML::Node a = root["audit"];
      sc.audit = AuditSpec{as<int>(a["block"], "audit.block"), as<double>(a["t"], "audit.t"),
                           as<double>(a["t_tilde"], "audit.t_tilde")};
    }
    if (root["checks"]) {
      sc.checks = as_strings(root["checks"], "checks");
      for (const auto& c : sc.checks)
        if (!kChecks.count(c)) fail("unknown check '" + c + "'");
    }
    for (const char* c : {"zero_util", "ex_util", "cond_price", "dec_util"}) {
      if (!sc.wants(c)) continue;
      if (sc.protocol == Protocol::sudden && !std::isfinite(sc.switch_time))
        fail(std::string(c) + " needs a switch_time");
      if (sc.protocol == Protocol::gradual && !sc.audit) fail(std::string(c) + " needs an audit section");
    }
    if (root["tolerances"] && root["tolerances"]["tol"])
      sc.tol = as<double>(root["tolerances"]["tol"], "tolerances.tol");
    if (!(sc.tol > 0.0)) fail("tolerance must be positive");
    return sc;
  } catch (const YAML::Exception& e) {
    fail(std::string("malformed scenario: ") + e.what());
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace ccmm
