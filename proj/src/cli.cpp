#include "ccmm/cli.hpp"

#include "ccmm/info_utility.hpp"
#include "ccmm/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <sstream>

namespace ccmm::cli {
namespace {

using json = nlohmann::ordered_json;

const char* const kFields[] = {"ts",     "kind",    "state", "price_center", "spread",
                               "cost_delta", "trader", "check", "value", "pass"};

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json record(const std::string& kind) {
  json r;
  for (const char* f : kFields) r[f] = nullptr;
  r["kind"] = kind;
  return r;
}

json time_json(double t) { return std::isfinite(t) ? json(t) : json(nullptr); }

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); })) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + v[i].dump();
    return s;
  }
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

class Sink {
 public:
  Sink(std::ostream& out, Format format) : out_(out), format_(format) {
    if (format_ == Format::csv) {
      for (size_t i = 0; i < std::size(kFields); ++i) out_ << (i ? "," : "") << kFields[i];
      out_ << '\n';
    }
  }
  void emit(const json& r) {
    if (r["kind"] == "check" && r["pass"] == false) failed_ = true;
    if (format_ == Format::jsonl) {
      out_ << r.dump() << '\n';
      return;
    }
    for (size_t i = 0; i < std::size(kFields); ++i) out_ << (i ? "," : "") << csv_cell(r[kFields[i]]);
    out_ << '\n';
  }
  void check(const std::string& name, const json& value, bool pass) {
    json r = record("check");
    r["check"] = name;
    r["value"] = value;
    r["pass"] = pass;
    emit(r);
  }
  bool failed() const { return failed_; }

 private:
  std::ostream& out_;
  Format format_;
  bool failed_ = false;
};

void apply(Scenario& sc, const Flags& flags) {
  if (flags.seed) sc.seed = *flags.seed;
  if (flags.tol) sc.tol = *flags.tol;
}

json price_fields(json r, const CostModel& m, const Vec& q) {
  const PriceSet p = m->price(q);
  r["price_center"] = to_json(p.center);
  r["spread"] = to_json(p.spread());
  return r;
}

json trade_record(const TradeRecord& t, const CostModel& m) {
  json r = price_fields(record("trade"), m, t.after);
  r["ts"] = time_json(t.time);
  r["state"] = to_json(t.after);
  r["cost_delta"] = t.cost;
  r["trader"] = t.trader;
  r["value"] = to_json(t.bundle);
  return r;
}

void emit_settlement(Sink& sink, const Ledger& ledger, const OutcomeSpace& space) {
  json r = record("settle");
  r["state"] = to_json(ledger.final_state);
  r["cost_delta"] = ledger.maker_loss;
  r["value"] = json{{"outcome", space.outcomes()[ledger.outcome]},
                    {"collected", ledger.collected},
                    {"paid", ledger.paid},
                    {"maker_loss", ledger.maker_loss}};
  sink.emit(r);
  for (const auto& [id, pnl] : ledger.trader_pnl) {
    json p = record("pnl");
    p["trader"] = id;
    p["value"] = pnl;
    sink.emit(p);
  }
}

void emit_witness(Sink& sink, const ConsistencyVerdict& v, const Observation& X) {
  if (v.overlap) {
    json r = record("witness");
    r["check"] = "consistency";
    r["value"] = json{{"overlap", {X.name(v.overlap->first), X.name(v.overlap->second)}}};
    r["pass"] = false;
    sink.emit(r);
  }
  if (v.witness) {
    json r = record("witness");
    r["check"] = "consistency";
    r["state"] = to_json(v.witness->mu);
    r["value"] = json{{"cell", X.name(v.witness->cell)},
                      {"violation", v.witness->violation},
                      {"offset_conjugate", v.witness->offset_conjugate},
                      {"roof", v.witness->roof}};
    r["pass"] = false;
    sink.emit(r);
  }
}

void emit_rows(Sink& sink, const Scenario& sc, const DesiderataReport& rep, const std::string& prefix) {
  const std::pair<const char*, Row> rows[] = {{"price", Row::price},
                                              {"cond_price", Row::cond_price},
                                              {"zero_util", Row::zero_util},
                                              {"dec_util", Row::dec_util},
                                              {"ex_util", Row::ex_util}};
  for (const auto& [name, row] : rows) {
    if (!sc.wants(name)) continue;
    const RowResult& rr = rep.get(row);
    sink.check(prefix + name, rr.worst, rr.pass);
  }
}

void run_sudden(Sink& sink, const Scenario& sc, const Flags& flags) {
  Protocol1Config cfg;
  cfg.cost = sc.cost;
  cfg.s_ini = sc.initial_state;
  cfg.X = sc.X;
  cfg.traders = sc.traders;
  cfg.switch_time = sc.switch_time;
  cfg.outcome = sc.settlement;
  cfg.seed = sc.seed;
  cfg.allow_inconsistent = flags.allow_inconsistent;
  cfg.plan.mode = ConsistencyMode::exposure_first;
  cfg.plan.tol = sc.tol;
  cfg.plan.seed = sc.seed;
  const Ledger ledger = run_protocol1(cfg);

  const CostModel switched = ledger.plan ? ledger.plan->switched : sc.cost;
  bool switch_emitted = false;
  auto emit_switch = [&]() {
    switch_emitted = true;
    for (const SwitchEvent& s : ledger.switches) {
      json r = price_fields(record("switch"), switched, s.state);
      r["ts"] = time_json(s.time);
      r["state"] = to_json(s.state);
      r["value"] = to_json(s.offsets);
      r["pass"] = s.consistent;
      sink.emit(r);
    }
  };
  for (const TradeRecord& t : ledger.trades) {
    if (t.switched && !switch_emitted) emit_switch();
    sink.emit(trade_record(t, t.switched ? switched : sc.cost));
  }
  if (!switch_emitted) emit_switch();

  if (ledger.plan && !ledger.plan->consistency.consistent) {
    emit_witness(sink, ledger.plan->consistency, sc.X);
    sink.check("consistency", ledger.plan->consistency.worst_violation, flags.allow_inconsistent);
  }
  if (ledger.aborted) return;

  if (ledger.plan && (sc.wants("zero_util") || sc.wants("ex_util") || sc.wants("cond_price") ||
                      sc.wants("dec_util") || sc.wants("price"))) {
    DesiderataOptions opts;
    opts.seed = sc.seed;
    opts.price_informational = true;
    const auto rep = check_desiderata({sc.cost, ledger.plan->s}, {switched, ledger.plan->s}, sc.X,
                                      sc.tol, opts);
    emit_rows(sink, sc, rep, "");
  }
  emit_settlement(sink, ledger, sc.cost->space());
  if (sc.wants("loss_bound")) {
    const double bound = wc_loss_bound(sc.cost, sc.initial_state);
    const LossCheck lc = verify_loss(ledger, bound, sc.tol);
    sink.check("loss_bound", lc.slack, lc.ok);
  }
}

void run_gradual(Sink& sink, const Scenario& sc) {
  const LcmmModel& model = *sc.lcmm;
  Protocol2Config cfg{model, sc.schedule, sc.initial_state, sc.traders, sc.settlement, sc.seed};
  const Ledger ledger = run_protocol2(cfg);

  double price_worst = 0.0, decomposition_worst = 0.0;
  double t_prev = sc.schedule.t0();
  size_t j = 0;
  Rng rng(sc.seed);
  std::vector<Vec> probes = hull_probes(*model.space, model.space->all(), 4, rng);
  auto emit_trades_until = [&](double t, bool inclusive) {
    for (; j < ledger.trades.size(); ++j) {
      const TradeRecord& tr = ledger.trades[j];
      if (inclusive ? tr.time > t : tr.time >= t) break;
      sink.emit(trade_record(tr, make_lcmm_cost(model_at(model, sc.schedule, tr.time))));
    }
  };
  for (const StateUpdate& u : ledger.updates) {
    emit_trades_until(u.time, false);
    const CostModel after = make_lcmm_cost(model_at(model, sc.schedule, u.time));
    const Vec p_before = make_lcmm_cost(model_at(model, sc.schedule, t_prev))->price(u.before).center;
    json r = price_fields(record("state_update"), after, u.after);
    r["ts"] = time_json(u.time);
    r["state"] = to_json(u.after);
    r["value"] = to_json(u.before);
    sink.emit(r);
    price_worst = std::max(price_worst, max_abs_diff(p_before, after->price(u.after).center));
    if (sc.wants("decomposition")) {
      for (const Vec& mu : probes) {
        const Decomposition d = divergence_decomposition(model, sc.schedule, mu, u.before, t_prev, u.time);
        decomposition_worst = std::max(decomposition_worst, std::abs(d.lhs - d.rhs));
      }
    }
    t_prev = u.time;
  }
  emit_trades_until(kInf, true);

  if (sc.wants("price")) sink.check("price", price_worst, price_worst <= sc.tol);
  if (sc.wants("decomposition")) sink.check("decomposition", decomposition_worst, decomposition_worst <= sc.tol);
  if (sc.audit) {
    const PartialAudit audit = partial_decrease_audit(model, sc.schedule, sc.audit->block,
                                                      sc.initial_state, sc.audit->t, sc.audit->t_tilde, sc.tol);
    emit_rows(sink, sc, audit.report, "audit.");
    sink.check("audit.drop", audit.worst_drop_error, audit.worst_drop_error <= sc.tol);
  }
  if (sc.wants("tightness")) {
    for (int g = 0; g < model.blocks.num_blocks(); ++g) {
      const TightnessVerdict v = tightness_check(model, g, sc.seed);
      sink.check("tightness[" + std::to_string(g) + "]", to_string(v.kind), true);
    }
  }
  emit_settlement(sink, ledger, *model.space);
  if (sc.wants("loss_bound")) {
    const CostModel start = make_lcmm_cost(model_at(model, sc.schedule, sc.schedule.t0()));
    const double bound = wc_loss_bound(start, sc.initial_state);
    const LossCheck lc = verify_loss(ledger, bound, sc.tol);
    sink.check("loss_bound", lc.slack, lc.ok);
  }
}

template <typename Body>
int guarded(const std::string& path, std::ostream& out, std::ostream& err, const Flags& flags,
            Body body) {
  Scenario sc;
  try {
    sc = load_scenario(path);
    apply(sc, flags);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitParseError;
  }
  // Records are buffered so a failed run leaves no partial stream behind.
  std::ostringstream buffer;
  Sink sink(buffer, flags.format);
  try {
    body(sink, sc);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitParseError;
  }
  out << buffer.str();
  return sink.failed() ? kExitCheckFailed : kExitPass;
}

}  // namespace

int cmd_run(const std::string& path, std::ostream& out, std::ostream& err, const Flags& flags) {
  return guarded(path, out, err, flags, [&](Sink& sink, const Scenario& sc) {
    if (sc.protocol == Protocol::sudden) run_sudden(sink, sc, flags);
    else run_gradual(sink, sc);
  });
}

int cmd_check(const std::string& path, std::ostream& out, std::ostream& err, const Flags& flags) {
  return guarded(path, out, err, flags, [&](Sink& sink, const Scenario& sc) {
    const OutcomeSpace& space = *sc.space;
    if (sc.X.num_realizations() > 1 || !sc.lcmm) {
      sink.check("feasibility", to_string(feasibility_precheck(space, sc.X)), true);
      const ConsistencyVerdict v = consistency_check(sc.cost, sc.X, sc.initial_state, sc.tol, sc.seed);
      emit_witness(sink, v, sc.X);
      sink.check("consistency", v.worst_violation, v.consistent || flags.allow_inconsistent);
    }
    CostModel start = sc.cost;
    if (sc.lcmm) {
      const LcmmModel& model = *sc.lcmm;
      for (int g = 0; g < model.blocks.num_blocks(); ++g) {
        const std::string tag = "[" + std::to_string(g) + "]";
        sink.check("feasibility" + tag, to_string(feasibility_precheck(space, block_observation(model, g))), true);
        sink.check("tightness" + tag, to_string(tightness_check(model, g, sc.seed).kind), true);
      }
      start = make_lcmm_cost(model_at(model, sc.schedule, sc.schedule.t0()));
    }
    sink.check("wc_loss_bound", wc_loss_bound(start, sc.initial_state), true);
  });
}

}  // namespace ccmm::cli
