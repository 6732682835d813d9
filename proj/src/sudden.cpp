#include "ccmm/sudden.hpp"

#include "ccmm/frank_wolfe.hpp"
#include "ccmm/info_utility.hpp"
#include "ccmm/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccmm {
namespace {

constexpr double kCellMass = 1e-14;

// Variables: outcome weights gamma (size |Omega|), optionally followed by
// weights theta over the outcomes of a target event.
class RoofProgram {
 public:
  RoofProgram(const CostFunction& base, const Observation& X, const Vec& offsets, Vec q)
      : base_(base), X_(X), offsets_(offsets), q_(std::move(q)), P_(base.space().payoff()) {
    if (X_.num_outcomes() != base.space().num_outcomes())
      throw std::invalid_argument("observation does not match outcome space");
  }

  int n() const { return static_cast<int>(P_.rows()); }

  double value(const Vec& z) const {
    const Vec gamma = z.head(n());
    double total = 0.0;
    for (int x = 0; x < X_.num_realizations(); ++x) {
      double lam = 0.0;
      Vec w = Vec::Zero(P_.cols());
      for (int o : X_.cell(x)) {
        lam += gamma(o);
        w += gamma(o) * P_.row(o).transpose();
      }
      if (lam <= kCellMass) continue;
      const double r = base_.conjugate(w / lam);
      if (r == kInf) return kInf;
      total += lam * (r - offsets_(x));
    }
    return total - q_.dot(P_.transpose() * gamma);
  }

  Vec gradient(const Vec& z) const {
    const Vec gamma = z.head(n());
    Vec g = Vec::Zero(z.size());
    for (int x = 0; x < X_.num_realizations(); ++x) {
      double lam = 0.0;
      Vec w = Vec::Zero(P_.cols());
      for (int o : X_.cell(x)) {
        lam += gamma(o);
        w += gamma(o) * P_.row(o).transpose();
      }
      if (lam <= kCellMass) {
        for (int o : X_.cell(x)) g(o) = base_.conjugate(P_.row(o).transpose()) - offsets_(x);
        continue;
      }
      const Vec mu = w / lam;
      const double r = base_.conjugate(mu);
      const Vec dr = base_.conjugate_gradient(mu);
      for (int o : X_.cell(x)) g(o) = r - offsets_(x) + dr.dot(P_.row(o).transpose() - mu);
    }
    g.head(n()) -= P_ * q_;
    return g;
  }

  const Mat& payoff() const { return P_; }

 private:
  const CostFunction& base_;
  const Observation& X_;
  const Vec& offsets_;
  Vec q_;
  Mat P_;
};

RoofResult solve_roof(const RoofProgram& prog, const Mat& A, const Vec& b) {
  RoofResult out;
  const int nz = static_cast<int>(A.cols());
  auto oracle = [&](const Vec& g) {
    Vec c = Vec::Zero(nz);
    c.head(g.size()) = g;
    const auto res = lp::minimize(A, b, c, 1e-10);
    if (res.status != lp::Status::optimal) throw std::runtime_error("decomposition oracle failed");
    return res.x;
  };
  Vec start_cost = Vec::Zero(nz);
  start_cost.head(prog.n()) = prog.gradient(Vec::Zero(nz)).head(prog.n());
  for (Eigen::Index i = 0; i < start_cost.size(); ++i)
    if (!std::isfinite(start_cost(i))) start_cost(i) = 1e6;
  const auto start = lp::minimize(A, b, start_cost, 1e-10);
  if (start.status != lp::Status::optimal) return out;

  fw::Problem problem;
  problem.value = [&](const Vec& z) { return prog.value(z); };
  problem.gradient = [&](const Vec& z) { return prog.gradient(z); };
  problem.oracle = oracle;
  fw::Options options;
  options.max_iter = 1000;
  options.gap_tol = 1e-11;
  const auto res = fw::minimize(problem, {start.x}, Vec::Ones(1), options);
  out.feasible = true;
  out.value = res.value;
  out.weights = res.x.head(prog.n());
  out.mu = prog.payoff().transpose() * out.weights;
  out.gap = res.gap;
  out.converged = res.converged;
  return out;
}

Vec offsets_at(const CostModel& m, const Observation& X, const Vec& s, std::vector<Vec>* cond) {
  const double c = cost(m, s);
  Vec b(X.num_realizations());
  for (int x = 0; x < X.num_realizations(); ++x) {
    const Projection p = m->project(s, X.cell(x));
    b(x) = c + p.value;
    if (b(x) < 0.0 && b(x) > -1e-12) b(x) = 0.0;
    if (cond) cond->push_back(p.mu);
  }
  return b;
}

void check_observation(const OutcomeSpace& space, const Observation& X) {
  if (X.num_outcomes() != space.num_outcomes())
    throw std::invalid_argument("observation does not match outcome space");
}

bool same_space(const OutcomeSpace& a, const OutcomeSpace& b) {
  return a.payoff().rows() == b.payoff().rows() && a.payoff().cols() == b.payoff().cols() &&
         a.payoff() == b.payoff();
}

}  // namespace

SwitchedCost::SwitchedCost(CostModel base, Observation X, std::vector<CostModel> restricted,
                           Vec offsets)
    : CostFunction(base->space_ptr()),
      base_(std::move(base)),
      X_(std::move(X)),
      restricted_(std::move(restricted)),
      offsets_(std::move(offsets)) {
  check_observation(*space_, X_);
  if (static_cast<int>(restricted_.size()) != X_.num_realizations() ||
      offsets_.size() != X_.num_realizations())
    throw std::invalid_argument("switched cost needs one restricted cost and offset per realization");
}

double SwitchedCost::value(const Vec& q) const {
  double best = -kInf;
  for (int x = 0; x < X_.num_realizations(); ++x)
    best = std::max(best, offsets_(x) + restricted_[x]->value(q));
  return best;
}

std::vector<int> SwitchedCost::active_cells(const Vec& q, double tol) const {
  std::vector<double> v(X_.num_realizations());
  double best = -kInf;
  for (int x = 0; x < X_.num_realizations(); ++x) {
    v[x] = offsets_(x) + restricted_[x]->value(q);
    best = std::max(best, v[x]);
  }
  std::vector<int> out;
  for (int x = 0; x < X_.num_realizations(); ++x)
    if (v[x] >= best - tol * (1.0 + std::abs(best))) out.push_back(x);
  return out;
}

PriceSet SwitchedCost::price(const Vec& q) const {
  std::vector<Vec> vertices;
  for (int x : active_cells(q)) {
    for (const Vec& v : restricted_[x]->price(q).vertices) {
      bool dup = false;
      for (const Vec& u : vertices) dup = dup || max_abs_diff(u, v) <= 1e-15;
      if (!dup) vertices.push_back(v);
    }
  }
  if (vertices.size() == 1) return PriceSet::point(vertices[0]);
  return PriceSet::hull(std::move(vertices));
}

double SwitchedCost::conjugate(const Vec& mu) const {
  const RoofResult r = roof_at(base_, X_, offsets_, mu);
  return r.feasible ? r.value : kInf;
}

Projection SwitchedCost::project(const Vec& q, const OutcomeSet& E) const {
  const RoofResult r = roof_over(base_, X_, offsets_, q, E);
  if (!r.feasible) throw std::runtime_error("projection onto an empty price space");
  Projection p;
  p.mu = r.mu;
  p.value = r.value;
  p.gap = r.gap;
  p.converged = r.converged;
  bool one_cell = true;
  for (int w : E) one_cell = one_cell && X_.label(w) == X_.label(E[0]);
  p.unique = one_cell && base_->strictly_convex_conjugate();
  return p;
}

std::optional<Vec> SwitchedCost::inverse_price(const Vec& mu) const {
  auto q = base_->inverse_price(mu);
  if (!q) return std::nullopt;
  if (!price(*q).contains(mu, 1e-9)) return std::nullopt;
  return q;
}

RoofResult roof_at(const CostModel& base, const Observation& X, const Vec& offsets, const Vec& mu) {
  const OutcomeSpace& sp = base->space();
  const int K = sp.dim();
  const int n = sp.num_outcomes();
  if (mu.size() != K || !mu.allFinite()) return {};
  RoofProgram prog(*base, X, offsets, Vec::Zero(K));
  Mat A(K + 1, n);
  A.topRows(K) = sp.payoff().transpose();
  A.row(K).setOnes();
  Vec b(K + 1);
  b.head(K) = mu;
  b(K) = 1.0;
  return solve_roof(prog, A, b);
}

RoofResult roof_over(const CostModel& base, const Observation& X, const Vec& offsets, const Vec& q,
                     const OutcomeSet& E) {
  const OutcomeSpace& sp = base->space();
  const int K = sp.dim();
  const int n = sp.num_outcomes();
  const int m = static_cast<int>(E.size());
  if (m == 0) throw std::invalid_argument("roof over an empty event");
  RoofProgram prog(*base, X, offsets, q);
  Mat A = Mat::Zero(K + 2, n + m);
  A.block(0, 0, K, n) = sp.payoff().transpose();
  A.block(0, n, K, m) = -sp.vertices(E).transpose();
  A.block(K, 0, 1, n).setOnes();
  A.block(K + 1, n, 1, m).setOnes();
  Vec b = Vec::Zero(K + 2);
  b(K) = 1.0;
  b(K + 1) = 1.0;
  return solve_roof(prog, A, b);
}

std::vector<Vec> hull_probes(const OutcomeSpace& space, const OutcomeSet& cell, int random_points,
                             Rng& rng) {
  std::vector<Vec> pts;
  auto add = [&](const Vec& v) {
    for (const Vec& u : pts)
      if (max_abs_diff(u, v) <= 1e-14) return;
    pts.push_back(v);
  };
  for (int w : cell) add(space.row(w));
  for (size_t i = 0; i < cell.size(); ++i)
    for (size_t j = i + 1; j < cell.size(); ++j) add(0.5 * (space.row(cell[i]) + space.row(cell[j])));
  if (cell.size() > 1) {
    const Mat V = space.vertices(cell);
    for (int k = 0; k < random_points; ++k) {
      const Vec lam = random_simplex_weights(rng, static_cast<int>(cell.size()));
      add(V.transpose() * lam);
    }
  }
  return pts;
}

SwitchPlan plan_switch(const CostModel& m, const Observation& X, const Vec& s,
                       const PlanOptions& options) {
  check_observation(m->space(), X);
  require_finite(s, "switch state");
  if (s.size() != m->dim()) throw std::invalid_argument("switch state has the wrong dimension");
  SwitchPlan plan{X, s, Vec(), {}, nullptr, {}, {}, {}, Vec::Zero(s.size())};
  if (X.num_realizations() == 1) {
    plan.offsets = Vec::Zero(1);
    plan.restricted = {m};
    plan.switched = m;
    plan.cond_prices = {m->price(s).center};
    plan.ties = {0};
    plan.consistency.reason = "single cell";
    return plan;
  }
  plan.offsets = offsets_at(m, X, s, &plan.cond_prices);
  for (int x = 0; x < X.num_realizations(); ++x) plan.restricted.push_back(restricted_cost(m, X.cell(x)));
  auto sw = std::make_shared<SwitchedCost>(m, X, plan.restricted, plan.offsets);
  plan.ties = sw->active_cells(s, 1e-9);
  plan.switched = sw;

  switch (options.mode) {
    case ConsistencyMode::skip:
      plan.consistency.reason = "unchecked";
      break;
    case ConsistencyMode::exposure_first:
      if (feasibility_precheck(m->space(), X) == Feasibility::guaranteed) {
        plan.consistency.reason = "exposed";
        break;
      }
      [[fallthrough]];
    case ConsistencyMode::full:
      plan.consistency = consistency_check(m, X, s, options.tol, options.seed, options.random_probes);
      break;
  }
  return plan;
}

ConsistencyVerdict consistency_check(const CostModel& m, const Observation& X, const Vec& s,
                                     double tol, std::uint64_t seed, int random_probes) {
  const OutcomeSpace& sp = m->space();
  check_observation(sp, X);
  ConsistencyVerdict v;
  if (X.num_realizations() == 1) {
    v.reason = "single cell";
    return v;
  }
  const Vec b = offsets_at(m, X, s, nullptr);

  for (int x = 0; x < X.num_realizations(); ++x) {
    for (int y = x + 1; y < X.num_realizations(); ++y) {
      const Mat Vx = sp.vertices(X.cell(x));
      const Mat Vy = sp.vertices(X.cell(y));
      const int nx = static_cast<int>(Vx.rows()), ny = static_cast<int>(Vy.rows());
      Mat A = Mat::Zero(sp.dim() + 2, nx + ny);
      A.block(0, 0, sp.dim(), nx) = Vx.transpose();
      A.block(0, nx, sp.dim(), ny) = -Vy.transpose();
      A.block(sp.dim(), 0, 1, nx).setOnes();
      A.block(sp.dim() + 1, nx, 1, ny).setOnes();
      Vec rhs = Vec::Zero(sp.dim() + 2);
      rhs(sp.dim()) = 1.0;
      rhs(sp.dim() + 1) = 1.0;
      if (lp::minimize(A, rhs, Vec::Zero(nx + ny), 1e-10).status == lp::Status::optimal) {
        v.consistent = false;
        v.reason = "overlap";
        v.overlap = std::make_pair(x, y);
        return v;
      }
    }
  }

  Rng rng(seed);
  for (int x = 0; x < X.num_realizations(); ++x) {
    for (const Vec& mu : hull_probes(sp, X.cell(x), random_probes, rng)) {
      ConsistencyProbe p;
      p.cell = x;
      p.mu = mu;
      p.offset_conjugate = sat_add(m->conjugate(mu), -b(x));
      const RoofResult r = roof_at(m, X, b, mu);
      p.roof = r.value;
      p.weights = r.weights;
      p.violation = p.offset_conjugate - p.roof;
      v.worst_violation = std::max(v.worst_violation, p.violation);
      if (p.violation > tol && (!v.witness || p.violation > v.witness->violation)) v.witness = p;
      v.probes.push_back(std::move(p));
    }
  }
  v.consistent = !v.witness.has_value();
  v.reason = v.consistent ? "probes" : "roof below offset conjugate";
  return v;
}

Feasibility feasibility_precheck(const OutcomeSpace& space, const Observation& X) {
  for (const auto& w : exposure_witness(space, X))
    if (!w) return Feasibility::unknown;
  return Feasibility::guaranteed;
}

std::string to_string(Feasibility f) {
  return f == Feasibility::guaranteed ? "guaranteed" : "unknown";
}

std::string to_string(Row row) {
  switch (row) {
    case Row::price: return "PRICE";
    case Row::cond_price: return "CONDPRICE";
    case Row::zero_util: return "ZEROUTIL";
    case Row::dec_util: return "DECUTIL";
    case Row::ex_util: return "EXUTIL";
  }
  return "?";
}

const RowResult& DesiderataReport::get(Row row) const {
  for (const auto& r : rows)
    if (r.row == row) return r;
  throw std::out_of_range("row not in report");
}

DesiderataReport check_desiderata(const MarketState& old_market, const MarketState& new_market,
                                  const Observation& X, double tol,
                                  const DesiderataOptions& options) {
  const CostModel& m = old_market.model;
  const CostModel& mt = new_market.model;
  if (m->dim() != mt->dim() || !same_space(m->space(), mt->space()))
    throw std::invalid_argument("desiderata need a common outcome space");
  check_observation(m->space(), X);
  const Vec& s = old_market.state;
  const Vec& st = new_market.state;
  const int nx = X.num_realizations();

  DesiderataReport rep;
  RowResult price_row{Row::price, true, options.price_informational, 0.0, {}};
  {
    const PriceSet a = m->price(s);
    const PriceSet b = mt->price(st);
    for (const Vec& v : a.vertices) price_row.pass = price_row.pass && b.contains(v, tol);
    for (const Vec& v : b.vertices) price_row.pass = price_row.pass && a.contains(v, tol);
    price_row.worst = std::max(max_abs_diff(a.lo, b.lo), max_abs_diff(a.hi, b.hi));
    if (price_row.informational) price_row.pass = true;
  }

  RowResult cond{Row::cond_price, true, false, 0.0, {}};
  RowResult zero{Row::zero_util, true, false, 0.0, {}};
  RowResult dec{Row::dec_util, true, false, 0.0, {}};
  RowResult ex{Row::ex_util, true, false, 0.0, {}};
  Rng rng(options.seed);
  for (int x = 0; x < nx; ++x) {
    const OutcomeSet& E = X.cell(x);
    const EventUtility u_old = util_event(m, E, s);
    const EventUtility u_new = util_event(mt, E, st);

    const double dp = max_abs_diff(u_old.minimizer, u_new.minimizer);
    cond.per_cell.push_back(dp);
    cond.worst = std::max(cond.worst, dp);
    cond.pass = cond.pass && dp <= tol;

    zero.per_cell.push_back(u_new.value);
    zero.worst = std::max(zero.worst, u_new.value);
    zero.pass = zero.pass && u_new.value <= tol;

    const double drop = u_old.value - u_new.value;
    dec.per_cell.push_back(drop);
    const bool dec_ok = u_new.value <= u_old.value + tol && (u_old.value <= tol || drop > tol);
    dec.pass = dec.pass && dec_ok;
    dec.worst = std::max(dec.worst, -drop);

    const int base_points = static_cast<int>(hull_probes(m->space(), E, 0, rng).size());
    const int extra = std::max(0, options.samples_per_cell - base_points);
    double lo = kInf, hi = -kInf;
    for (const Vec& mu : hull_probes(m->space(), E, extra, rng)) {
      const double d = divergence(m, mu, s) - divergence(mt, mu, st);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const double spread = std::isfinite(hi - lo) ? hi - lo : kInf;
    ex.per_cell.push_back(spread);
    ex.worst = std::max(ex.worst, spread);
    ex.pass = ex.pass && spread <= tol;
  }
  rep.rows = {price_row, cond, zero, dec, ex};
  rep.cross_check_ok = !(ex.pass && !cond.pass);
  return rep;
}

CostModel shift_state(const CostModel& m_tilde, const Vec& s_tilde, const Vec& s) {
  require_finite(s_tilde, "state");
  require_finite(s, "state");
  return shift_cost(m_tilde, s_tilde - s);
}

}  // namespace ccmm
