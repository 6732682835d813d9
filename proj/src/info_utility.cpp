#include "ccmm/info_utility.hpp"

#include <cmath>
#include <stdexcept>

namespace ccmm {
namespace {

// Maximizes a concave function of t >= 0, growing the bracket while the
// maximizer sits at its right end.
double maximize_ray(const std::function<double(double)>& f, double& best_value) {
  double T = 1.0;
  double t_best = 0.0;
  best_value = f(0.0);
  for (int expand = 0; expand < 12; ++expand) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0, b = T;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < 90; ++i) {
      if (fc >= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - phi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + phi * (b - a);
        fd = f(d);
      }
    }
    const double t = 0.5 * (a + b);
    const double ft = f(t);
    if (ft > best_value) {
      best_value = ft;
      t_best = t;
    }
    if (t < 0.9 * T) break;
    T *= 4.0;
  }
  return t_best;
}

}  // namespace

double util_belief(const CostModel& m, const Vec& mu, const Vec& q) { return divergence(m, mu, q); }

EventUtility util_event(const CostModel& m, const OutcomeSet& E, const Vec& q) {
  if (E.empty()) throw std::invalid_argument("utility for an empty event");
  const Projection p = m->project(q, E);
  EventUtility u;
  u.value = std::max(0.0, cost(m, q) + p.value);
  u.minimizer = p.mu;
  u.residual = p.gap;
  u.converged = p.converged;
  u.unique = p.unique;
  return u;
}

ConditionalPrice conditional_price(const CostModel& m, const OutcomeSet& E, const Vec& q) {
  const EventUtility u = util_event(m, E, q);
  return {u.minimizer, u.unique};
}

double excess_util(const CostModel& m, const Vec& mu, const OutcomeSet& E, const Vec& q,
                   double tol) {
  if (!membership(m->space(), mu, E, tol))
    throw std::invalid_argument("belief lies outside the event's price space");
  return util_belief(m, mu, q) - util_event(m, E, q).value;
}

double guaranteed_payoff(const CostModel& m, const OutcomeSet& E, const Vec& q, const Vec& r) {
  double worst = kInf;
  for (int w : E) worst = std::min(worst, m->space().row(w).dot(r));
  return worst - trade_cost(m, q, r);
}

OptimizingSequence optimizing_sequence(const CostModel& m, const OutcomeSet& E, const Vec& q,
                                       int n_steps) {
  if (E.empty()) throw std::invalid_argument("optimizing sequence for an empty event");
  if (n_steps < 1) throw std::invalid_argument("optimizing sequence needs at least one step");
  OptimizingSequence seq;
  seq.target = conditional_price(m, E, q).mu;
  const int K = m->dim();
  double d_cur = divergence(m, seq.target, q);
  if (d_cur <= 1e-12) return seq;

  std::vector<Vec> directions;
  {
    const OutcomeSpace& sp = m->space();
    std::vector<bool> inside(sp.num_outcomes(), false);
    for (int w : E) inside[w] = true;
    Vec in = Vec::Zero(K), out = Vec::Zero(K);
    int n_in = 0, n_out = 0;
    for (int w = 0; w < sp.num_outcomes(); ++w) {
      if (inside[w]) {
        in += sp.row(w);
        ++n_in;
      } else {
        out += sp.row(w);
        ++n_out;
      }
    }
    if (n_out > 0) {
      const Vec v = in / n_in - out / n_out;
      if (v.norm() > 0) {
        directions.push_back(v);
        directions.push_back(-v);
      }
    }
    for (int k = 0; k < K; ++k) {
      directions.push_back(Vec::Unit(K, k));
      directions.push_back(-Vec::Unit(K, k));
    }
  }

  Vec r = Vec::Zero(K);
  double g_cur = guaranteed_payoff(m, E, q, r);
  for (int step = 0; step < n_steps && d_cur > 1e-12; ++step) {
    double best_gain = 1e-15;
    Vec best_r;
    double best_d = d_cur;
    for (const Vec& dir : directions) {
      double g_val = 0.0;
      const double t = maximize_ray(
          [&](double tt) { return guaranteed_payoff(m, E, q, r + tt * dir); }, g_val);
      if (t <= 0.0) continue;
      const Vec cand = r + t * dir;
      const double d_new = divergence(m, seq.target, q + cand);
      if (d_new > d_cur + 1e-15) continue;
      if (g_val - g_cur > best_gain) {
        best_gain = g_val - g_cur;
        best_r = cand;
        best_d = d_new;
      }
    }
    if (best_r.size() == 0) break;
    r = best_r;
    g_cur += best_gain;
    d_cur = best_d;
    seq.states.push_back(q + r);
    seq.trace.push_back(d_cur);
    seq.guaranteed.push_back(g_cur);
  }
  return seq;
}

Vec best_response(const CostModel& m, const Vec& mu, const Vec& q) {
  auto h = [&](const Vec& x) { return mu.dot(x) - m->value(x); };
  Vec x = q;
  double hx = h(x);
  if (auto inv = m->inverse_price(mu)) {
    const double hi = h(*inv);
    if (hi >= hx) {
      x = *inv;
      hx = hi;
    }
  }
  for (int it = 0; it < 500; ++it) {
    const PriceSet p = m->price(x);
    if (p.contains(mu, 1e-12)) break;
    const Vec g = mu - p.center;
    if (g.cwiseAbs().maxCoeff() < 1e-13) break;
    double t = 4.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Vec cand = x + t * g;
      const double hc = h(cand);
      if (hc > hx) {
        x = cand;
        hx = hc;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return x;
}

}  // namespace ccmm
