#include "ccmm/lcmm.hpp"

#include "ccmm/lp.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ccmm {
namespace {

constexpr double kMemberTol = 1e-9;

double objective(const LcmmModel& model, const Vec& q, const Vec& eta) {
  return direct_sum_cost(model, q + model.A * eta) - model.b.dot(eta);
}

Vec objective_gradient(const LcmmModel& model, const Vec& q, const Vec& eta) {
  return model.A.transpose() * direct_sum_price(model, q + model.A * eta) - model.b;
}

std::optional<Mat> direct_sum_hessian(const LcmmModel& model, const Vec& q) {
  const int K = model.dim();
  Mat H = Mat::Zero(K, K);
  for (int g = 0; g < model.blocks.num_blocks(); ++g) {
    const auto Hg = model.block_costs[g]->hessian(model.blocks.gather(q, g));
    if (!Hg) return std::nullopt;
    const auto& idx = model.blocks.block(g);
    for (size_t i = 0; i < idx.size(); ++i)
      for (size_t j = 0; j < idx.size(); ++j) H(idx[i], idx[j]) = (*Hg)(i, j);
  }
  return H;
}

// Gradient components that can still decrease the objective inside [0, H].
double projected_gradient_norm(const Vec& eta, const Vec& g, double H) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double pg = g(i);
    if (eta(i) <= 0.0) pg = std::min(pg, 0.0);
    if (eta(i) >= H) pg = std::max(pg, 0.0);
    worst = std::max(worst, std::abs(pg));
  }
  return worst;
}

Vec clamp_box(const Vec& eta, double H) { return eta.cwiseMax(0.0).cwiseMin(H); }

void fill_certificate(const LcmmModel& model, const Vec& q, ArbitrageSolution& sol) {
  const Vec shifted = q + sol.delta;
  const Vec mu = direct_sum_price(model, shifted);
  const Vec slack = model.A.transpose() * mu - model.b;
  sol.certificate_gap = direct_sum_divergence(model, mu, shifted) + slack.dot(sol.eta);
  sol.infeasibility = slack.size() ? std::max(0.0, -slack.minCoeff()) : 0.0;
}

class LcmmCost : public CostFunction {
 public:
  explicit LcmmCost(LcmmModel model) : CostFunction(model.space), model_(std::move(model)) {
    model_.validate();
  }
  CostKind kind() const override { return CostKind::lcmm; }
  double value(const Vec& q) const override { return lcmm_cost(model_, q).first; }
  PriceSet price(const Vec& q) const override {
    const auto sol = lcmm_cost(model_, q).second;
    for (int g = 0; g < model_.blocks.num_blocks(); ++g)
      if (!model_.block_costs[g]->price(model_.blocks.gather(q + sol.delta, g)).is_point())
        return numeric_price(*this, q);
    return PriceSet::point(direct_sum_price(model_, q + sol.delta));
  }
  double conjugate(const Vec& mu) const override {
    if (mu.size() != dim() || !in_constraint_set(model_, mu, kMemberTol)) return kInf;
    return direct_sum_conjugate(model_, mu);
  }
  Vec conjugate_gradient(const Vec& mu) const override {
    return direct_sum_conjugate_gradient(model_, mu);
  }
  std::optional<Vec> inverse_price(const Vec& mu) const override {
    if (!in_constraint_set(model_, mu, kMemberTol)) return std::nullopt;
    Vec q = Vec::Zero(dim());
    for (int g = 0; g < model_.blocks.num_blocks(); ++g) {
      auto qg = model_.block_costs[g]->inverse_price(model_.blocks.gather(mu, g));
      if (!qg) return std::nullopt;
      model_.blocks.scatter(*qg, g, q);
    }
    return q;
  }
  bool strictly_convex_conjugate() const override {
    for (const auto& c : model_.block_costs)
      if (!c->strictly_convex_conjugate()) return false;
    return true;
  }

 private:
  LcmmModel model_;
};

}  // namespace

void LcmmModel::validate() const {
  if (!space) throw std::invalid_argument("lcmm model without an outcome space");
  const int K = blocks.dim();
  if (space->dim() != K) throw std::invalid_argument("blocks do not match the outcome space");
  if (static_cast<int>(block_costs.size()) != blocks.num_blocks())
    throw std::invalid_argument("one cost per block is required");
  for (int g = 0; g < blocks.num_blocks(); ++g) {
    if (!block_costs[g]) throw std::invalid_argument("missing block cost");
    if (block_costs[g]->dim() != static_cast<int>(blocks.block(g).size()))
      throw std::invalid_argument("block cost dimension does not match its block");
  }
  if (A.rows() != K || A.cols() != b.size())
    throw std::invalid_argument("constraint matrix has the wrong shape");
  if (!A.allFinite() || !b.allFinite()) throw std::invalid_argument("constraints must be finite");
  for (int w = 0; w < space->num_outcomes(); ++w) {
    const Vec rho = space->row(w);
    if (b.size() && (A.transpose() * rho - b).minCoeff() < -kMemberTol)
      throw std::invalid_argument("outcome " + space->outcomes()[w] + " violates the constraints");
    for (int g = 0; g < blocks.num_blocks(); ++g)
      if (block_costs[g]->conjugate(blocks.gather(rho, g)) == kInf)
        throw std::invalid_argument("block payoff outside its block price space");
  }
}

LcmmModel LcmmModel::with_block_costs(std::vector<CostModel> costs) const {
  LcmmModel m = *this;
  m.block_costs = std::move(costs);
  return m;
}

double direct_sum_cost(const LcmmModel& model, const Vec& q) {
  double c = 0.0;
  for (int g = 0; g < model.blocks.num_blocks(); ++g)
    c += model.block_costs[g]->value(model.blocks.gather(q, g));
  return c;
}

double direct_sum_conjugate(const LcmmModel& model, const Vec& mu) {
  double r = 0.0;
  for (int g = 0; g < model.blocks.num_blocks(); ++g) {
    r = sat_add(r, model.block_costs[g]->conjugate(model.blocks.gather(mu, g)));
    if (r == kInf) return kInf;
  }
  return r;
}

double direct_sum_divergence(const LcmmModel& model, const Vec& mu, const Vec& q) {
  const double r = direct_sum_conjugate(model, mu);
  if (r == kInf) return kInf;
  return r + direct_sum_cost(model, q) - q.dot(mu);
}

Vec direct_sum_price(const LcmmModel& model, const Vec& q) {
  Vec p = Vec::Zero(model.dim());
  for (int g = 0; g < model.blocks.num_blocks(); ++g)
    model.blocks.scatter(model.block_costs[g]->price(model.blocks.gather(q, g)).center, g, p);
  return p;
}

Vec direct_sum_conjugate_gradient(const LcmmModel& model, const Vec& mu) {
  Vec d = Vec::Zero(model.dim());
  for (int g = 0; g < model.blocks.num_blocks(); ++g)
    model.blocks.scatter(model.block_costs[g]->conjugate_gradient(model.blocks.gather(mu, g)), g, d);
  return d;
}

std::pair<double, ArbitrageSolution> lcmm_cost(const LcmmModel& model, const Vec& q, double tol) {
  require_finite(q, "state");
  if (q.size() != model.dim()) throw std::invalid_argument("state has the wrong dimension");
  const int mc = model.num_constraints();
  ArbitrageSolution sol;
  sol.eta = Vec::Zero(mc);
  sol.delta = Vec::Zero(model.dim());
  if (mc == 0) {
    sol.value = direct_sum_cost(model, q);
    fill_certificate(model, q, sol);
    sol.converged = sol.certificate_gap <= tol && sol.infeasibility <= tol;
    return {sol.value, sol};
  }

  double H = 1e3;
  Vec eta = Vec::Zero(mc);
  double f = objective(model, q, eta);
  int it = 0;
  for (int growth = 0; growth < 20; ++growth) {
    for (; it < 500; ++it) {
      const Vec g = objective_gradient(model, q, eta);
      if (projected_gradient_norm(eta, g, H) <= 1e-13) break;

      // Newton step on the coordinates not held at a bound.
      bool moved = false;
      const auto Hq = direct_sum_hessian(model, q + model.A * eta);
      if (Hq) {
        std::vector<int> free;
        for (int i = 0; i < mc; ++i)
          if ((eta(i) > 0.0 || g(i) < 0.0) && (eta(i) < H || g(i) > 0.0)) free.push_back(i);
        if (!free.empty()) {
          const int nf = static_cast<int>(free.size());
          Mat AF(model.dim(), nf);
          Vec gF(nf);
          for (int j = 0; j < nf; ++j) {
            AF.col(j) = model.A.col(free[j]);
            gF(j) = g(free[j]);
          }
          Mat HF = AF.transpose() * (*Hq) * AF;
          HF.diagonal().array() += 1e-12 * (1.0 + HF.trace());
          const Vec dF = -HF.ldlt().solve(gF);
          if (dF.allFinite()) {
            Vec d = Vec::Zero(mc);
            for (int j = 0; j < nf; ++j) d(free[j]) = dF(j);
            for (double step = 1.0; step > 1e-12; step *= 0.5) {
              const Vec cand = clamp_box(eta + step * d, H);
              const double fc = objective(model, q, cand);
              if (fc <= f + 1e-4 * g.dot(cand - eta) && fc <= f) {
                moved = (cand - eta).cwiseAbs().maxCoeff() > 0.0;
                eta = cand;
                f = fc;
                break;
              }
            }
          }
        }
      }
      if (moved) continue;

      // Projected gradient fallback with Armijo backtracking.
      for (double step = 1.0; step > 1e-14; step *= 0.5) {
        const Vec cand = clamp_box(eta - step * g, H);
        const double fc = objective(model, q, cand);
        if (fc <= f + 1e-4 * g.dot(cand - eta) && fc < f) {
          moved = true;
          eta = cand;
          f = fc;
          break;
        }
      }
      if (!moved) break;
    }
    if ((eta.array() < H * (1.0 - 1e-12)).all()) break;
    H *= 4.0;
  }

  sol.eta = eta;
  sol.delta = model.A * eta;
  sol.value = f;
  sol.iterations = it;
  fill_certificate(model, q, sol);
  sol.converged = std::abs(sol.certificate_gap) <= tol && sol.infeasibility <= tol;
  return {sol.value, sol};
}

double lcmm_divergence(const LcmmModel& model, const Vec& mu, const Vec& q) {
  if (mu.size() != model.dim() || !membership(*model.space, mu, model.space->all(), kMemberTol))
    return kInf;
  const auto sol = lcmm_cost(model, q).second;
  const double d = direct_sum_divergence(model, mu, q + sol.delta);
  if (d == kInf) return kInf;
  return d + (model.A.transpose() * mu - model.b).dot(sol.eta);
}

double lcmm_divergence_generic(const LcmmModel& model, const Vec& mu, const Vec& q) {
  if (mu.size() != model.dim() || !in_constraint_set(model, mu, kMemberTol)) return kInf;
  const double r = direct_sum_conjugate(model, mu);
  if (r == kInf) return kInf;
  return r + lcmm_cost(model, q).first - q.dot(mu);
}

bool in_constraint_set(const LcmmModel& model, const Vec& mu, double tol) {
  if (mu.size() != model.dim() || !mu.allFinite()) return false;
  if (model.num_constraints() && (model.A.transpose() * mu - model.b).minCoeff() < -tol) return false;
  return direct_sum_conjugate(model, mu) != kInf;
}

bool certificate_check(const LcmmModel& model, const Vec& q, const Vec& eta, double tol) {
  if (eta.size() != model.num_constraints() || (eta.size() && eta.minCoeff() < 0.0)) return false;
  ArbitrageSolution sol;
  sol.eta = eta;
  sol.delta = model.A * eta;
  fill_certificate(model, q, sol);
  const Vec mu = direct_sum_price(model, q + sol.delta);
  return in_constraint_set(model, mu, tol) && std::abs(sol.certificate_gap) <= tol;
}

LcmmModel medal_count_model(int n) {
  if (n < 1) throw std::invalid_argument("medal counts needs n >= 1");
  LcmmModel m{share(OutcomeSpace::medal_counts(n)), BlockStructure::singletons(2 * n + 1), {}, Mat(),
              Vec()};
  std::vector<std::vector<int>> blocks;
  for (int i = 0; i < n; ++i) {
    blocks.push_back({i});
    m.block_costs.push_back(make_product_lmsr(1));
  }
  std::vector<int> y;
  for (int j = 0; j <= n; ++j) y.push_back(n + j);
  blocks.push_back(y);
  m.block_costs.push_back(make_lmsr(n + 1));
  m.blocks = BlockStructure(blocks, 2 * n + 1);
  Vec a = Vec::Zero(2 * n + 1);
  for (int i = 0; i < n; ++i) a(i) = 1.0;
  for (int j = 0; j <= n; ++j) a(n + j) = -j;
  m.A = Mat(2 * n + 1, 2);
  m.A.col(0) = a;
  m.A.col(1) = -a;
  m.b = Vec::Zero(2);
  m.validate();
  return m;
}

LcmmModel independent_binary_model(int K) {
  LcmmModel m{share(OutcomeSpace::binary_cube(K)), BlockStructure::singletons(K), {}, Mat(K, 0),
              Vec(0)};
  for (int i = 0; i < K; ++i) m.block_costs.push_back(make_product_lmsr(1));
  m.validate();
  return m;
}

CostModel make_lcmm_cost(LcmmModel model) { return std::make_shared<LcmmCost>(std::move(model)); }

std::string to_string(TightKind kind) {
  switch (kind) {
    case TightKind::tight: return "tight";
    case TightKind::not_tight: return "not_tight";
    case TightKind::tight_by_binary: return "tight_by_binary";
  }
  return "?";
}

Observation block_observation(const LcmmModel& model, int g) {
  return Observation::coordinates(*model.space, model.blocks.block(g));
}

TightnessVerdict tightness_check(const LcmmModel& model, int g, std::uint64_t seed,
                                 int samples_per_value) {
  const OutcomeSpace& sp = *model.space;
  const auto& idx = model.blocks.block(g);
  TightnessVerdict v;
  bool binary = true;
  for (int w = 0; w < sp.num_outcomes(); ++w)
    for (int i : idx) binary = binary && (sp.payoff()(w, i) == 0.0 || sp.payoff()(w, i) == 1.0);
  if (binary) {
    v.kind = TightKind::tight_by_binary;
    return v;
  }
  const Observation X = block_observation(model, g);
  if (X.num_realizations() == 1) return v;

  const int n = sp.num_outcomes();
  const int kg = static_cast<int>(idx.size());
  Rng rng(seed);
  for (int x = 0; x < X.num_realizations(); ++x) {
    const Vec value = model.blocks.gather(sp.row(X.cell(x)[0]), g);
    Mat A(kg + 1, n);
    for (int j = 0; j < kg; ++j) A.row(j) = sp.payoff().col(idx[j]).transpose();
    A.row(kg).setOnes();
    Vec b(kg + 1);
    b.head(kg) = value;
    b(kg) = 1.0;
    for (int s = 0; s < samples_per_value; ++s) {
      const Vec dir = random_uniform(rng, sp.dim(), -1.0, 1.0);
      const auto res = lp::minimize(A, b, sp.payoff() * dir, 1e-10);
      if (res.status != lp::Status::optimal) continue;
      ++v.samples;
      const Vec mu = sp.payoff().transpose() * res.x;
      if (!membership(sp, mu, X.cell(x), 1e-8)) {
        v.kind = TightKind::not_tight;
        v.counterexample = mu;
        v.realization = value;
        return v;
      }
    }
  }
  return v;
}

}  // namespace ccmm
