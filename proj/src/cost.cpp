#include "ccmm/cost.hpp"

#include "ccmm/frank_wolfe.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ccmm {
namespace {

constexpr double kDomainTol = 1e-9;
constexpr double kInverseClamp = 40.0;

class Lmsr : public CostFunction {
 public:
  explicit Lmsr(SpacePtr space) : CostFunction(std::move(space)) {
    const auto map = space_->simplex_map();
    if (!map) throw std::invalid_argument("lmsr needs a simplex outcome space");
    security_of_ = *map;
  }
  CostKind kind() const override { return CostKind::lmsr; }
  double value(const Vec& q) const override { return log_sum_exp(q); }
  PriceSet price(const Vec& q) const override { return PriceSet::point(softmax(q)); }
  double conjugate(const Vec& mu) const override {
    if (mu.size() != dim() || !mu.allFinite()) return kInf;
    if ((mu.array() < -kDomainTol).any() || std::abs(mu.sum() - 1.0) > kDomainTol) return kInf;
    double r = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) r += xlogx(mu(i));
    return r;
  }
  Vec conjugate_gradient(const Vec& mu) const override {
    Vec g(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) g(i) = safe_log(mu(i)) + 1.0;
    return g;
  }
  Projection project(const Vec& q, const OutcomeSet& E) const override {
    if (E.empty()) throw std::invalid_argument("projection onto an empty event");
    std::vector<int> S;
    for (int w : E) S.push_back(security_of_.at(w));
    Vec sub(S.size());
    for (size_t j = 0; j < S.size(); ++j) sub(j) = q(S[j]);
    const Vec p = softmax(sub);
    Projection out;
    out.mu = Vec::Zero(dim());
    for (size_t j = 0; j < S.size(); ++j) out.mu(S[j]) = p(j);
    out.value = -log_sum_exp(sub);
    return out;
  }
  std::optional<Vec> inverse_price(const Vec& mu) const override {
    Vec q(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      q(i) = std::max(safe_log(mu(i)), -kInverseClamp);
    return q;
  }
  std::optional<Mat> hessian(const Vec& q) const override {
    const Vec p = softmax(q);
    Mat H = -p * p.transpose();
    H.diagonal() += p;
    return H;
  }

 private:
  std::vector<int> security_of_;
};

class ProductLmsr : public CostFunction {
 public:
  explicit ProductLmsr(SpacePtr space) : CostFunction(std::move(space)) {
    const int K = dim();
    if (K > 20 || space_->num_outcomes() != (1 << K) || !space_->is_binary())
      throw std::invalid_argument("product-lmsr needs the full binary cube");
    std::set<std::vector<double>> rows;
    for (int w = 0; w < space_->num_outcomes(); ++w) {
      const Vec r = space_->row(w);
      rows.insert(std::vector<double>(r.data(), r.data() + K));
    }
    if (static_cast<int>(rows.size()) != space_->num_outcomes())
      throw std::invalid_argument("product-lmsr needs distinct binary outcomes");
  }
  CostKind kind() const override { return CostKind::product_lmsr; }
  double value(const Vec& q) const override {
    double c = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) c += softplus(q(i));
    return c;
  }
  PriceSet price(const Vec& q) const override {
    Vec p(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) p(i) = sigmoid(q(i));
    return PriceSet::point(p);
  }
  double conjugate(const Vec& mu) const override {
    if (mu.size() != dim() || !mu.allFinite()) return kInf;
    double r = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      if (mu(i) < -kDomainTol || mu(i) > 1.0 + kDomainTol) return kInf;
      const double m = std::clamp(mu(i), 0.0, 1.0);
      r += xlogx(m) + xlogx(1.0 - m);
    }
    return r;
  }
  Vec conjugate_gradient(const Vec& mu) const override {
    Vec g(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) g(i) = safe_log(mu(i)) - safe_log(1.0 - mu(i));
    return g;
  }
  Projection project(const Vec& q, const OutcomeSet& E) const override {
    if (E.empty()) throw std::invalid_argument("projection onto an empty event");
    const int K = dim();
    std::vector<int> fixed(K, 1);
    const Vec first = space_->row(E[0]);
    int n_fixed = K;
    for (int i = 0; i < K; ++i) {
      for (int w : E) {
        if (space_->payoff()(w, i) != first(i)) {
          fixed[i] = 0;
          --n_fixed;
          break;
        }
      }
    }
    const std::set<int> distinct(E.begin(), E.end());
    if (static_cast<int>(distinct.size()) != (1 << (K - n_fixed))) return project_numeric(q, E);
    Projection out;
    out.mu = Vec(K);
    double c = 0.0;
    for (int i = 0; i < K; ++i) {
      if (fixed[i]) {
        out.mu(i) = first(i);
        c += first(i) * q(i);
      } else {
        out.mu(i) = sigmoid(q(i));
        c += softplus(q(i));
      }
    }
    out.value = -c;
    return out;
  }
  std::optional<Vec> inverse_price(const Vec& mu) const override {
    Vec q(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      q(i) = std::clamp(safe_log(mu(i)) - safe_log(1.0 - mu(i)), -kInverseClamp, kInverseClamp);
    return q;
  }
  std::optional<Mat> hessian(const Vec& q) const override {
    Vec d(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      const double p = sigmoid(q(i));
      d(i) = p * (1.0 - p);
    }
    return Mat(d.asDiagonal());
  }
};

class PiecewiseLinear : public CostFunction {
 public:
  explicit PiecewiseLinear(SpacePtr space) : CostFunction(std::move(space)) {
    if (dim() != 1 || space_->num_outcomes() != 2 || space_->payoff()(0, 0) != 0.0 ||
        space_->payoff()(1, 0) != 1.0)
      throw std::invalid_argument("piecewise-linear needs the outcome space {0, 1}");
  }
  CostKind kind() const override { return CostKind::piecewise_linear; }
  double value(const Vec& q) const override { return std::max(0.0, q(0)); }
  PriceSet price(const Vec& q) const override {
    if (q(0) > 0.0) return PriceSet::point(Vec::Ones(1));
    if (q(0) < 0.0) return PriceSet::point(Vec::Zero(1));
    return PriceSet::hull({Vec::Zero(1), Vec::Ones(1)});
  }
  double conjugate(const Vec& mu) const override {
    if (mu.size() != 1 || !mu.allFinite()) return kInf;
    return (mu(0) >= -kDomainTol && mu(0) <= 1.0 + kDomainTol) ? 0.0 : kInf;
  }
  Vec conjugate_gradient(const Vec& mu) const override { return Vec::Zero(mu.size()); }
  Projection project(const Vec& q, const OutcomeSet& E) const override {
    if (E.empty()) throw std::invalid_argument("projection onto an empty event");
    bool has0 = false, has1 = false;
    for (int w : E) (space_->payoff()(w, 0) == 0.0 ? has0 : has1) = true;
    Projection out;
    out.mu = Vec(1);
    if (has0 && has1) {
      if (q(0) > 0.0) out.mu(0) = 1.0;
      else if (q(0) < 0.0) out.mu(0) = 0.0;
      else {
        out.mu(0) = 0.5;
        out.unique = false;
      }
    } else {
      out.mu(0) = has1 ? 1.0 : 0.0;
    }
    out.value = -q(0) * out.mu(0);
    return out;
  }
  std::optional<Vec> inverse_price(const Vec& mu) const override {
    if (mu(0) < -kDomainTol || mu(0) > 1.0 + kDomainTol) return std::nullopt;
    return Vec::Zero(1);
  }
  bool strictly_convex_conjugate() const override { return false; }
};

class RestrictedCost : public CostFunction {
 public:
  RestrictedCost(CostModel base, OutcomeSet E)
      : CostFunction(base->space_ptr()), base_(std::move(base)), E_(std::move(E)) {
    if (E_.empty()) throw std::invalid_argument("restriction to an empty event");
    std::sort(E_.begin(), E_.end());
    E_.erase(std::unique(E_.begin(), E_.end()), E_.end());
  }
  CostKind kind() const override { return CostKind::restricted; }
  double value(const Vec& q) const override { return -base_->project(q, E_).value; }
  PriceSet price(const Vec& q) const override {
    return PriceSet::point(base_->project(q, E_).mu);
  }
  double conjugate(const Vec& mu) const override {
    if (!membership(*space_, mu, E_, kDomainTol)) return kInf;
    return base_->conjugate(mu);
  }
  Vec conjugate_gradient(const Vec& mu) const override { return base_->conjugate_gradient(mu); }
  Projection project(const Vec& q, const OutcomeSet& E) const override {
    OutcomeSet both;
    std::set_intersection(E_.begin(), E_.end(), E.begin(), E.end(), std::back_inserter(both));
    if (both.empty()) throw std::invalid_argument("projection onto an event outside the restriction");
    return base_->project(q, both);
  }
  std::optional<Vec> inverse_price(const Vec& mu) const override {
    return base_->inverse_price(mu);
  }
  bool strictly_convex_conjugate() const override { return base_->strictly_convex_conjugate(); }

 private:
  CostModel base_;
  OutcomeSet E_;
};

class ScaledCost : public CostFunction {
 public:
  ScaledCost(CostModel base, double alpha)
      : CostFunction(base->space_ptr()), base_(std::move(base)), alpha_(alpha) {}
  CostKind kind() const override { return CostKind::scaled; }
  double value(const Vec& q) const override { return alpha_ * base_->value(q / alpha_); }
  PriceSet price(const Vec& q) const override { return base_->price(q / alpha_); }
  double conjugate(const Vec& mu) const override {
    const double r = base_->conjugate(mu);
    return r == kInf ? kInf : alpha_ * r;
  }
  Vec conjugate_gradient(const Vec& mu) const override {
    return alpha_ * base_->conjugate_gradient(mu);
  }
  Projection project(const Vec& q, const OutcomeSet& E) const override {
    Projection p = base_->project(q / alpha_, E);
    p.value *= alpha_;
    p.gap *= alpha_;
    return p;
  }
  std::optional<Vec> inverse_price(const Vec& mu) const override {
    auto q = base_->inverse_price(mu);
    if (q) *q *= alpha_;
    return q;
  }
  std::optional<Mat> hessian(const Vec& q) const override {
    auto H = base_->hessian(q / alpha_);
    if (H) *H /= alpha_;
    return H;
  }
  bool strictly_convex_conjugate() const override { return base_->strictly_convex_conjugate(); }

 private:
  CostModel base_;
  double alpha_;
};

class ShiftedCost : public CostFunction {
 public:
  ShiftedCost(CostModel base, Vec d) : CostFunction(base->space_ptr()), base_(std::move(base)), d_(std::move(d)) {}
  CostKind kind() const override { return CostKind::shifted; }
  double value(const Vec& q) const override { return base_->value(q + d_); }
  PriceSet price(const Vec& q) const override { return base_->price(q + d_); }
  double conjugate(const Vec& mu) const override {
    const double r = base_->conjugate(mu);
    return r == kInf ? kInf : r - mu.dot(d_);
  }
  Vec conjugate_gradient(const Vec& mu) const override {
    return base_->conjugate_gradient(mu) - d_;
  }
  Projection project(const Vec& q, const OutcomeSet& E) const override {
    return base_->project(q + d_, E);
  }
  std::optional<Vec> inverse_price(const Vec& mu) const override {
    auto q = base_->inverse_price(mu);
    if (q) *q -= d_;
    return q;
  }
  std::optional<Mat> hessian(const Vec& q) const override { return base_->hessian(q + d_); }
  bool strictly_convex_conjugate() const override { return base_->strictly_convex_conjugate(); }

 private:
  CostModel base_;
  Vec d_;
};

}  // namespace

std::string to_string(CostKind kind) {
  switch (kind) {
    case CostKind::lmsr: return "lmsr";
    case CostKind::product_lmsr: return "product-lmsr";
    case CostKind::piecewise_linear: return "piecewise-linear";
    case CostKind::restricted: return "restricted";
    case CostKind::switched: return "switched";
    case CostKind::lcmm: return "lcmm";
    case CostKind::scaled: return "scaled";
    case CostKind::shifted: return "shifted";
  }
  return "unknown";
}

PriceSet PriceSet::point(const Vec& p) {
  PriceSet s;
  s.center = p;
  s.lo = p;
  s.hi = p;
  s.vertices = {p};
  return s;
}

PriceSet PriceSet::hull(std::vector<Vec> vertices) {
  if (vertices.empty()) throw std::invalid_argument("empty price set");
  PriceSet s;
  s.lo = vertices[0];
  s.hi = vertices[0];
  s.center = Vec::Zero(vertices[0].size());
  for (const Vec& v : vertices) {
    s.lo = s.lo.cwiseMin(v);
    s.hi = s.hi.cwiseMax(v);
    s.center += v;
  }
  s.center /= static_cast<double>(vertices.size());
  s.vertices = std::move(vertices);
  return s;
}

bool PriceSet::is_point(double tol) const { return (hi - lo).cwiseAbs().maxCoeff() <= tol; }

bool PriceSet::contains(const Vec& mu, double tol) const {
  if (vertices.size() == 1) return max_abs_diff(vertices[0], mu) <= tol;
  Mat V(vertices.size(), mu.size());
  for (size_t i = 0; i < vertices.size(); ++i) V.row(i) = vertices[i].transpose();
  return hull_weights(V, mu, tol).has_value();
}

CostFunction::CostFunction(SpacePtr space) : space_(std::move(space)) {
  if (!space_) throw std::invalid_argument("cost function without an outcome space");
}

PriceSet CostFunction::price(const Vec& q) const { return numeric_price(*this, q); }

Vec CostFunction::conjugate_gradient(const Vec& mu) const {
  const double h = 1e-7;
  Vec g(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    Vec a = mu, b = mu;
    a(i) += h;
    b(i) -= h;
    g(i) = (conjugate(a) - conjugate(b)) / (2 * h);
  }
  return g;
}

Projection CostFunction::project(const Vec& q, const OutcomeSet& E) const {
  return project_numeric(q, E);
}

std::optional<Vec> CostFunction::inverse_price(const Vec&) const { return std::nullopt; }

std::optional<Mat> CostFunction::hessian(const Vec&) const { return std::nullopt; }

Projection CostFunction::project_numeric(const Vec& q, const OutcomeSet& E) const {
  if (E.empty()) throw std::invalid_argument("projection onto an empty event");
  const Mat V = space_->vertices(E);
  Projection out;
  out.unique = strictly_convex_conjugate();
  if (E.size() == 1) {
    out.mu = V.row(0).transpose();
    out.value = sat_add(conjugate(out.mu), -q.dot(out.mu));
    return out;
  }
  const int n = static_cast<int>(E.size());
  fw::Problem problem;
  problem.value = [&](const Vec& lambda) {
    const Vec mu = V.transpose() * lambda;
    return sat_add(conjugate(mu), -q.dot(mu));
  };
  problem.gradient = [&](const Vec& lambda) {
    const Vec mu = V.transpose() * lambda;
    return Vec(V * (conjugate_gradient(mu) - q));
  };
  problem.oracle = [n](const Vec& g) {
    Eigen::Index i = 0;
    g.minCoeff(&i);
    return Vec(Vec::Unit(n, i));
  };
  std::vector<Vec> atoms;
  for (int i = 0; i < n; ++i) atoms.push_back(Vec::Unit(n, i));
  fw::Options options;
  options.max_iter = 1000;
  options.gap_tol = 1e-9;
  const auto res = fw::minimize(problem, atoms, Vec::Constant(n, 1.0 / n), options);
  out.mu = V.transpose() * res.x;
  out.value = res.value;
  out.gap = res.gap;
  out.iterations = res.iterations;
  out.converged = res.converged;
  return out;
}

CostModel make_lmsr(int K) { return std::make_shared<Lmsr>(share(OutcomeSpace::simplex(K))); }
CostModel make_lmsr(SpacePtr space) { return std::make_shared<Lmsr>(std::move(space)); }
CostModel make_product_lmsr(int K) {
  return std::make_shared<ProductLmsr>(share(OutcomeSpace::binary_cube(K)));
}
CostModel make_square() { return make_product_lmsr(2); }
CostModel make_piecewise_linear() {
  return std::make_shared<PiecewiseLinear>(share(OutcomeSpace::line({0.0, 1.0})));
}

double cost(const CostModel& m, const Vec& q) {
  require_finite(q, "state");
  if (q.size() != m->dim()) throw std::invalid_argument("state has the wrong dimension");
  return m->value(q);
}

PriceSet price(const CostModel& m, const Vec& q) {
  require_finite(q, "state");
  return m->price(q);
}

double conjugate(const CostModel& m, const Vec& mu) {
  if (mu.size() != m->dim()) return kInf;
  return m->conjugate(mu);
}

double divergence(const CostModel& m, const Vec& mu, const Vec& q) {
  const double r = conjugate(m, mu);
  if (r == kInf) return kInf;
  return r + cost(m, q) - q.dot(mu);
}

double trade_cost(const CostModel& m, const Vec& q, const Vec& r) {
  require_finite(r, "bundle");
  return cost(m, q + r) - cost(m, q);
}

CostModel restricted_cost(const CostModel& m, const OutcomeSet& E) {
  return std::make_shared<RestrictedCost>(m, E);
}

CostModel scale_liquidity(const CostModel& m, double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("liquidity multiplier must lie in (0, 1]");
  if (alpha == 1.0) return m;
  return std::make_shared<ScaledCost>(m, alpha);
}

CostModel shift_cost(const CostModel& m, const Vec& d) {
  require_finite(d, "shift");
  if (d.size() != m->dim()) throw std::invalid_argument("shift has the wrong dimension");
  if (d.isZero(0.0)) return m;
  return std::make_shared<ShiftedCost>(m, d);
}

PriceSet numeric_price(const CostFunction& m, const Vec& q, double h, double kink_tol) {
  const int K = static_cast<int>(q.size());
  const double f0 = m.value(q);
  Vec lo(K), hi(K);
  std::vector<int> kinks;
  for (int i = 0; i < K; ++i) {
    Vec a = q, b = q, c = q, d = q;
    a(i) += h;
    b(i) += 2 * h;
    c(i) -= h;
    d(i) -= 2 * h;
    const double right = (-3 * f0 + 4 * m.value(a) - m.value(b)) / (2 * h);
    const double left = (3 * f0 - 4 * m.value(c) + m.value(d)) / (2 * h);
    if (std::abs(right - left) > kink_tol) {
      lo(i) = std::min(left, right);
      hi(i) = std::max(left, right);
      kinks.push_back(i);
    } else {
      lo(i) = hi(i) = 0.5 * (left + right);
    }
  }
  if (kinks.empty()) return PriceSet::point(lo);
  std::vector<Vec> vertices;
  const int nk = std::min<int>(static_cast<int>(kinks.size()), 10);
  for (int mask = 0; mask < (1 << nk); ++mask) {
    Vec v = lo;
    for (int j = 0; j < nk; ++j)
      if (mask & (1 << j)) v(kinks[j]) = hi(kinks[j]);
    vertices.push_back(v);
  }
  return PriceSet::hull(std::move(vertices));
}

}  // namespace ccmm
