#pragma once

#include "ccmm/market.hpp"

#include <memory>
#include <optional>
#include <string>

namespace ccmm {

enum class CostKind { lmsr, product_lmsr, piecewise_linear, restricted, switched, lcmm, scaled, shifted };

std::string to_string(CostKind kind);

// Set of prices at a state: the convex hull of `vertices`.  `lo`/`hi` bound
// each coordinate; their half-difference is the bid-ask spread.
struct PriceSet {
  Vec center;
  Vec lo;
  Vec hi;
  std::vector<Vec> vertices;

  static PriceSet point(const Vec& p);
  static PriceSet hull(std::vector<Vec> vertices);
  bool is_point(double tol = 1e-12) const;
  Vec spread() const { return hi - lo; }
  bool contains(const Vec& mu, double tol = 1e-9) const;
};

// Minimizer of R(mu) - q.mu over M(E).
struct Projection {
  Vec mu;
  double value = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool converged = true;
  bool unique = true;
};

class CostFunction {
 public:
  explicit CostFunction(SpacePtr space);
  virtual ~CostFunction() = default;

  virtual CostKind kind() const = 0;
  const OutcomeSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  int dim() const { return space_->dim(); }

  virtual double value(const Vec& q) const = 0;
  virtual PriceSet price(const Vec& q) const;
  virtual double conjugate(const Vec& mu) const = 0;
  virtual Vec conjugate_gradient(const Vec& mu) const;
  virtual Projection project(const Vec& q, const OutcomeSet& E) const;
  // A state whose price set contains mu, when one is cheap to produce.
  virtual std::optional<Vec> inverse_price(const Vec& mu) const;
  virtual std::optional<Mat> hessian(const Vec& q) const;
  virtual bool strictly_convex_conjugate() const { return true; }

 protected:
  // Away-step conditional gradient over hull-vertex weights of M(E).
  Projection project_numeric(const Vec& q, const OutcomeSet& E) const;

  SpacePtr space_;
};

using CostModel = std::shared_ptr<const CostFunction>;

CostModel make_lmsr(int K);
CostModel make_lmsr(SpacePtr space);
CostModel make_product_lmsr(int K);
CostModel make_square();
CostModel make_piecewise_linear();

double cost(const CostModel& m, const Vec& q);
PriceSet price(const CostModel& m, const Vec& q);
double conjugate(const CostModel& m, const Vec& mu);
double divergence(const CostModel& m, const Vec& mu, const Vec& q);
double trade_cost(const CostModel& m, const Vec& q, const Vec& r);
CostModel restricted_cost(const CostModel& m, const OutcomeSet& E);
CostModel scale_liquidity(const CostModel& m, double alpha);
// q -> C(q + d)
CostModel shift_cost(const CostModel& m, const Vec& d);

// Finite-difference price with one-sided second-order slopes; coordinates whose
// slopes differ by more than kink_tol are reported as intervals.
PriceSet numeric_price(const CostFunction& m, const Vec& q, double h = 1e-5, double kink_tol = 1e-7);

}  // namespace ccmm
