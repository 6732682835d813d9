#pragma once

#include "ccmm/numeric.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ccmm {

class OutcomeSpace {
 public:
  OutcomeSpace(std::vector<std::string> outcomes, Mat payoff,
               std::vector<std::string> securities = {});

  int num_outcomes() const { return static_cast<int>(payoff_.rows()); }
  int dim() const { return static_cast<int>(payoff_.cols()); }
  const Mat& payoff() const { return payoff_; }
  Vec row(int w) const { return payoff_.row(w).transpose(); }
  const std::vector<std::string>& outcomes() const { return outcomes_; }
  const std::vector<std::string>& securities() const { return securities_; }
  OutcomeSet all() const;

  // Rows of the payoff matrix restricted to E, one vertex per row.
  Mat vertices(const OutcomeSet& E) const;

  // If payoff rows are distinct unit vectors covering every security,
  // returns the security index of each outcome.
  std::optional<std::vector<int>> simplex_map() const;
  bool is_binary() const;

  static OutcomeSpace simplex(int K);
  static OutcomeSpace binary_cube(int K);
  static OutcomeSpace square() { return binary_cube(2); }
  static OutcomeSpace medal_counts(int n);
  // One security paying the listed values.
  static OutcomeSpace line(const std::vector<double>& values);

 private:
  std::vector<std::string> outcomes_;
  Mat payoff_;
  std::vector<std::string> securities_;
};

using SpacePtr = std::shared_ptr<const OutcomeSpace>;

inline SpacePtr share(OutcomeSpace s) {
  return std::make_shared<const OutcomeSpace>(std::move(s));
}

class Observation {
 public:
  Observation(std::vector<int> labels, std::vector<std::string> names = {});

  int num_outcomes() const { return static_cast<int>(labels_.size()); }
  int num_realizations() const { return static_cast<int>(names_.size()); }
  int label(int w) const { return labels_.at(w); }
  const std::vector<int>& labels() const { return labels_; }
  const std::string& name(int x) const { return names_.at(x); }
  const OutcomeSet& cell(int x) const;
  int find(const std::string& name) const;

  static Observation trivial(int num_outcomes);
  static Observation identity(int num_outcomes);
  // Realization = value of the listed payoff coordinates; realizations ordered
  // lexicographically by value.
  static Observation coordinates(const OutcomeSpace& space, const std::vector<int>& coords);
  static Observation payoff_sum(const OutcomeSpace& space, const std::vector<int>& coords);
  static Observation from_cells(int num_outcomes, const std::vector<OutcomeSet>& cells);

 private:
  std::vector<int> labels_;
  std::vector<std::string> names_;
  std::vector<OutcomeSet> cells_;
};

class BlockStructure {
 public:
  BlockStructure(std::vector<std::vector<int>> blocks, int K);
  static BlockStructure singletons(int K);
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const std::vector<int>& block(int g) const { return blocks_.at(g); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  int dim() const { return K_; }
  Vec gather(const Vec& v, int g) const;
  void scatter(const Vec& part, int g, Vec& out) const;

 private:
  std::vector<std::vector<int>> blocks_;
  int K_;
};

struct ExposureWitness {
  Vec v;
  double margin = 0.0;
};

OutcomeSet conditional_outcomes(const OutcomeSpace& space, const Observation& obs, int x);

// Convex weights over the rows of V reproducing mu.
std::optional<Vec> hull_weights(const Mat& V, const Vec& mu, double tol = 1e-9);

std::optional<Vec> membership(const OutcomeSpace& space, const Vec& mu, const OutcomeSet& E,
                              double tol = 1e-9);

bool face_check(const OutcomeSpace& space, const Observation& obs, int x, double tol = 1e-9);

std::vector<std::optional<ExposureWitness>> exposure_witness(const OutcomeSpace& space,
                                                             const Observation& obs);

// v . rho(w) >= v . rho(w') + margin for w in the cell and w' outside it.
bool verify_exposure(const OutcomeSpace& space, const OutcomeSet& cell, const ExposureWitness& w,
                     double tol = 1e-9);

}  // namespace ccmm
