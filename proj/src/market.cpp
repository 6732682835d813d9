#include "ccmm/market.hpp"

#include "ccmm/lp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ccmm {
namespace {

std::string format_value(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string format_key(const std::vector<double>& key) {
  if (key.size() == 1) return format_value(key[0]);
  std::string s = "(";
  for (size_t i = 0; i < key.size(); ++i) {
    if (i) s += ",";
    s += format_value(key[i]);
  }
  return s + ")";
}

Observation from_keys(const std::vector<std::vector<double>>& keys) {
  std::map<std::vector<double>, int> index;
  for (const auto& k : keys) index.emplace(k, 0);
  std::vector<std::string> names;
  int next = 0;
  for (auto& [k, x] : index) {
    x = next++;
    names.push_back(format_key(k));
  }
  std::vector<int> labels;
  labels.reserve(keys.size());
  for (const auto& k : keys) labels.push_back(index.at(k));
  return Observation(std::move(labels), std::move(names));
}

// Outcome weights gamma >= 0 with sum 1 and P gamma = mu, where P = payoff^T.
Mat decomposition_rows(const OutcomeSpace& space) {
  const int K = space.dim();
  const int n = space.num_outcomes();
  Mat A(K + 1, n);
  A.topRows(K) = space.payoff().transpose();
  A.row(K).setOnes();
  return A;
}

}  // namespace

OutcomeSpace::OutcomeSpace(std::vector<std::string> outcomes, Mat payoff,
                           std::vector<std::string> securities)
    : outcomes_(std::move(outcomes)), payoff_(std::move(payoff)), securities_(std::move(securities)) {
  if (payoff_.rows() < 1 || payoff_.cols() < 1)
    throw std::invalid_argument("outcome space needs at least one outcome and one security");
  if (!payoff_.allFinite()) throw std::invalid_argument("payoff matrix has non-finite entries");
  if (outcomes_.empty()) {
    for (int w = 0; w < payoff_.rows(); ++w) outcomes_.push_back("w" + std::to_string(w));
  }
  if (static_cast<Eigen::Index>(outcomes_.size()) != payoff_.rows())
    throw std::invalid_argument("outcome names do not match payoff rows");
  if (securities_.empty()) {
    for (int i = 0; i < payoff_.cols(); ++i) securities_.push_back("s" + std::to_string(i));
  }
  if (static_cast<Eigen::Index>(securities_.size()) != payoff_.cols())
    throw std::invalid_argument("security names do not match payoff columns");
}

OutcomeSet OutcomeSpace::all() const {
  OutcomeSet E(num_outcomes());
  for (int w = 0; w < num_outcomes(); ++w) E[w] = w;
  return E;
}

Mat OutcomeSpace::vertices(const OutcomeSet& E) const {
  Mat V(E.size(), dim());
  for (size_t i = 0; i < E.size(); ++i) V.row(i) = payoff_.row(E[i]);
  return V;
}

std::optional<std::vector<int>> OutcomeSpace::simplex_map() const {
  if (num_outcomes() != dim()) return std::nullopt;
  std::vector<int> map(num_outcomes(), -1);
  std::vector<bool> used(dim(), false);
  for (int w = 0; w < num_outcomes(); ++w) {
    int hot = -1;
    for (int i = 0; i < dim(); ++i) {
      const double v = payoff_(w, i);
      if (v == 1.0 && hot < 0) {
        hot = i;
      } else if (v != 0.0) {
        return std::nullopt;
      }
    }
    if (hot < 0 || used[hot]) return std::nullopt;
    used[hot] = true;
    map[w] = hot;
  }
  return map;
}

bool OutcomeSpace::is_binary() const {
  return (payoff_.array() == 0.0 || payoff_.array() == 1.0).all();
}

OutcomeSpace OutcomeSpace::simplex(int K) {
  if (K < 1) throw std::invalid_argument("simplex needs K >= 1");
  std::vector<std::string> names;
  for (int i = 0; i < K; ++i) names.push_back(std::to_string(i + 1));
  return OutcomeSpace(names, Mat::Identity(K, K), names);
}

OutcomeSpace OutcomeSpace::binary_cube(int K) {
  if (K < 1 || K > 20) throw std::invalid_argument("binary cube needs 1 <= K <= 20");
  const int n = 1 << K;
  Mat P(n, K);
  std::vector<std::string> names;
  for (int w = 0; w < n; ++w) {
    std::string name = "(";
    for (int i = 0; i < K; ++i) {
      // First coordinate is the most significant bit, so outcomes are lexicographic.
      const int bit = (w >> (K - 1 - i)) & 1;
      P(w, i) = bit;
      name += (i ? "," : "") + std::to_string(bit);
    }
    names.push_back(name + ")");
  }
  std::vector<std::string> secs;
  for (int i = 0; i < K; ++i) secs.push_back("w" + std::to_string(i + 1));
  return OutcomeSpace(names, P, secs);
}

OutcomeSpace OutcomeSpace::medal_counts(int n) {
  if (n < 1 || n > 12) throw std::invalid_argument("medal counts needs 1 <= n <= 12");
  const int num = 1 << n;
  const int K = 2 * n + 1;
  Mat P = Mat::Zero(num, K);
  std::vector<std::string> names;
  for (int w = 0; w < num; ++w) {
    int y = 0;
    std::string name = "(";
    for (int i = 0; i < n; ++i) {
      const int bit = (w >> (n - 1 - i)) & 1;
      P(w, i) = bit;
      y += bit;
      name += (i ? "," : "") + std::to_string(bit);
    }
    P(w, n + y) = 1.0;
    names.push_back(name + ")");
  }
  std::vector<std::string> secs;
  for (int i = 0; i < n; ++i) secs.push_back("X" + std::to_string(i + 1));
  for (int y = 0; y <= n; ++y) secs.push_back("Y=" + std::to_string(y));
  return OutcomeSpace(names, P, secs);
}

OutcomeSpace OutcomeSpace::line(const std::vector<double>& values) {
  Mat P(values.size(), 1);
  std::vector<std::string> names;
  for (size_t i = 0; i < values.size(); ++i) {
    P(i, 0) = values[i];
    names.push_back(format_value(values[i]));
  }
  return OutcomeSpace(names, P, {"s"});
}

Observation::Observation(std::vector<int> labels, std::vector<std::string> names)
    : labels_(std::move(labels)), names_(std::move(names)) {
  if (labels_.empty()) throw std::invalid_argument("observation over an empty outcome set");
  const int n_real = *std::max_element(labels_.begin(), labels_.end()) + 1;
  if (*std::min_element(labels_.begin(), labels_.end()) < 0)
    throw std::invalid_argument("negative realization label");
  if (names_.empty()) {
    for (int x = 0; x < n_real; ++x) names_.push_back(std::to_string(x));
  }
  if (static_cast<int>(names_.size()) != n_real)
    throw std::invalid_argument("realization names do not match labels");
  cells_.assign(n_real, {});
  for (int w = 0; w < static_cast<int>(labels_.size()); ++w) cells_[labels_[w]].push_back(w);
  for (const auto& c : cells_)
    if (c.empty()) throw std::invalid_argument("realization with no outcome");
}

const OutcomeSet& Observation::cell(int x) const {
  if (x < 0 || x >= num_realizations()) throw std::out_of_range("unknown realization");
  return cells_[x];
}

int Observation::find(const std::string& name) const {
  for (int x = 0; x < num_realizations(); ++x)
    if (names_[x] == name) return x;
  throw std::out_of_range("unknown realization " + name);
}

Observation Observation::trivial(int num_outcomes) {
  return Observation(std::vector<int>(num_outcomes, 0), {"all"});
}

Observation Observation::identity(int num_outcomes) {
  std::vector<int> labels(num_outcomes);
  for (int w = 0; w < num_outcomes; ++w) labels[w] = w;
  return Observation(labels);
}

Observation Observation::coordinates(const OutcomeSpace& space, const std::vector<int>& coords) {
  std::vector<std::vector<double>> keys;
  for (int w = 0; w < space.num_outcomes(); ++w) {
    std::vector<double> k;
    for (int c : coords) k.push_back(space.payoff()(w, c));
    keys.push_back(k);
  }
  return from_keys(keys);
}

Observation Observation::payoff_sum(const OutcomeSpace& space, const std::vector<int>& coords) {
  std::vector<std::vector<double>> keys;
  for (int w = 0; w < space.num_outcomes(); ++w) {
    double s = 0.0;
    for (int c : coords) s += space.payoff()(w, c);
    keys.push_back({s});
  }
  return from_keys(keys);
}

Observation Observation::from_cells(int num_outcomes, const std::vector<OutcomeSet>& cells) {
  std::vector<int> labels(num_outcomes, -1);
  for (int x = 0; x < static_cast<int>(cells.size()); ++x) {
    for (int w : cells[x]) {
      if (w < 0 || w >= num_outcomes) throw std::invalid_argument("cell outcome out of range");
      if (labels[w] >= 0) throw std::invalid_argument("cells overlap");
      labels[w] = x;
    }
  }
  for (int l : labels)
    if (l < 0) throw std::invalid_argument("cells do not cover every outcome");
  return Observation(labels);
}

BlockStructure::BlockStructure(std::vector<std::vector<int>> blocks, int K)
    : blocks_(std::move(blocks)), K_(K) {
  std::vector<int> seen(K, 0);
  for (const auto& g : blocks_) {
    if (g.empty()) throw std::invalid_argument("empty block");
    for (int i : g) {
      if (i < 0 || i >= K) throw std::invalid_argument("block index out of range");
      if (seen[i]++) throw std::invalid_argument("blocks overlap");
    }
  }
  for (int s : seen)
    if (!s) throw std::invalid_argument("blocks do not cover every security");
}

BlockStructure BlockStructure::singletons(int K) {
  std::vector<std::vector<int>> b;
  for (int i = 0; i < K; ++i) b.push_back({i});
  return BlockStructure(b, K);
}

Vec BlockStructure::gather(const Vec& v, int g) const {
  const auto& idx = blocks_.at(g);
  Vec out(idx.size());
  for (size_t j = 0; j < idx.size(); ++j) out(j) = v(idx[j]);
  return out;
}

void BlockStructure::scatter(const Vec& part, int g, Vec& out) const {
  const auto& idx = blocks_.at(g);
  for (size_t j = 0; j < idx.size(); ++j) out(idx[j]) = part(j);
}

OutcomeSet conditional_outcomes(const OutcomeSpace& space, const Observation& obs, int x) {
  if (obs.num_outcomes() != space.num_outcomes())
    throw std::invalid_argument("observation does not match outcome space");
  return obs.cell(x);
}

std::optional<Vec> hull_weights(const Mat& V, const Vec& mu, double tol) {
  const int n = static_cast<int>(V.rows());
  const int K = static_cast<int>(V.cols());
  if (n == 0 || mu.size() != K) return std::nullopt;
  if (!mu.allFinite()) return std::nullopt;
  Mat A(K + 1, n);
  A.topRows(K) = V.transpose();
  A.row(K).setOnes();
  Vec b(K + 1);
  b.head(K) = mu;
  b(K) = 1.0;
  const auto res = lp::minimize(A, b, Vec::Zero(n), tol);
  if (res.status != lp::Status::optimal) return std::nullopt;
  Vec w = res.x / res.x.sum();
  if (max_abs_diff(V.transpose() * w, mu) > tol) return std::nullopt;
  return w;
}

std::optional<Vec> membership(const OutcomeSpace& space, const Vec& mu, const OutcomeSet& E,
                              double tol) {
  if (E.empty()) throw std::invalid_argument("membership over an empty event");
  return hull_weights(space.vertices(E), mu, tol);
}

bool face_check(const OutcomeSpace& space, const Observation& obs, int x, double tol) {
  const OutcomeSet& cell = conditional_outcomes(space, obs, x);
  const int n = space.num_outcomes();
  if (static_cast<int>(cell.size()) == n) return true;
  std::vector<bool> inside(n, false);
  for (int w : cell) inside[w] = true;

  std::vector<Vec> probes;
  for (int w : cell) probes.push_back(space.row(w));
  for (size_t i = 0; i < cell.size(); ++i)
    for (size_t j = i + 1; j < cell.size(); ++j)
      probes.push_back(0.5 * (space.row(cell[i]) + space.row(cell[j])));
  Vec centroid = Vec::Zero(space.dim());
  for (int w : cell) centroid += space.row(w);
  probes.push_back(centroid / static_cast<double>(cell.size()));

  const Mat A = decomposition_rows(space);
  Vec c = Vec::Zero(n);
  for (int w = 0; w < n; ++w)
    if (!inside[w]) c(w) = -1.0;
  for (const Vec& mu : probes) {
    Vec b(space.dim() + 1);
    b.head(space.dim()) = mu;
    b(space.dim()) = 1.0;
    const auto res = lp::minimize(A, b, c, tol);
    if (res.status != lp::Status::optimal) continue;
    if (-res.objective > tol) return false;
  }
  return true;
}

bool verify_exposure(const OutcomeSpace& space, const OutcomeSet& cell, const ExposureWitness& w,
                     double tol) {
  const int n = space.num_outcomes();
  std::vector<bool> inside(n, false);
  for (int o : cell) inside[o] = true;
  double lo_in = kInf, hi_in = -kInf, hi_out = -kInf;
  for (int o = 0; o < n; ++o) {
    const double v = w.v.dot(space.row(o));
    if (inside[o]) {
      lo_in = std::min(lo_in, v);
      hi_in = std::max(hi_in, v);
    } else {
      hi_out = std::max(hi_out, v);
    }
  }
  if (hi_in - lo_in > tol) return false;
  return hi_out == -kInf || lo_in >= hi_out + w.margin - tol;
}

std::vector<std::optional<ExposureWitness>> exposure_witness(const OutcomeSpace& space,
                                                             const Observation& obs) {
  if (obs.num_outcomes() != space.num_outcomes())
    throw std::invalid_argument("observation does not match outcome space");
  const int K = space.dim();
  const int n = space.num_outcomes();
  const int nx = obs.num_realizations();
  std::vector<std::optional<ExposureWitness>> out(nx);

  if (const auto map = space.simplex_map()) {
    for (int x = 0; x < nx; ++x) {
      ExposureWitness w{Vec::Zero(K), 1.0};
      for (int o : obs.cell(x)) w.v((*map)[o]) = 1.0;
      out[x] = w;
    }
    return out;
  }

  // Binary coordinates that are constant on every cell and jointly identify the cell.
  {
    std::vector<int> g;
    std::map<std::vector<double>, int> seen;
    bool injective = false;
    for (int j = 0; j < K && !injective; ++j) {
      bool ok = true;
      for (int x = 0; x < nx && ok; ++x) {
        const OutcomeSet& c = obs.cell(x);
        const double v0 = space.payoff()(c[0], j);
        if (v0 != 0.0 && v0 != 1.0) ok = false;
        for (int o : c)
          if (space.payoff()(o, j) != v0) ok = false;
      }
      if (!ok) continue;
      g.push_back(j);
      seen.clear();
      injective = true;
      for (int x = 0; x < nx && injective; ++x) {
        std::vector<double> key;
        for (int jj : g) key.push_back(space.payoff()(obs.cell(x)[0], jj));
        injective = seen.emplace(key, x).second;
      }
    }
    if (injective) {
      for (int x = 0; x < nx; ++x) {
        ExposureWitness w{Vec::Zero(K), 1.0};
        for (int j : g) w.v(j) = space.payoff()(obs.cell(x)[0], j) == 1.0 ? 1.0 : -1.0;
        if (verify_exposure(space, obs.cell(x), w)) out[x] = w;
      }
      bool all = true;
      for (const auto& w : out) all = all && w.has_value();
      if (all) return out;
      out.assign(nx, std::nullopt);
    }
  }

  // v = v+ - v-, t = t+ - t-: v.rho(w) = t on the cell and v.rho(w') <= t - 1 elsewhere.
  for (int x = 0; x < nx; ++x) {
    const OutcomeSet& cell = obs.cell(x);
    std::vector<bool> inside(n, false);
    for (int o : cell) inside[o] = true;
    const int n_out = n - static_cast<int>(cell.size());
    const int nv = 2 * K + 2 + n_out;
    Mat A = Mat::Zero(n, nv);
    Vec b = Vec::Zero(n);
    int slack = 0;
    for (int o = 0; o < n; ++o) {
      const Vec r = space.row(o);
      A.block(o, 0, 1, K) = r.transpose();
      A.block(o, K, 1, K) = -r.transpose();
      A(o, 2 * K) = -1.0;
      A(o, 2 * K + 1) = 1.0;
      if (!inside[o]) {
        A(o, 2 * K + 2 + slack++) = 1.0;
        b(o) = -1.0;
      }
    }
    Vec c = Vec::Zero(nv);
    c.head(2 * K).setOnes();
    const auto res = lp::minimize(A, b, c, 1e-9);
    if (res.status != lp::Status::optimal) continue;
    ExposureWitness w;
    w.v = res.x.head(K) - res.x.segment(K, K);
    double lo_in = kInf, hi_out = -kInf;
    for (int o = 0; o < n; ++o) {
      const double v = w.v.dot(space.row(o));
      if (inside[o]) lo_in = std::min(lo_in, v);
      else hi_out = std::max(hi_out, v);
    }
    w.margin = hi_out == -kInf ? 1.0 : lo_in - hi_out;
    if (w.margin > 0.5 && verify_exposure(space, cell, w, 1e-7)) out[x] = w;
  }
  return out;
}

}  // namespace ccmm
