#include "cfpred/basis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace cfpred {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kPi = 3.1415926535897932384626433832795;

long long index_product(const MultiIndex& m) {
  long long p = 1;
  for (int v : m) p *= v;
  return p;
}

long long index_sum(const MultiIndex& m) {
  long long s = 0;
  for (int v : m) s += v;
  return s;
}

int active_count(const MultiIndex& m) {
  int c = 0;
  for (int v : m) c += (v > 1);
  return c;
}

// product ascending, then sum ascending, then lexicographic
bool order_before(const MultiIndex& a, const MultiIndex& b) {
  const long long pa = index_product(a), pb = index_product(b);
  if (pa != pb) return pa < pb;
  const long long sa = index_sum(a), sb = index_sum(b);
  if (sa != sb) return sa < sb;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

void enumerate_rec(int dim, int pos, long long budget, int actives_left,
                   MultiIndex& current, std::vector<MultiIndex>& out) {
  if (pos == dim) {
    out.push_back(current);
    return;
  }
  // index 1 keeps the budget and active count
  current[pos] = 1;
  enumerate_rec(dim, pos + 1, budget, actives_left, current, out);
  if (actives_left > 0) {
    for (long long v = 2; v <= budget; ++v) {
      current[pos] = static_cast<int>(v);
      enumerate_rec(dim, pos + 1, budget / v, actives_left - 1, current, out);
    }
  }
  current[pos] = 1;
}

// All multi-indices with product <= bound and at most `cap` entries > 1.
std::vector<MultiIndex> enumerate_up_to(int dim, long long bound, int cap) {
  std::vector<MultiIndex> out;
  MultiIndex current(dim, 1);
  enumerate_rec(dim, 0, bound, cap, current, out);
  return out;
}

}  // namespace

double cosine_eval(int j, double x) {
  if (j < 1) throw std::invalid_argument("cosine_eval: index j must be >= 1");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::invalid_argument("cosine_eval: x must lie in [0, 1]");
  if (j == 1) return 1.0;
  return kSqrt2 * std::cos(static_cast<double>(j - 1) * kPi * x);
}

SieveDictionary SieveDictionary::build(int dim, int max_terms, int interaction_cap) {
  if (dim < 1) throw std::invalid_argument("SieveDictionary: dim must be >= 1");
  if (max_terms < 1) throw std::invalid_argument("SieveDictionary: max_terms must be >= 1");
  if (interaction_cap < 1 || interaction_cap > dim)
    throw std::invalid_argument("SieveDictionary: interaction_cap must lie in [1, dim]");

  // Grow the product bound until enough admissible terms exist, then keep
  // the sorted prefix. The ordering key starts with the product, so any
  // bound covering the max_terms-th product yields the same prefix.
  std::vector<MultiIndex> candidates;
  for (long long bound = std::max(2, max_terms);; bound *= 2) {
    candidates = enumerate_up_to(dim, bound, interaction_cap);
    if (static_cast<int>(candidates.size()) >= max_terms) break;
    if (bound > (1LL << 40))
      throw std::runtime_error("SieveDictionary: enumeration bound overflow");
  }
  std::sort(candidates.begin(), candidates.end(), order_before);
  candidates.resize(max_terms);

  SieveDictionary d;
  d.dim_ = dim;
  d.interaction_cap_ = interaction_cap;
  d.indices_ = std::move(candidates);
  return d;
}

SieveDictionary SieveDictionary::from_parts(int dim, int interaction_cap,
                                            std::vector<MultiIndex> indices,
                                            std::vector<std::pair<double, double>> scaler) {
  if (dim < 1 || interaction_cap < 1 || interaction_cap > dim)
    throw std::invalid_argument("SieveDictionary::from_parts: bad dimensions");
  if (indices.empty()) throw std::invalid_argument("SieveDictionary::from_parts: no indices");
  if (indices.front() != MultiIndex(dim, 1))
    throw std::invalid_argument("SieveDictionary::from_parts: first index must be the constant term");
  std::set<MultiIndex> seen;
  for (const MultiIndex& m : indices) {
    if (static_cast<int>(m.size()) != dim)
      throw std::invalid_argument("SieveDictionary::from_parts: index length mismatch");
    for (int v : m)
      if (v < 1) throw std::invalid_argument("SieveDictionary::from_parts: entries must be >= 1");
    if (active_count(m) > interaction_cap)
      throw std::invalid_argument("SieveDictionary::from_parts: interaction cap violated");
    if (!seen.insert(m).second)
      throw std::invalid_argument("SieveDictionary::from_parts: duplicate multi-index");
  }
  if (!scaler.empty()) {
    if (static_cast<int>(scaler.size()) != dim)
      throw std::invalid_argument("SieveDictionary::from_parts: scaler length mismatch");
    for (const auto& [lo, hi] : scaler)
      if (!(lo < hi)) throw std::invalid_argument("SieveDictionary::from_parts: scaler needs min < max");
  }
  SieveDictionary d;
  d.dim_ = dim;
  d.interaction_cap_ = interaction_cap;
  d.indices_ = std::move(indices);
  d.scaler_ = std::move(scaler);
  return d;
}

std::vector<std::pair<double, double>> fit_scaler(const Eigen::MatrixXd& z) {
  if (z.rows() < 2) throw std::invalid_argument("fit_scaler: need at least 2 rows");
  if (!z.allFinite()) throw std::invalid_argument("fit_scaler: non-finite values");
  std::vector<std::pair<double, double>> s(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double lo = z.col(c).minCoeff();
    const double hi = z.col(c).maxCoeff();
    if (!(lo < hi))
      throw std::invalid_argument("fit_scaler: degenerate (constant) covariate column " +
                                  std::to_string(c));
    s[static_cast<std::size_t>(c)] = {lo, hi};
  }
  return s;
}

void SieveDictionary::fit_scaler(const Eigen::MatrixXd& z) {
  if (z.cols() != dim_)
    throw std::invalid_argument("SieveDictionary::fit_scaler: dimension mismatch");
  scaler_ = cfpred::fit_scaler(z);
}

Eigen::MatrixXd SieveDictionary::featurize(const Eigen::MatrixXd& z) const {
  if (z.cols() != dim_)
    throw std::invalid_argument("SieveDictionary::featurize: dimension mismatch");
  if (scaler_.empty())
    throw std::invalid_argument("SieveDictionary::featurize: scaler not fitted");
  if (!z.allFinite()) throw std::invalid_argument("SieveDictionary::featurize: non-finite values");

  const Eigen::Index n = z.rows();
  const int terms = max_terms();

  // Scale once, clamp out-of-range prediction points to [0, 1].
  Eigen::MatrixXd u(n, dim_);
  for (int c = 0; c < dim_; ++c) {
    const auto [lo, hi] = scaler_[static_cast<std::size_t>(c)];
    const double inv = 1.0 / (hi - lo);
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = (z(i, c) - lo) * inv;
      u(i, c) = std::clamp(v, 0.0, 1.0);
    }
  }

  Eigen::MatrixXd out(n, terms);
  for (int t = 0; t < terms; ++t) {
    const MultiIndex& m = indices_[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = 1.0;
      for (int c = 0; c < dim_; ++c) {
        const int j = m[static_cast<std::size_t>(c)];
        if (j > 1) v *= kSqrt2 * std::cos(static_cast<double>(j - 1) * kPi * u(i, c));
      }
      out(i, t) = v;
    }
  }
  return out;
}

}  // namespace cfpred
