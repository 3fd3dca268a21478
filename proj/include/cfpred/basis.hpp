#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace cfpred {

// j-th orthonormal cosine basis function on [0, 1]:
//   b_1(x) = 1,   b_j(x) = sqrt(2) * cos((j - 1) * pi * x)  for j >= 2.
// Throws std::invalid_argument for j < 1 or x outside [0, 1].
double cosine_eval(int j, double x);

// One univariate index per covariate dimension; entry 1 selects the
// constant function in that dimension, so entries > 1 mark active
// dimensions of a tensor-product term.
using MultiIndex = std::vector<int>;

// Tensor-product cosine dictionary over [0,1]^dim with a deterministic
// low-order-first ordering: terms sorted by product of indices, ties by
// sum, remaining ties lexicographically. Terms with more than
// interaction_cap entries > 1 are excluded. The first term is always the
// constant (all-ones) index.
//
// Immutable once built and scaled; featurize() is a pure function, so
// dictionaries are safe to share across threads.
class SieveDictionary {
 public:
  static SieveDictionary build(int dim, int max_terms, int interaction_cap);

  // Reassembles a dictionary from serialized parts, validating invariants.
  static SieveDictionary from_parts(int dim, int interaction_cap,
                                    std::vector<MultiIndex> indices,
                                    std::vector<std::pair<double, double>> scaler);

  // Records per-column (min, max) from z for unit-interval rescaling.
  // Columns with min == max are rejected as degenerate.
  void fit_scaler(const Eigen::MatrixXd& z);

  bool scaler_fitted() const { return !scaler_.empty(); }

  // Design matrix: entry (i, j) = prod_k b_{idx_j[k]}(s_k(z(i, k))) where
  // s_k rescales by the fitted (min, max) and clamps to [0, 1].
  Eigen::MatrixXd featurize(const Eigen::MatrixXd& z) const;

  int dim() const { return dim_; }
  int max_terms() const { return static_cast<int>(indices_.size()); }
  int interaction_cap() const { return interaction_cap_; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  const std::vector<std::pair<double, double>>& scaler() const { return scaler_; }

 private:
  SieveDictionary() = default;
  int dim_ = 0;
  int interaction_cap_ = 0;
  std::vector<MultiIndex> indices_;
  std::vector<std::pair<double, double>> scaler_;
};

// Per-column empirical (min, max). Requires n >= 2 and min < max in every
// column; a constant column raises std::invalid_argument naming the column.
std::vector<std::pair<double, double>> fit_scaler(const Eigen::MatrixXd& z);

}  // namespace cfpred
