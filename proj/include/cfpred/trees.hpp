#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace cfpred {

enum class TreeLoss { squared, logistic };

struct TreeEnsembleParams {
  int n_trees = 200;
  int max_depth = 3;
  double learning_rate = 0.1;
  double subsample = 1.0;  // row fraction per tree; 1.0 is fully deterministic anyway
  int min_leaf = 10;
  double l2_reg = 1e-6;
  std::uint64_t seed = 0;
};

// Gradient-boosted shallow regression trees with Newton leaf values.
// Exact greedy splits over pre-sorted features; deterministic given the
// seed. For logistic loss predictions are mapped through expit, so they
// lie strictly inside (0, 1).
class BoostedTrees {
 public:
  static BoostedTrees fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, TreeLoss loss,
                          const TreeEnsembleParams& params);

  // mean-scale predictions (expit of the raw score for logistic loss)
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  int n_trees() const { return static_cast<int>(trees_.size()); }

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  struct Tree {
    std::vector<Node> nodes;
    double eval(const Eigen::MatrixXd& X, Eigen::Index row) const;
  };

  TreeLoss loss_ = TreeLoss::squared;
  double learning_rate_ = 0.1;
  double base_score_ = 0.0;  // raw scale
  std::vector<Tree> trees_;
  Eigen::Index n_features_ = 0;
};

}  // namespace cfpred
