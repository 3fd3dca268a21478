#include "cfpred/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cfpred/glm.hpp"
#include "cfpred/rng.hpp"

namespace cfpred {

namespace {

constexpr double kMuEps = 1e-6;

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

double leaf_value(double g, double h, double l2) { return -g / (h + l2); }

double gain_term(double g, double h, double l2) { return g * g / (h + l2); }

}  // namespace

double BoostedTrees::Tree::eval(const Eigen::MatrixXd& X, Eigen::Index row) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const Node& nd = nodes[static_cast<std::size_t>(node)];
    node = X(row, nd.feature) < nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

BoostedTrees BoostedTrees::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, TreeLoss loss,
                               const TreeEnsembleParams& params) {
  const Eigen::Index n = X.rows();
  const int nf = static_cast<int>(X.cols());
  if (y.size() != n) throw std::invalid_argument("BoostedTrees: y length mismatch");
  if (n < 1 || nf < 1) throw std::invalid_argument("BoostedTrees: empty data");
  if (!X.allFinite() || !y.allFinite()) throw std::invalid_argument("BoostedTrees: non-finite data");
  if (params.n_trees < 0 || params.max_depth < 1 || params.learning_rate <= 0.0 ||
      params.subsample <= 0.0 || params.subsample > 1.0 || params.min_leaf < 1)
    throw std::invalid_argument("BoostedTrees: bad hyperparameters");

  BoostedTrees model;
  model.loss_ = loss;
  model.learning_rate_ = params.learning_rate;
  model.n_features_ = nf;

  const double ymean = y.mean();
  if (loss == TreeLoss::squared) {
    model.base_score_ = ymean;
  } else {
    const double p = std::clamp(ymean, kMuEps, 1.0 - kMuEps);
    model.base_score_ = logit(p);
  }

  // per-feature row order, sorted once
  std::vector<std::vector<int>> order(static_cast<std::size_t>(nf), std::vector<int>(static_cast<std::size_t>(n)));
  for (int f = 0; f < nf; ++f) {
    auto& ord = order[static_cast<std::size_t>(f)];
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(),
                     [&](int a, int b) { return X(a, f) < X(b, f); });
  }

  Eigen::VectorXd score = Eigen::VectorXd::Constant(n, model.base_score_);
  Eigen::VectorXd grad(n), hess(n);
  std::vector<int> node_of(static_cast<std::size_t>(n));
  Rng rng(derive_seed(params.seed, {0x74726565ULL}));  // "tree"

  for (int t = 0; t < params.n_trees; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (loss == TreeLoss::squared) {
        grad[i] = score[i] - y[i];
        hess[i] = 1.0;
      } else {
        const double mu = expit(score[i]);
        grad[i] = mu - y[i];
        hess[i] = std::max(mu * (1.0 - mu), kMuEps);
      }
    }

    // row subsampling (rows outside the sample carry node -2)
    if (params.subsample < 1.0) {
      for (Eigen::Index i = 0; i < n; ++i)
        node_of[static_cast<std::size_t>(i)] = rng.uniform() < params.subsample ? 0 : -2;
    } else {
      std::fill(node_of.begin(), node_of.end(), 0);
    }

    Tree tree;
    tree.nodes.push_back(Node{});
    std::vector<int> level_nodes{0};
    std::vector<double> node_g{0.0}, node_h{0.0};
    std::vector<int> node_count{0};
    for (Eigen::Index i = 0; i < n; ++i)
      if (node_of[static_cast<std::size_t>(i)] == 0) {
        node_g[0] += grad[i];
        node_h[0] += hess[i];
        ++node_count[0];
      }
    tree.nodes[0].value = leaf_value(node_g[0], node_h[0], params.l2_reg);

    for (int depth = 0; depth < params.max_depth && !level_nodes.empty(); ++depth) {
      const int max_id = *std::max_element(level_nodes.begin(), level_nodes.end());
      std::vector<SplitChoice> best(static_cast<std::size_t>(max_id) + 1);
      std::vector<double> run_g(static_cast<std::size_t>(max_id) + 1);
      std::vector<double> run_h(static_cast<std::size_t>(max_id) + 1);
      std::vector<int> run_c(static_cast<std::size_t>(max_id) + 1);
      std::vector<double> last_val(static_cast<std::size_t>(max_id) + 1);
      std::vector<bool> started(static_cast<std::size_t>(max_id) + 1);

      for (int f = 0; f < nf; ++f) {
        for (int id : level_nodes) {
          run_g[static_cast<std::size_t>(id)] = 0.0;
          run_h[static_cast<std::size_t>(id)] = 0.0;
          run_c[static_cast<std::size_t>(id)] = 0;
          started[static_cast<std::size_t>(id)] = false;
        }
        for (int row : order[static_cast<std::size_t>(f)]) {
          const int id = node_of[static_cast<std::size_t>(row)];
          if (id < 0) continue;
          const std::size_t uid = static_cast<std::size_t>(id);
          if (id > max_id || node_count[uid] < 2 * params.min_leaf) continue;
          const double xv = X(row, f);
          if (started[uid] && xv > last_val[uid] && run_c[uid] >= params.min_leaf &&
              node_count[uid] - run_c[uid] >= params.min_leaf) {
            const double gl = run_g[uid], hl = run_h[uid];
            const double gr = node_g[uid] - gl, hr = node_h[uid] - hl;
            const double gain = gain_term(gl, hl, params.l2_reg) + gain_term(gr, hr, params.l2_reg) -
                                gain_term(node_g[uid], node_h[uid], params.l2_reg);
            SplitChoice& b = best[uid];
            if (gain > b.gain + 1e-12) {
              b.gain = gain;
              b.feature = f;
              b.threshold = 0.5 * (xv + last_val[uid]);
            }
          }
          run_g[uid] += grad[row];
          run_h[uid] += hess[row];
          run_c[uid] += 1;
          last_val[uid] = xv;
          started[uid] = true;
        }
      }

      // materialize the chosen splits and push rows down one level
      std::vector<int> next_nodes;
      std::vector<double> next_g, next_h;
      std::vector<int> next_c;
      bool any_split = false;
      for (int id : level_nodes) {
        const SplitChoice& b = best[static_cast<std::size_t>(id)];
        if (b.feature < 0 || b.gain <= 1e-12) continue;
        any_split = true;
        Node& nd = tree.nodes[static_cast<std::size_t>(id)];
        nd.feature = b.feature;
        nd.threshold = b.threshold;
        nd.left = static_cast<int>(tree.nodes.size());
        nd.right = nd.left + 1;
        tree.nodes.push_back(Node{});
        tree.nodes.push_back(Node{});
        next_nodes.push_back(nd.left);
        next_nodes.push_back(nd.right);
      }
      if (!any_split) break;

      const int new_max = static_cast<int>(tree.nodes.size()) - 1;
      next_g.assign(static_cast<std::size_t>(new_max) + 1, 0.0);
      next_h.assign(static_cast<std::size_t>(new_max) + 1, 0.0);
      next_c.assign(static_cast<std::size_t>(new_max) + 1, 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        int id = node_of[static_cast<std::size_t>(i)];
        if (id < 0) continue;
        const Node& nd = tree.nodes[static_cast<std::size_t>(id)];
        if (nd.feature < 0) continue;  // stays in an unsplit node
        id = X(i, nd.feature) < nd.threshold ? nd.left : nd.right;
        node_of[static_cast<std::size_t>(i)] = id;
        next_g[static_cast<std::size_t>(id)] += grad[i];
        next_h[static_cast<std::size_t>(id)] += hess[i];
        next_c[static_cast<std::size_t>(id)] += 1;
      }
      for (int id : next_nodes)
        tree.nodes[static_cast<std::size_t>(id)].value =
            leaf_value(next_g[static_cast<std::size_t>(id)], next_h[static_cast<std::size_t>(id)],
                       params.l2_reg);
      level_nodes = std::move(next_nodes);
      node_g = std::move(next_g);
      node_h = std::move(next_h);
      node_count = std::move(next_c);
    }

    // skip trees that never split and add nothing
    if (tree.nodes.size() == 1 && std::abs(tree.nodes[0].value) < 1e-15) continue;

    for (Eigen::Index i = 0; i < n; ++i)
      score[i] += params.learning_rate * tree.eval(X, i);
    model.trees_.push_back(std::move(tree));
  }

  return model;
}

Eigen::VectorXd BoostedTrees::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features_) throw std::invalid_argument("BoostedTrees::predict: column mismatch");
  Eigen::VectorXd score = Eigen::VectorXd::Constant(X.rows(), base_score_);
  for (const Tree& t : trees_)
    for (Eigen::Index i = 0; i < X.rows(); ++i) score[i] += learning_rate_ * t.eval(X, i);
  if (loss_ == TreeLoss::logistic)
    for (Eigen::Index i = 0; i < score.size(); ++i) score[i] = expit(score[i]);
  return score;
}

}  // namespace cfpred
