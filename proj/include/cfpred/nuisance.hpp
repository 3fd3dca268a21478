#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>

#include "cfpred/glm.hpp"
#include "cfpred/trees.hpp"

namespace cfpred {

// A fitted nuisance model: mean-scale predictions for arbitrary covariate
// rows. Immutable once returned; safe for concurrent prediction.
using NuisanceModel = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

enum class NuisanceKind { sieve_lasso, tree_ensemble, oracle, custom };

struct SieveLassoParams {
  int max_terms = 50;
  int interaction_cap = 2;
  int cv_folds = 5;
  int n_lambda = 20;
  double lambda_min_ratio = 1e-4;
  std::optional<double> lambda;  // fixed value skips cross-validation
};

struct NuisanceLearnerSpec {
  NuisanceKind kind = NuisanceKind::tree_ensemble;
  SieveLassoParams sieve;
  TreeEnsembleParams tree;
  Family outcome_family = Family::gaussian;
  // kind == oracle: a known function used directly (tests, sanity runs)
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> oracle;
  // kind == custom: caller-supplied training procedure (receives exactly
  // the rows the built-ins would train on)
  std::function<NuisanceModel(const Eigen::MatrixXd&, const Eigen::VectorXd&)> custom;
};

// Per-observation nuisance predictions for one analysis sample.
struct NuisanceEstimates {
  Eigen::VectorXd g_hat;                     // clipped propensity, in [clip_lo, clip_hi]
  Eigen::VectorXd q_hat;                     // initial outcome regression
  std::optional<Eigen::VectorXd> q_targeted; // after the targeting update
  double clip_lo = 0.01;
  double clip_hi = 0.99;
};

// P(A=1 | L). Predictions lie in (0, 1) before clipping. Throws on a
// single-class treatment vector or a sample below min_n.
NuisanceModel fit_propensity(const NuisanceLearnerSpec& spec, const Eigen::MatrixXd& L,
                             const Eigen::VectorXd& A, std::uint64_t seed, int min_n = 50);

// E(Y | A=1, L), fitted on the treated subsample only. Throws when fewer
// than min_treated treated rows are available.
NuisanceModel fit_outcome_regression(const NuisanceLearnerSpec& spec, const Eigen::MatrixXd& L,
                                     const Eigen::VectorXd& A, const Eigen::VectorXd& Y,
                                     std::uint64_t seed, int min_treated = 25);

// Componentwise clamp into [lo, hi]; requires 0 < lo < hi < 1.
Eigen::VectorXd clip_propensity(const Eigen::VectorXd& g, double lo, double hi);

}  // namespace cfpred
