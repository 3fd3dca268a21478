#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

namespace cfpred {

enum class Family { gaussian, binomial };

inline double expit(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// l1-penalized GLM. Objective:
//   (1/n) sum_i w_i * loss(y_i, offset_i + x_i' beta) + lambda * sum_{j penalized} |beta_j|
// with loss = squared error / 2 (gaussian) or Bernoulli negative
// log-likelihood of mean expit(eta) (binomial; fractional y in [0,1] allowed).
// When penalize_intercept_term is false, column 0 is left unpenalized.
struct GlmProblem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd weights;  // empty -> all ones
  Eigen::VectorXd offset;   // empty -> all zeros
  Family family = Family::gaussian;
  double lambda = 0.0;
  bool penalize_intercept_term = false;
};

struct LassoOptions {
  double tol_gaussian = 1e-8;   // max |coefficient change| per full cycle
  double tol_binomial = 1e-7;
  double kkt_tol_gaussian = 1e-6;
  double kkt_tol_binomial = 1e-4;
  int max_iter = 10000;
  Eigen::VectorXd init;                        // warm start, empty -> zeros
  std::vector<double>* objective_trace = nullptr;  // per outer iteration, for tests
};

struct PenalizedFit {
  Eigen::VectorXd coefficients;
  bool converged = false;
  int iterations = 0;
  double final_objective = 0.0;
  double kkt_max_violation = 0.0;
  Family family = Family::gaussian;
};

// Cyclic coordinate descent with soft-thresholding (gaussian) or an IRLS
// outer loop with a coordinate-descent inner solve and step-halving
// (binomial). Throws std::invalid_argument on malformed input; an iteration
// cap returns converged = false with diagnostics.
PenalizedFit fit_lasso(const GlmProblem& problem, const LassoOptions& options = {});

// offset + X * beta on the link scale; binomial fits are mapped through
// expit to the mean scale.
Eigen::VectorXd predict_linear(const PenalizedFit& fit, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& offset = {});

// Max subgradient-condition violation at `coefficients`:
//   beta_j == 0:  max(0, |g_j| - lambda_j)
//   beta_j != 0:  |g_j + lambda_j * sign(beta_j)|
// with g_j = (1/n) sum_i w_i dloss/deta x_ij and lambda_j = 0 for the
// unpenalized column.
double kkt_violation(const GlmProblem& problem, const Eigen::VectorXd& coefficients);

double penalized_objective(const GlmProblem& problem, const Eigen::VectorXd& coefficients);

// Descending log-spaced grid from the smallest lambda that zeroes every
// penalized coefficient down to lambda_max * min_ratio.
std::vector<double> lambda_grid(const GlmProblem& problem, int n_lambda, double min_ratio);

// K-fold cross-validation over lambda_grid (squared error for gaussian,
// deviance for binomial), warm-started along the path. Ties prefer the
// larger lambda. Deterministic given seed.
double cv_choose_lambda(const GlmProblem& problem, int folds, int n_lambda, double min_ratio,
                        std::uint64_t seed);

}  // namespace cfpred
