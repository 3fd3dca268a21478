#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "cfpred/basis.hpp"
#include "cfpred/glm.hpp"

namespace cfpred {

enum class Link { identity, logit };

struct TargetingConfig {
  Link link = Link::identity;
  int J_n = 0;                   // 0 -> derive from the dictionary in use
  int interaction_cap = 2;       // D'
  double lambda_constant = 1.0;  // c in lambda = c * sqrt(log(J_n) / n)
  bool lambda_cv = false;        // 5-fold CV override of the lambda rule
  double C_of_D = 0.5;           // constant in the default J_n rule
  int hard_cap = 5000;           // upper bound on J_n
};

struct TargetingResult {
  Eigen::VectorXd epsilon;                 // submodel coefficients, one per basis direction
  Eigen::VectorXd q_targeted;              // updated outcome-regression predictions, all rows
  Eigen::VectorXd targeting_term_before;
  Eigen::VectorXd targeting_term_after;
  double lambda_used = 0.0;
  int iterations = 0;
};

// t_j = (1/n) sum_i A_i (1 - g_i)/g_i (Y_i - q_i) b_j(Z_i), j = 1..J_n.
// Requires g in (0, 1]; the full-sample 1/n normalization is part of the
// definition.
Eigen::VectorXd compute_targeting_term(const Eigen::VectorXd& A, const Eigen::VectorXd& Y,
                                       const Eigen::VectorXd& g_hat, const Eigen::VectorXd& q,
                                       const Eigen::MatrixXd& Z_features);

// Fits the offset submodel h{Q} = h{Q0} + epsilon' b(Z) (1-g)/g by
// l1-penalized regression on the treated rows (weights A_i, objective
// normalized by the full n) with lambda = c * sqrt(log(J_n)/n), and
// returns predictions updated on every row. The column for the constant
// basis function is left unpenalized, so its post-update targeting term
// vanishes; every penalized term is bounded by lambda at convergence.
// Throws std::runtime_error with diagnostics if the solver does not
// converge.
TargetingResult target_q(const Eigen::VectorXd& A, const Eigen::VectorXd& Y,
                         const Eigen::VectorXd& g_hat, const Eigen::VectorXd& q0,
                         const SieveDictionary& dictionary, const Eigen::MatrixXd& Z,
                         const TargetingConfig& config);

// min(hard_cap, max(1, round(C * d^Dp * n^{1/3} * (ln n)^{Dp-1}))).
int default_Jn(long n, int d, int D_prime, double C_of_D, int hard_cap = 5000);

// Basis counts used in the reference benchmark tables for dim(Z) of 2, 5
// and 20; falls back to the default_Jn rule otherwise.
int paper_basis_count(int dim_z, long n, int D_prime = 2, double C_of_D = 0.5);

}  // namespace cfpred
