#include "cfpred/targeting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cfpred/rng.hpp"

namespace cfpred {

namespace {

constexpr double kLogitClamp = 1e-6;

void check_g(const Eigen::VectorXd& g) {
  if (!g.allFinite()) throw std::invalid_argument("targeting: non-finite propensity");
  if (g.minCoeff() <= 0.0 || g.maxCoeff() > 1.0)
    throw std::invalid_argument("targeting: propensity must lie in (0, 1]");
}

}  // namespace

Eigen::VectorXd compute_targeting_term(const Eigen::VectorXd& A, const Eigen::VectorXd& Y,
                                       const Eigen::VectorXd& g_hat, const Eigen::VectorXd& q,
                                       const Eigen::MatrixXd& Z_features) {
  const Eigen::Index n = Z_features.rows();
  if (A.size() != n || Y.size() != n || g_hat.size() != n || q.size() != n)
    throw std::invalid_argument("compute_targeting_term: length mismatch");
  check_g(g_hat);

  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i)
    c[i] = A[i] * (1.0 - g_hat[i]) / g_hat[i] * (Y[i] - q[i]);
  return Z_features.transpose() * c / static_cast<double>(n);
}

TargetingResult target_q(const Eigen::VectorXd& A, const Eigen::VectorXd& Y,
                         const Eigen::VectorXd& g_hat, const Eigen::VectorXd& q0,
                         const SieveDictionary& dictionary, const Eigen::MatrixXd& Z,
                         const TargetingConfig& config) {
  const Eigen::Index n = Z.rows();
  if (A.size() != n || Y.size() != n || g_hat.size() != n || q0.size() != n)
    throw std::invalid_argument("target_q: length mismatch");
  check_g(g_hat);
  if (A.sum() <= 0.0) throw std::invalid_argument("target_q: no treated observations");
  const int J = dictionary.max_terms();
  if (J > config.hard_cap)
    throw std::invalid_argument("target_q: J_n = " + std::to_string(J) + " exceeds hard cap " +
                                std::to_string(config.hard_cap));

  // targeting design: column j is b_j(Z) * (1 - g)/g
  const Eigen::MatrixXd B = dictionary.featurize(Z);
  Eigen::VectorXd ratio(n);
  for (Eigen::Index i = 0; i < n; ++i) ratio[i] = (1.0 - g_hat[i]) / g_hat[i];
  const Eigen::MatrixXd X = B.array().colwise() * ratio.array();

  GlmProblem prob;
  prob.X = X;
  prob.y = Y;
  prob.weights = A;
  prob.penalize_intercept_term = false;
  const double lam_rule =
      config.lambda_constant * std::sqrt(std::log(static_cast<double>(J)) / static_cast<double>(n));

  Eigen::VectorXd offset_link;
  if (config.link == Link::identity) {
    prob.family = Family::gaussian;
    prob.offset = q0;
  } else {
    prob.family = Family::binomial;
    offset_link.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
      offset_link[i] = logit(std::clamp(q0[i], kLogitClamp, 1.0 - kLogitClamp));
    prob.offset = offset_link;
    if (Y.minCoeff() < 0.0 || Y.maxCoeff() > 1.0)
      throw std::invalid_argument("target_q: logit link needs outcomes in [0, 1]");
  }
  prob.lambda = lam_rule;
  if (config.lambda_cv)
    prob.lambda = cv_choose_lambda(prob, 5, 20, 1e-4, derive_seed(0x746172ULL, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(J)}));

  const PenalizedFit fit = fit_lasso(prob);
  if (!fit.converged)
    throw std::runtime_error("target_q: solver did not converge (iterations=" +
                             std::to_string(fit.iterations) +
                             ", kkt=" + std::to_string(fit.kkt_max_violation) + ")");

  TargetingResult res;
  res.epsilon = fit.coefficients;
  res.lambda_used = prob.lambda;
  res.iterations = fit.iterations;
  res.targeting_term_before = compute_targeting_term(A, Y, g_hat, q0, B);

  if (config.link == Link::identity) {
    res.q_targeted = q0 + X * fit.coefficients;
  } else {
    res.q_targeted.resize(n);
    const Eigen::VectorXd shift = X * fit.coefficients;
    for (Eigen::Index i = 0; i < n; ++i) res.q_targeted[i] = expit(offset_link[i] + shift[i]);
  }
  res.targeting_term_after = compute_targeting_term(A, Y, g_hat, res.q_targeted, B);
  return res;
}

int default_Jn(long n, int d, int D_prime, double C_of_D, int hard_cap) {
  if (n < 2) throw std::invalid_argument("default_Jn: n must be >= 2");
  if (d < 1 || D_prime < 1 || C_of_D <= 0.0) throw std::invalid_argument("default_Jn: bad arguments");
  const double nn = static_cast<double>(n);
  const double v = C_of_D * std::pow(static_cast<double>(d), D_prime) * std::cbrt(nn) *
                   std::pow(std::log(nn), D_prime - 1);
  const long r = std::lround(v);
  return static_cast<int>(std::min<long>(hard_cap, std::max<long>(1, r)));
}

int paper_basis_count(int dim_z, long n, int D_prime, double C_of_D) {
  switch (dim_z) {
    case 2: return 10;
    case 5: return 20;
    case 20: return 50;
    default: return default_Jn(n, dim_z, D_prime, C_of_D);
  }
}

}  // namespace cfpred
