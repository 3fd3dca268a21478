#include "cfpred/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cfpred/rng.hpp"

namespace cfpred {

namespace {

constexpr double kMuEps = 1e-8;       // clamp for binomial mean in loss/weights
constexpr double kObjSlack = 1e-13;   // tolerated objective increase per step

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

void validate(const GlmProblem& p) {
  const Eigen::Index n = p.X.rows();
  if (p.y.size() != n) throw std::invalid_argument("fit_lasso: y length mismatch");
  if (p.weights.size() != 0 && p.weights.size() != n)
    throw std::invalid_argument("fit_lasso: weights length mismatch");
  if (p.offset.size() != 0 && p.offset.size() != n)
    throw std::invalid_argument("fit_lasso: offset length mismatch");
  if (!p.X.allFinite() || !p.y.allFinite())
    throw std::invalid_argument("fit_lasso: non-finite values in X or y");
  if (p.weights.size() != 0) {
    if (!p.weights.allFinite() || p.weights.minCoeff() < 0.0)
      throw std::invalid_argument("fit_lasso: weights must be finite and non-negative");
    if (p.weights.maxCoeff() <= 0.0)
      throw std::invalid_argument("fit_lasso: at least one weight must be positive");
  }
  if (p.offset.size() != 0 && !p.offset.allFinite())
    throw std::invalid_argument("fit_lasso: non-finite offset");
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda))
    throw std::invalid_argument("fit_lasso: lambda must be finite and >= 0");
  if (p.family == Family::binomial) {
    if (p.y.minCoeff() < 0.0 || p.y.maxCoeff() > 1.0)
      throw std::invalid_argument("fit_lasso: binomial response must lie in [0, 1]");
  }
}

Eigen::VectorXd effective_weights(const GlmProblem& p) {
  if (p.weights.size() != 0) return p.weights;
  return Eigen::VectorXd::Ones(p.X.rows());
}

Eigen::VectorXd effective_offset(const GlmProblem& p) {
  if (p.offset.size() != 0) return p.offset;
  return Eigen::VectorXd::Zero(p.X.rows());
}

double binomial_nll(double y, double mu) {
  const double m = std::clamp(mu, kMuEps, 1.0 - kMuEps);
  return -(y * std::log(m) + (1.0 - y) * std::log(1.0 - m));
}

double l1_term(const GlmProblem& p, const Eigen::VectorXd& beta) {
  double s = 0.0;
  const Eigen::Index j0 = p.penalize_intercept_term ? 0 : 1;
  for (Eigen::Index j = j0; j < beta.size(); ++j) s += std::abs(beta[j]);
  return p.lambda * s;
}

// One full cycle of coordinate descent on the weighted gaussian problem
//   (1/n) sum wn_i (r_i)^2 / 2 + lambda * |beta_pen|,
// with r maintained as the current residual. Returns max |delta beta|.
double cd_cycle(const Eigen::MatrixXd& X, const Eigen::VectorXd& wn,
                const Eigen::VectorXd& col_a, double lambda, bool penalize_intercept,
                Eigen::VectorXd& beta, Eigen::VectorXd& r) {
  double max_delta = 0.0;
  const Eigen::Index p = X.cols();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double a = col_a[j];
    if (a <= 0.0) continue;  // column vanishes under the weights
    const double c =
        (wn.array() * X.col(j).array() * r.array()).sum() + a * beta[j];
    const bool pen = penalize_intercept || j > 0;
    const double bnew = pen ? soft_threshold(c, lambda) / a : c / a;
    const double d = bnew - beta[j];
    if (d != 0.0) {
      r -= X.col(j) * d;
      beta[j] = bnew;
      max_delta = std::max(max_delta, std::abs(d));
    }
  }
  return max_delta;
}

// Exact re-solve of the unpenalized column so its score is ~0 at return.
void polish_unpenalized(const Eigen::MatrixXd& X, const Eigen::VectorXd& wn,
                        const Eigen::VectorXd& col_a, bool penalize_intercept,
                        Eigen::VectorXd& beta, Eigen::VectorXd& r) {
  if (penalize_intercept || col_a[0] <= 0.0) return;
  const double c = (wn.array() * X.col(0).array() * r.array()).sum() / col_a[0];
  if (c != 0.0) {
    r -= X.col(0) * c;
    beta[0] += c;
  }
}

PenalizedFit fit_gaussian(const GlmProblem& p, const LassoOptions& opt) {
  const Eigen::Index n = p.X.rows();
  const Eigen::Index np = p.X.cols();
  const Eigen::VectorXd w = effective_weights(p);
  const Eigen::VectorXd off = effective_offset(p);
  const Eigen::VectorXd wn = w / static_cast<double>(n);

  Eigen::VectorXd beta = opt.init.size() == np ? opt.init : Eigen::VectorXd::Zero(np);
  Eigen::VectorXd r = p.y - off - p.X * beta;
  Eigen::VectorXd col_a(np);
  for (Eigen::Index j = 0; j < np; ++j)
    col_a[j] = (wn.array() * p.X.col(j).array().square()).sum();

  // stricter stationarity target for the unpenalized case (least squares)
  const double kkt_target = p.lambda > 0.0 ? opt.kkt_tol_gaussian
                                           : std::min(opt.kkt_tol_gaussian, 1e-10);

  PenalizedFit fit;
  fit.family = Family::gaussian;
  auto objective = [&]() { return 0.5 * (wn.array() * r.array().square()).sum() + l1_term(p, beta); };

  int iter = 0;
  bool converged = false;
  while (iter < opt.max_iter) {
    const double max_delta = cd_cycle(p.X, wn, col_a, p.lambda, p.penalize_intercept_term, beta, r);
    ++iter;
    if (opt.objective_trace) opt.objective_trace->push_back(objective());
    if (max_delta < opt.tol_gaussian) {
      polish_unpenalized(p.X, wn, col_a, p.penalize_intercept_term, beta, r);
      if (kkt_violation(p, beta) <= kkt_target) {
        converged = true;
        break;
      }
    }
  }
  fit.coefficients = beta;
  fit.iterations = iter;
  fit.converged = converged;
  fit.final_objective = objective();
  fit.kkt_max_violation = kkt_violation(p, beta);
  return fit;
}

PenalizedFit fit_binomial(const GlmProblem& p, const LassoOptions& opt) {
  const Eigen::Index n = p.X.rows();
  const Eigen::Index np = p.X.cols();
  const Eigen::VectorXd w = effective_weights(p);
  const Eigen::VectorXd off = effective_offset(p);
  const Eigen::VectorXd wn = w / static_cast<double>(n);

  Eigen::VectorXd beta = opt.init.size() == np ? opt.init : Eigen::VectorXd::Zero(np);

  auto true_objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = off + p.X * b;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (wn[i] > 0.0) s += wn[i] * binomial_nll(p.y[i], expit(eta[i]));
    return s + l1_term(p, b);
  };

  PenalizedFit fit;
  fit.family = Family::binomial;
  double obj = true_objective(beta);
  if (opt.objective_trace) opt.objective_trace->push_back(obj);

  int iter = 0;
  bool converged = false;
  while (iter < opt.max_iter) {
    const Eigen::VectorXd eta = off + p.X * beta;
    Eigen::VectorXd wq(n), u(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = expit(eta[i]);
      const double v = std::max(mu * (1.0 - mu), kMuEps);
      wq[i] = wn[i] * v;
      u[i] = (eta[i] - off[i]) + (p.y[i] - mu) / v;  // working response on the X*beta scale
    }

    // inner coordinate descent on the quadratic approximation
    Eigen::VectorXd bprop = beta;
    Eigen::VectorXd r = u - p.X * bprop;
    Eigen::VectorXd col_a(np);
    for (Eigen::Index j = 0; j < np; ++j)
      col_a[j] = (wq.array() * p.X.col(j).array().square()).sum();
    const double inner_tol = 0.1 * opt.tol_binomial;
    for (int inner = 0; inner < 1000; ++inner) {
      const double d = cd_cycle(p.X, wq, col_a, p.lambda, p.penalize_intercept_term, bprop, r);
      if (d < inner_tol) break;
    }
    polish_unpenalized(p.X, wq, col_a, p.penalize_intercept_term, bprop, r);

    // step-halving against the true penalized objective
    double obj_prop = true_objective(bprop);
    int halvings = 0;
    while (obj_prop > obj + kObjSlack && halvings < 60) {
      bprop = 0.5 * (bprop + beta);
      obj_prop = true_objective(bprop);
      ++halvings;
    }
    ++iter;
    if (obj_prop > obj + kObjSlack) {
      // no descent direction left; accept current point as-is
      if (opt.objective_trace) opt.objective_trace->push_back(obj);
      converged = kkt_violation(p, beta) <= opt.kkt_tol_binomial;
      break;
    }

    const double max_change = (bprop - beta).cwiseAbs().maxCoeff();
    beta = bprop;
    obj = obj_prop;
    if (opt.objective_trace) opt.objective_trace->push_back(obj);
    if (max_change < opt.tol_binomial && kkt_violation(p, beta) <= opt.kkt_tol_binomial) {
      converged = true;
      break;
    }
  }

  fit.coefficients = beta;
  fit.iterations = iter;
  fit.converged = converged;
  fit.final_objective = obj;
  fit.kkt_max_violation = kkt_violation(p, beta);
  return fit;
}

}  // namespace

PenalizedFit fit_lasso(const GlmProblem& problem, const LassoOptions& options) {
  validate(problem);
  if (problem.X.cols() == 0) throw std::invalid_argument("fit_lasso: empty design matrix");
  return problem.family == Family::gaussian ? fit_gaussian(problem, options)
                                            : fit_binomial(problem, options);
}

Eigen::VectorXd predict_linear(const PenalizedFit& fit, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& offset) {
  if (X.cols() != fit.coefficients.size())
    throw std::invalid_argument("predict_linear: column count mismatch");
  if (offset.size() != 0 && offset.size() != X.rows())
    throw std::invalid_argument("predict_linear: offset length mismatch");
  Eigen::VectorXd eta = X * fit.coefficients;
  if (offset.size() != 0) eta += offset;
  if (fit.family == Family::binomial)
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = expit(eta[i]);
  return eta;
}

double kkt_violation(const GlmProblem& problem, const Eigen::VectorXd& coefficients) {
  if (problem.X.cols() != coefficients.size())
    throw std::invalid_argument("kkt_violation: coefficient length mismatch");
  const Eigen::Index n = problem.X.rows();
  const Eigen::VectorXd w = effective_weights(problem);
  const Eigen::VectorXd off = effective_offset(problem);
  const Eigen::VectorXd eta = off + problem.X * coefficients;

  Eigen::VectorXd dl(n);  // w_i * dloss/deta / n
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = problem.family == Family::gaussian ? (eta[i] - problem.y[i])
                                                        : (expit(eta[i]) - problem.y[i]);
    dl[i] = w[i] * d / static_cast<double>(n);
  }
  const Eigen::VectorXd g = problem.X.transpose() * dl;

  double worst = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    const bool pen = problem.penalize_intercept_term || j > 0;
    const double lam = pen ? problem.lambda : 0.0;
    double v;
    if (coefficients[j] == 0.0)
      v = std::max(0.0, std::abs(g[j]) - lam);
    else
      v = std::abs(g[j] + lam * (coefficients[j] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

double penalized_objective(const GlmProblem& problem, const Eigen::VectorXd& coefficients) {
  if (problem.X.cols() != coefficients.size())
    throw std::invalid_argument("penalized_objective: coefficient length mismatch");
  const Eigen::Index n = problem.X.rows();
  const Eigen::VectorXd w = effective_weights(problem);
  const Eigen::VectorXd off = effective_offset(problem);
  const Eigen::VectorXd eta = off + problem.X * coefficients;
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w[i] <= 0.0) continue;
    if (problem.family == Family::gaussian) {
      const double r = problem.y[i] - eta[i];
      s += w[i] * 0.5 * r * r;
    } else {
      s += w[i] * binomial_nll(problem.y[i], expit(eta[i]));
    }
  }
  return s / static_cast<double>(n) + l1_term(problem, coefficients);
}

std::vector<double> lambda_grid(const GlmProblem& problem, int n_lambda, double min_ratio) {
  if (n_lambda < 1) throw std::invalid_argument("lambda_grid: n_lambda must be >= 1");
  if (!(min_ratio > 0.0 && min_ratio < 1.0))
    throw std::invalid_argument("lambda_grid: min_ratio must lie in (0, 1)");

  // Null model: unpenalized column solved exactly, everything else at 0.
  GlmProblem null_p = problem;
  null_p.lambda = std::numeric_limits<double>::max();
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(problem.X.cols());
  if (!problem.penalize_intercept_term) {
    const Eigen::Index n = problem.X.rows();
    const Eigen::VectorXd w = effective_weights(problem);
    const Eigen::VectorXd off = effective_offset(problem);
    if (problem.family == Family::gaussian) {
      const double denom = (w.array() * problem.X.col(0).array().square()).sum();
      if (denom > 0.0)
        beta0[0] = (w.array() * problem.X.col(0).array() * (problem.y - off).array()).sum() / denom;
    } else {
      for (int it = 0; it < 100; ++it) {
        double grad = 0.0, hess = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double mu = expit(off[i] + problem.X(i, 0) * beta0[0]);
          grad += w[i] * (mu - problem.y[i]) * problem.X(i, 0);
          hess += w[i] * std::max(mu * (1.0 - mu), kMuEps) * problem.X(i, 0) * problem.X(i, 0);
        }
        if (hess <= 0.0) break;
        const double step = grad / hess;
        beta0[0] -= step;
        if (std::abs(step) < 1e-12) break;
      }
    }
  }

  const Eigen::Index n = problem.X.rows();
  const Eigen::VectorXd w = effective_weights(problem);
  const Eigen::VectorXd off = effective_offset(problem);
  const Eigen::VectorXd eta = off + problem.X * beta0;
  double lambda_max = 0.0;
  for (Eigen::Index j = problem.penalize_intercept_term ? 0 : 1; j < problem.X.cols(); ++j) {
    double g = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = problem.family == Family::gaussian ? (eta[i] - problem.y[i])
                                                          : (expit(eta[i]) - problem.y[i]);
      g += w[i] * d * problem.X(i, j);
    }
    lambda_max = std::max(lambda_max, std::abs(g) / static_cast<double>(n));
  }
  lambda_max = std::max(lambda_max * 1.000001, 1e-10);

  std::vector<double> grid(static_cast<std::size_t>(n_lambda));
  if (n_lambda == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double lr = std::log(lambda_max), lmin = std::log(lambda_max * min_ratio);
  for (int k = 0; k < n_lambda; ++k)
    grid[static_cast<std::size_t>(k)] =
        std::exp(lr + (lmin - lr) * static_cast<double>(k) / static_cast<double>(n_lambda - 1));
  return grid;
}

double cv_choose_lambda(const GlmProblem& problem, int folds, int n_lambda, double min_ratio,
                        std::uint64_t seed) {
  validate(problem);
  const int n = static_cast<int>(problem.X.rows());
  if (folds < 2) throw std::invalid_argument("cv_choose_lambda: folds must be >= 2");
  if (n < 2 * folds) throw std::invalid_argument("cv_choose_lambda: too few rows for CV");

  const std::vector<double> grid = lambda_grid(problem, n_lambda, min_ratio);
  const Eigen::VectorXd w = effective_weights(problem);
  const Eigen::VectorXd off = effective_offset(problem);

  Rng rng(derive_seed(seed, {0x6376666f6c64ULL}));  // "cvfold"
  const std::vector<int> assign = balanced_folds(n, folds, rng);

  std::vector<double> cv_err(grid.size(), 0.0);
  std::vector<double> cv_wsum(grid.size(), 0.0);

  for (int k = 0; k < folds; ++k) {
    std::vector<int> tr, te;
    for (int i = 0; i < n; ++i) (assign[i] == k ? te : tr).push_back(i);
    GlmProblem sub;
    sub.family = problem.family;
    sub.penalize_intercept_term = problem.penalize_intercept_term;
    sub.X.resize(static_cast<Eigen::Index>(tr.size()), problem.X.cols());
    sub.y.resize(static_cast<Eigen::Index>(tr.size()));
    sub.weights.resize(static_cast<Eigen::Index>(tr.size()));
    sub.offset.resize(static_cast<Eigen::Index>(tr.size()));
    for (std::size_t i = 0; i < tr.size(); ++i) {
      sub.X.row(static_cast<Eigen::Index>(i)) = problem.X.row(tr[i]);
      sub.y[static_cast<Eigen::Index>(i)] = problem.y[tr[i]];
      sub.weights[static_cast<Eigen::Index>(i)] = w[tr[i]];
      sub.offset[static_cast<Eigen::Index>(i)] = off[tr[i]];
    }
    if (sub.weights.maxCoeff() <= 0.0) continue;  // fold carries no weight

    LassoOptions opt;
    Eigen::VectorXd warm;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      sub.lambda = grid[g];
      opt.init = warm;
      const PenalizedFit f = fit_lasso(sub, opt);
      warm = f.coefficients;
      for (int i : te) {
        const double eta = off[i] + problem.X.row(i).dot(f.coefficients);
        double err;
        if (problem.family == Family::gaussian) {
          const double r = problem.y[i] - eta;
          err = r * r;
        } else {
          err = 2.0 * binomial_nll(problem.y[i], expit(eta));
        }
        cv_err[g] += w[i] * err;
        cv_wsum[g] += w[i];
      }
    }
  }

  std::size_t best = 0;
  double best_err = std::numeric_limits<double>::max();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double e = cv_wsum[g] > 0.0 ? cv_err[g] / cv_wsum[g] : std::numeric_limits<double>::max();
    if (e < best_err - 1e-15) {
      best_err = e;
      best = g;
    }
  }
  return grid[best];
}

}  // namespace cfpred
