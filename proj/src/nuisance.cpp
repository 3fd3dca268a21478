#include "cfpred/nuisance.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfpred/basis.hpp"
#include "cfpred/rng.hpp"

namespace cfpred {

namespace {

bool is_binary(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0 && v[i] != 1.0) return false;
  return true;
}

NuisanceModel fit_sieve(const SieveLassoParams& params, Family family, const Eigen::MatrixXd& L,
                        const Eigen::VectorXd& target, std::uint64_t seed) {
  const int dim = static_cast<int>(L.cols());
  const int cap = std::min(params.interaction_cap, dim);
  auto dict = std::make_shared<SieveDictionary>(
      SieveDictionary::build(dim, params.max_terms, cap));
  dict->fit_scaler(L);

  GlmProblem prob;
  prob.X = dict->featurize(L);
  prob.y = target;
  prob.family = family;
  prob.penalize_intercept_term = false;
  if (params.lambda.has_value()) {
    prob.lambda = *params.lambda;
  } else {
    prob.lambda = cv_choose_lambda(prob, params.cv_folds, params.n_lambda,
                                   params.lambda_min_ratio, derive_seed(seed, {0x6c616dULL}));
  }
  auto fit = std::make_shared<PenalizedFit>(fit_lasso(prob));
  return [dict, fit](const Eigen::MatrixXd& Lq) {
    return predict_linear(*fit, dict->featurize(Lq));
  };
}

NuisanceModel fit_trees(const TreeEnsembleParams& params, Family family, const Eigen::MatrixXd& L,
                        const Eigen::VectorXd& target, std::uint64_t seed) {
  TreeEnsembleParams p = params;
  p.seed = derive_seed(seed, {0x676274ULL});
  const TreeLoss loss = family == Family::binomial ? TreeLoss::logistic : TreeLoss::squared;
  auto model = std::make_shared<BoostedTrees>(BoostedTrees::fit(L, target, loss, p));
  const bool clamp_unit = family == Family::binomial;
  return [model, clamp_unit](const Eigen::MatrixXd& Lq) {
    Eigen::VectorXd out = model->predict(Lq);
    if (clamp_unit)
      for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
    return out;
  };
}

NuisanceModel dispatch(const NuisanceLearnerSpec& spec, Family family, const Eigen::MatrixXd& L,
                       const Eigen::VectorXd& target, std::uint64_t seed) {
  switch (spec.kind) {
    case NuisanceKind::sieve_lasso:
      return fit_sieve(spec.sieve, family, L, target, seed);
    case NuisanceKind::tree_ensemble:
      return fit_trees(spec.tree, family, L, target, seed);
    case NuisanceKind::oracle:
      if (!spec.oracle) throw std::invalid_argument("nuisance: oracle function not set");
      return spec.oracle;
    case NuisanceKind::custom:
      if (!spec.custom) throw std::invalid_argument("nuisance: custom factory not set");
      return spec.custom(L, target);
  }
  throw std::invalid_argument("nuisance: unknown learner kind");
}

}  // namespace

NuisanceModel fit_propensity(const NuisanceLearnerSpec& spec, const Eigen::MatrixXd& L,
                             const Eigen::VectorXd& A, std::uint64_t seed, int min_n) {
  if (L.rows() != A.size()) throw std::invalid_argument("fit_propensity: row mismatch");
  if (!is_binary(A)) throw std::invalid_argument("fit_propensity: treatment must be 0/1");
  if (spec.kind != NuisanceKind::oracle) {
    if (L.rows() < min_n)
      throw std::invalid_argument("fit_propensity: fewer than " + std::to_string(min_n) + " rows");
    const double s = A.sum();
    if (s <= 0.0 || s >= static_cast<double>(A.size()))
      throw std::invalid_argument("fit_propensity: degenerate treatment (single class)");
  }
  return dispatch(spec, Family::binomial, L, A, derive_seed(seed, {0x70726f70ULL}));
}

NuisanceModel fit_outcome_regression(const NuisanceLearnerSpec& spec, const Eigen::MatrixXd& L,
                                     const Eigen::VectorXd& A, const Eigen::VectorXd& Y,
                                     std::uint64_t seed, int min_treated) {
  if (L.rows() != A.size() || L.rows() != Y.size())
    throw std::invalid_argument("fit_outcome_regression: row mismatch");
  if (!is_binary(A)) throw std::invalid_argument("fit_outcome_regression: treatment must be 0/1");
  if (spec.kind == NuisanceKind::oracle)
    return dispatch(spec, spec.outcome_family, L, Y, seed);

  std::vector<int> treated;
  for (Eigen::Index i = 0; i < A.size(); ++i)
    if (A[i] == 1.0) treated.push_back(static_cast<int>(i));
  if (static_cast<int>(treated.size()) < min_treated)
    throw std::invalid_argument("fit_outcome_regression: insufficient treated support (" +
                                std::to_string(treated.size()) + " < " +
                                std::to_string(min_treated) + ")");

  Eigen::MatrixXd Lt(static_cast<Eigen::Index>(treated.size()), L.cols());
  Eigen::VectorXd Yt(static_cast<Eigen::Index>(treated.size()));
  for (std::size_t i = 0; i < treated.size(); ++i) {
    Lt.row(static_cast<Eigen::Index>(i)) = L.row(treated[i]);
    Yt[static_cast<Eigen::Index>(i)] = Y[treated[i]];
  }
  return dispatch(spec, spec.outcome_family, Lt, Yt, derive_seed(seed, {0x6f7574ULL}));
}

Eigen::VectorXd clip_propensity(const Eigen::VectorXd& g, double lo, double hi) {
  if (!(lo > 0.0 && lo < hi && hi < 1.0))
    throw std::invalid_argument("clip_propensity: need 0 < lo < hi < 1");
  if (!g.allFinite()) throw std::invalid_argument("clip_propensity: non-finite propensity");
  Eigen::VectorXd out = g;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], lo, hi);
  return out;
}

}  // namespace cfpred
