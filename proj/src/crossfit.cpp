#include "cmliv/crossfit.hpp"

#include <algorithm>
#include <string>

#include "cmliv/common.hpp"
#include "cmliv/parallel.hpp"
#include "cmliv/rng.hpp"

namespace cmliv {

namespace {

Eigen::MatrixXd target_features(const IvDataset& ds, CrossFitTarget target) {
  if (target != CrossFitTarget::d_on_z1x) return ds.x;
  Eigen::MatrixXd f(ds.n(), ds.x.cols() + 1);
  f.col(0) = ds.z1;
  f.rightCols(ds.x.cols()) = ds.x;
  return f;
}

const Eigen::VectorXd& target_column(const IvDataset& ds, CrossFitTarget target) {
  switch (target) {
    case CrossFitTarget::y_on_x: return ds.y;
    case CrossFitTarget::d_on_x:
    case CrossFitTarget::d_on_z1x: return ds.d;
    case CrossFitTarget::z1_on_x: return ds.z1;
  }
  throw config_error("unknown cross-fit target");
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<long>& rows) {
  Eigen::MatrixXd out(static_cast<long>(rows.size()), m.cols());
  for (long r = 0; r < out.rows(); ++r) out.row(r) = m.row(rows[r]);
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<long>& rows) {
  Eigen::VectorXd out(static_cast<long>(rows.size()));
  for (long r = 0; r < out.rows(); ++r) out[r] = v[rows[r]];
  return out;
}

std::optional<Eigen::VectorXd> take_weights(const IvDataset& ds, const std::vector<long>& rows) {
  if (!ds.weight) return std::nullopt;
  return take(*ds.weight, rows);
}

void check_inputs(const IvDataset& ds, const FoldPlan& plan) {
  require_valid(ds);
  if (plan.n() != ds.n())
    throw config_error("fold plan covers " + std::to_string(plan.n()) +
                       " observations, dataset has " + std::to_string(ds.n()));
}

RegressorSpec bind_oracle_target(const RegressorSpec& spec, CrossFitTarget target) {
  RegressorSpec bound = spec;
  if (bound.kind == LearnerKind::oracle) bound.oracle_target = target;
  return bound;
}

}  // namespace

Eigen::VectorXd cross_fit(const IvDataset& ds, const FoldPlan& plan, const RegressorSpec& spec,
                          CrossFitTarget target, int workers) {
  check_inputs(ds, plan);
  const Eigen::MatrixXd features = target_features(ds, target);
  const Eigen::VectorXd& targets = target_column(ds, target);
  Eigen::VectorXd out(ds.n());

  if (spec.kind == LearnerKind::oracle) {
    // The oracle ignores training rows, so the out-of-fold structure is
    // trivially satisfied with a single evaluation.
    RegressorSpec bound = bind_oracle_target(spec, target);
    if (!bound.oracle_config) throw config_error("oracle learner needs a design configuration");
    auto reg = make_oracle_regressor(*bound.oracle_config, target);
    return reg->predict(features);
  }

  parallel_for(plan.fold_count, workers, [&](long fold) {
    const auto train = plan.complement_indices(static_cast<int>(fold));
    const auto test = plan.fold_indices(static_cast<int>(fold));
    if (train.empty()) throw config_error("cross-fit fold has an empty training complement");
    RegressorSpec fold_spec = spec;
    fold_spec.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(target),
                                             static_cast<std::uint64_t>(fold)});
    auto reg = fit(fold_spec, take_rows(features, train), take(targets, train),
                   take_weights(ds, train), /*workers=*/1);
    Eigen::VectorXd pred = reg->predict(take_rows(features, test));
    for (std::size_t j = 0; j < test.size(); ++j) out[test[j]] = pred[j];
  });
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> counterfactual_pscores(const IvDataset& ds,
                                                                   const FoldPlan& plan,
                                                                   const RegressorSpec& spec,
                                                                   int workers) {
  check_inputs(ds, plan);
  if (!is_binary01(ds.z1))
    throw unsupported_instrument_error(
        "counterfactual propensity scores need a binary instrument column");

  const Eigen::MatrixXd features = target_features(ds, CrossFitTarget::d_on_z1x);
  Eigen::VectorXd p0(ds.n()), p1(ds.n());

  if (spec.kind == LearnerKind::oracle) {
    RegressorSpec bound = bind_oracle_target(spec, CrossFitTarget::d_on_z1x);
    if (!bound.oracle_config) throw config_error("oracle learner needs a design configuration");
    auto reg = make_oracle_regressor(*bound.oracle_config, CrossFitTarget::d_on_z1x);
    Eigen::MatrixXd at0 = features, at1 = features;
    at0.col(0).setZero();
    at1.col(0).setOnes();
    return {reg->predict(at0), reg->predict(at1)};
  }

  parallel_for(plan.fold_count, workers, [&](long fold) {
    const auto train = plan.complement_indices(static_cast<int>(fold));
    const auto test = plan.fold_indices(static_cast<int>(fold));
    if (train.empty()) throw config_error("cross-fit fold has an empty training complement");
    RegressorSpec fold_spec = spec;
    fold_spec.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(CrossFitTarget::d_on_z1x),
                                             static_cast<std::uint64_t>(fold)});
    auto reg = fit(fold_spec, take_rows(features, train), take(ds.d, train),
                   take_weights(ds, train), /*workers=*/1);
    Eigen::MatrixXd test_features = take_rows(features, test);
    test_features.col(0).setZero();
    Eigen::VectorXd pred0 = reg->predict(test_features);
    test_features.col(0).setOnes();
    Eigen::VectorXd pred1 = reg->predict(test_features);
    for (std::size_t j = 0; j < test.size(); ++j) {
      p0[test[j]] = pred0[j];
      p1[test[j]] = pred1[j];
    }
  });
  return {std::move(p0), std::move(p1)};
}

Eigen::VectorXd double_cross_fit_m(const IvDataset& ds, const FoldPlan& plan,
                                   const RegressorSpec& spec, int workers,
                                   std::vector<DcFoldSplit>* debug) {
  check_inputs(ds, plan);
  const Eigen::MatrixXd pfeatures = target_features(ds, CrossFitTarget::d_on_z1x);
  Eigen::VectorXd out(ds.n());
  if (debug) debug->assign(plan.fold_count, {});

  if (spec.kind == LearnerKind::oracle) {
    // True m(X) = E[p(Z1,X)|X] = E[D|X] by the tower property.
    RegressorSpec bound = bind_oracle_target(spec, CrossFitTarget::d_on_x);
    if (!bound.oracle_config) throw config_error("oracle learner needs a design configuration");
    auto reg = make_oracle_regressor(*bound.oracle_config, CrossFitTarget::d_on_x);
    return reg->predict(ds.x);
  }

  parallel_for(plan.fold_count, workers, [&](long fold) {
    std::vector<long> complement = plan.complement_indices(static_cast<int>(fold));
    if (complement.size() < 2)
      throw config_error("double cross-fitting needs at least two out-of-fold observations");
    Rng rng(derive_seed(spec.seed, {0xDCull, static_cast<std::uint64_t>(fold)}));
    rng.shuffle(complement);
    const std::size_t half = complement.size() / 2;
    std::vector<long> a(complement.begin(), complement.begin() + half);
    std::vector<long> b(complement.begin() + half, complement.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (debug) (*debug)[fold] = {a, b};

    RegressorSpec p_spec = spec;
    p_spec.seed = derive_seed(spec.seed, {0xDC1ull, static_cast<std::uint64_t>(fold)});
    auto p_hat = fit(p_spec, take_rows(pfeatures, a), take(ds.d, a), take_weights(ds, a), 1);

    // Pseudo-targets on the other half, then regress them on X alone.
    Eigen::VectorXd pseudo = p_hat->predict(take_rows(pfeatures, b));
    RegressorSpec m_spec = spec;
    m_spec.seed = derive_seed(spec.seed, {0xDC2ull, static_cast<std::uint64_t>(fold)});
    auto m_hat = fit(m_spec, take_rows(ds.x, b), pseudo, take_weights(ds, b), 1);

    const auto test = plan.fold_indices(static_cast<int>(fold));
    Eigen::VectorXd pred = m_hat->predict(take_rows(ds.x, test));
    for (std::size_t j = 0; j < test.size(); ++j) out[test[j]] = pred[j];
  });
  return out;
}

namespace {

void clamp_propensity(Eigen::VectorXd& p) {
  for (long i = 0; i < p.size(); ++i) p[i] = std::clamp(p[i], 1e-6, 1.0 - 1e-6);
}

}  // namespace

NuisanceFit fit_nuisances(const IvDataset& ds, const FoldPlan& plan, const RegressorSpec& spec,
                          const NuisanceRequest& request, int workers) {
  check_inputs(ds, plan);
  const bool d_binary = is_binary01(ds.d);
  NuisanceFit nf;
  if (request.eta1) nf.eta1 = cross_fit(ds, plan, spec, CrossFitTarget::y_on_x, workers);
  if (request.eta2) nf.eta2 = cross_fit(ds, plan, spec, CrossFitTarget::d_on_x, workers);
  if (request.pscore) {
    nf.pscore = cross_fit(ds, plan, spec, CrossFitTarget::d_on_z1x, workers);
    if (d_binary) clamp_propensity(*nf.pscore);
  }
  if (request.eta_z) nf.eta_z = cross_fit(ds, plan, spec, CrossFitTarget::z1_on_x, workers);
  if (request.counterfactual) {
    auto [p0, p1] = counterfactual_pscores(ds, plan, spec, workers);
    if (d_binary) {
      clamp_propensity(p0);
      clamp_propensity(p1);
    }
    nf.pscore_cf0 = std::move(p0);
    nf.pscore_cf1 = std::move(p1);
  }
  if (request.m_dc) nf.m_dc = double_cross_fit_m(ds, plan, spec, workers);
  return nf;
}

}  // namespace cmliv
