#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "cmliv/dataset.hpp"
#include "cmliv/folds.hpp"
#include "cmliv/learners.hpp"
#include "cmliv/nuisance.hpp"

namespace cmliv {

// Out-of-fold predictions: for each observation in fold f, the prediction
// comes from a regressor fitted exclusively on rows outside fold f.
// Feature sets: targets on X use the covariates only; d_on_z1x uses
// [Z1 | X]. Fold seeds derive from (spec.seed, target, fold), so the
// result is a pure function of (dataset, plan, spec).
Eigen::VectorXd cross_fit(const IvDataset& ds, const FoldPlan& plan, const RegressorSpec& spec,
                          CrossFitTarget target, int workers = 1);

// Out-of-fold counterfactual propensities (p(0, X_i), p(1, X_i)): one
// joint fit of D on [Z1 | X] per fold, evaluated with the instrument
// column forced to 0 and to 1. Requires a binary instrument.
std::pair<Eigen::VectorXd, Eigen::VectorXd> counterfactual_pscores(const IvDataset& ds,
                                                                   const FoldPlan& plan,
                                                                   const RegressorSpec& spec,
                                                                   int workers = 1);

// Structural record of one fold's nested split, exposed for tests.
struct DcFoldSplit {
  std::vector<long> half_a;  // rows the propensity fit saw
  std::vector<long> half_b;  // rows the nested regression saw
};

// Double cross-fitting of m(X) = E[p(Z1,X)|X]: per fold, the out-of-fold
// complement is shuffled and halved; the propensity is fitted on half A,
// pseudo-targets p_hat(Z1_j, X_j) are generated on half B, and the nested
// regression of those pseudo-targets on X (fitted on B) is evaluated on
// the fold rows.
Eigen::VectorXd double_cross_fit_m(const IvDataset& ds, const FoldPlan& plan,
                                   const RegressorSpec& spec, int workers = 1,
                                   std::vector<DcFoldSplit>* debug = nullptr);

struct NuisanceRequest {
  bool eta1 = false;
  bool eta2 = false;
  bool pscore = false;
  bool eta_z = false;
  bool counterfactual = false;
  bool m_dc = false;
};

// Fits everything requested through the same plan/spec and assembles a
// NuisanceFit, clamping propensity predictions when the treatment is
// binary (tree learners can emit exact 0/1 leaves and downstream
// diagnostics divide by variance terms).
NuisanceFit fit_nuisances(const IvDataset& ds, const FoldPlan& plan, const RegressorSpec& spec,
                          const NuisanceRequest& request, int workers = 1);

}  // namespace cmliv
