#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cmliv/crossfit.hpp"
#include "cmliv/dataset.hpp"
#include "cmliv/folds.hpp"
#include "cmliv/learners.hpp"
#include "cmliv/nuisance.hpp"

namespace cmliv {

// Moment-based estimators distinguished by their instrument choice:
//   cml    — recentered fitted propensity, p_hat - E_hat[D|X]
//   cml_dc — same, recentered with the double-cross-fitted E[p|X]
//   dml    — recentered raw instrument, Z1 - E_hat[Z1|X]
//   cs     — compliance-scaled instrument, (p1_hat - p0_hat)(Z1 - mean(Z1))
//   ai     — cml's instrument applied to raw Y and D (no residualization);
//            a deliberately non-orthogonal comparator
enum class EstimatorId { cml, cml_dc, dml, cs, ai };

std::string to_string(EstimatorId id);
EstimatorId parse_estimator_id(const std::string& text);
std::vector<EstimatorId> parse_estimator_list(const std::string& comma_separated);

enum class VarianceMode { iid_sandwich, cluster_robust };

struct VarianceOptions {
  VarianceMode mode = VarianceMode::iid_sandwich;
  bool weights_aware = true;      // insert dataset weights into every sum
  double ci_z = 1.959964;         // normal critical value, 95% by default
  bool relevance_guard = true;    // weak-identification tolerance on/off
  bool literal_denominator = false;  // diagnostic: square of the mean
                                     // instrument instead of the Jacobian
};

struct EstimateReport {
  double theta = 0.0;
  double variance = 0.0;   // asymptotic variance of sqrt(n)(theta_hat - theta)
  double std_error = 0.0;  // sqrt(variance / n)
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  long n = 0;
  double denominator = 0.0;  // (1/n) sum w_i b_i kappa_i, relevance diagnostic
  EstimatorId estimator_id = EstimatorId::cml;
};

// (y - eta1, d - eta2). Throws config_error when either nuisance is missing.
std::pair<Eigen::VectorXd, Eigen::VectorXd> residualize(const IvDataset& ds,
                                                        const NuisanceFit& nf);

// Per-observation instrument values for one estimator id.
Eigen::VectorXd build_instrument(const IvDataset& ds, const NuisanceFit& nf, EstimatorId id);

// Ratio estimator theta = sum(w a kappa) / sum(w b kappa) with
// (a, b) = residualized (y, d) except for ai, which uses the raw columns.
// Variance is the sandwich with the moment Jacobian squared in the
// denominator; cluster_robust replaces the meat with cluster sums.
EstimateReport estimate(const IvDataset& ds, const NuisanceFit& nf, EstimatorId id,
                        const VarianceOptions& vopts);

// The sandwich pieces for a caller-supplied preliminary theta.
std::pair<double, double> variance_estimate(const IvDataset& ds, const NuisanceFit& nf,
                                            EstimatorId id, double theta_tilde,
                                            const VarianceOptions& vopts);

struct EstimatorFailure {
  enum class Kind { weak_identification, unsupported_instrument, configuration };
  Kind kind = Kind::configuration;
  std::string message;
  double denominator = 0.0;  // meaningful for weak identification
};

struct EstimateSet {
  std::map<EstimatorId, EstimateReport> reports;
  std::map<EstimatorId, EstimatorFailure> failures;
};

// Fits only the nuisances the requested estimators need (shared across
// them), then runs each estimator. Per-estimator failures are recorded so
// one weakly identified moment does not abort the rest; if nothing
// succeeds the first failure is rethrown.
EstimateSet estimate_all(const IvDataset& ds, const FoldPlan& plan, const RegressorSpec& spec,
                         const std::vector<EstimatorId>& requested, const VarianceOptions& vopts,
                         int workers = 1);

}  // namespace cmliv
