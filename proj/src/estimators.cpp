#include "cmliv/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "cmliv/common.hpp"

namespace cmliv {

std::string to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::cml: return "cml";
    case EstimatorId::cml_dc: return "cml-dc";
    case EstimatorId::dml: return "dml";
    case EstimatorId::cs: return "cs";
    case EstimatorId::ai: return "ai";
  }
  return "?";
}

EstimatorId parse_estimator_id(const std::string& text) {
  if (text == "cml") return EstimatorId::cml;
  if (text == "cml-dc" || text == "cml_dc" || text == "cmldc") return EstimatorId::cml_dc;
  if (text == "dml") return EstimatorId::dml;
  if (text == "cs") return EstimatorId::cs;
  if (text == "ai") return EstimatorId::ai;
  throw config_error("unknown estimator '" + text + "' (expected cml, cml-dc, dml, cs, ai)");
}

std::vector<EstimatorId> parse_estimator_list(const std::string& comma_separated) {
  std::vector<EstimatorId> out;
  std::size_t start = 0;
  while (start <= comma_separated.size()) {
    auto comma = comma_separated.find(',', start);
    std::string item = comma_separated.substr(
        start, comma == std::string::npos ? comma_separated.size() - start : comma - start);
    if (!item.empty()) out.push_back(parse_estimator_id(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw config_error("estimator list is empty");
  return out;
}

namespace {

Eigen::VectorXd effective_weights(const IvDataset& ds) {
  const long n = ds.n();
  if (!ds.weight) return Eigen::VectorXd::Ones(n);
  // Normalized to mean one so the unweighted case is untouched and the
  // variance formulas keep their scale.
  Eigen::VectorXd w = *ds.weight;
  double mean = w.mean();
  if (mean <= 0.0) throw data_error("weights must not all be zero");
  return w / mean;
}

double weighted_mean(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  return w.dot(v) / static_cast<double>(v.size());
}

double population_sd(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().mean());
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> residualize(const IvDataset& ds,
                                                        const NuisanceFit& nf) {
  const auto& eta1 = NuisanceFit::require(nf.eta1, "eta1 (E[Y|X])");
  const auto& eta2 = NuisanceFit::require(nf.eta2, "eta2 (E[D|X])");
  if (eta1.size() != ds.n() || eta2.size() != ds.n())
    throw config_error("nuisance prediction length does not match the dataset");
  return {ds.y - eta1, ds.d - eta2};
}

Eigen::VectorXd build_instrument(const IvDataset& ds, const NuisanceFit& nf, EstimatorId id) {
  const long n = ds.n();
  Eigen::VectorXd kappa;
  switch (id) {
    case EstimatorId::cml:
    case EstimatorId::ai: {
      kappa = NuisanceFit::require(nf.pscore, "pscore (E[D|Z1,X])") -
              NuisanceFit::require(nf.eta2, "eta2 (E[D|X])");
      break;
    }
    case EstimatorId::cml_dc: {
      kappa = NuisanceFit::require(nf.pscore, "pscore (E[D|Z1,X])") -
              NuisanceFit::require(nf.m_dc, "m_dc (double cross-fitted E[p|X])");
      break;
    }
    case EstimatorId::dml: {
      kappa = ds.z1 - NuisanceFit::require(nf.eta_z, "eta_z (E[Z1|X])");
      break;
    }
    case EstimatorId::cs: {
      if (!is_binary01(ds.z1))
        throw unsupported_instrument_error(
            "cs instrument needs a binary instrument column");
      const auto& p0 = NuisanceFit::require(nf.pscore_cf0, "pscore_cf0 (E[D|Z1=0,X])");
      const auto& p1 = NuisanceFit::require(nf.pscore_cf1, "pscore_cf1 (E[D|Z1=1,X])");
      const Eigen::VectorXd w = effective_weights(ds);
      const double zbar = weighted_mean(ds.z1, w);
      kappa = ((p1 - p0).array() * (ds.z1.array() - zbar)).matrix();
      break;
    }
  }
  if (kappa.size() != n) throw config_error("instrument length does not match the dataset");
  if (!kappa.allFinite()) throw config_error("instrument contains non-finite values");
  return kappa;
}

namespace {

struct MomentPieces {
  Eigen::VectorXd a, b, kappa, w;
  double denominator = 0.0;  // (1/n) sum w b kappa
};

MomentPieces moment_pieces(const IvDataset& ds, const NuisanceFit& nf, EstimatorId id) {
  MomentPieces mp;
  mp.w = effective_weights(ds);
  mp.kappa = build_instrument(ds, nf, id);
  if (id == EstimatorId::ai) {
    mp.a = ds.y;
    mp.b = ds.d;
  } else {
    auto [y_tilde, d_tilde] = residualize(ds, nf);
    mp.a = std::move(y_tilde);
    mp.b = std::move(d_tilde);
  }
  mp.denominator = mp.w.cwiseProduct(mp.b).dot(mp.kappa) / static_cast<double>(ds.n());
  return mp;
}

void guard_relevance(const IvDataset& ds, const MomentPieces& mp, EstimatorId id,
                     const VarianceOptions& vopts) {
  // Scale-free guard against a vanishing moment denominator.
  const double tol = vopts.relevance_guard
                         ? 1e-10 * population_sd(ds.d) * population_sd(mp.kappa)
                         : 0.0;
  if (std::fabs(mp.denominator) <= tol || mp.denominator == 0.0) {
    throw weak_identification_error("estimator " + to_string(id) +
                                        " is weakly identified: moment denominator " +
                                        std::to_string(mp.denominator),
                                    mp.denominator);
  }
}

std::pair<double, double> sandwich(const IvDataset& ds, const MomentPieces& mp, double theta_tilde,
                                   const VarianceOptions& vopts) {
  const long n = ds.n();
  const Eigen::VectorXd w = vopts.weights_aware ? mp.w : Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd resid = mp.a - theta_tilde * mp.b;

  double meat = 0.0;
  if (vopts.mode == VarianceMode::cluster_robust) {
    if (!ds.cluster)
      throw config_error("cluster-robust variance needs cluster labels in the dataset");
    // Ordered map keeps the accumulation order, and with it the result,
    // independent of hashing details.
    std::map<long, double> cluster_sums;
    for (long i = 0; i < n; ++i) {
      cluster_sums[(*ds.cluster)[i]] += w[i] * resid[i] * mp.kappa[i];
    }
    for (const auto& [label, sum] : cluster_sums) meat += sum * sum;
    meat /= static_cast<double>(n);
  } else {
    meat = (w.array() * resid.array().square() * mp.kappa.array().square()).sum() /
           static_cast<double>(n);
  }

  double jacobian;
  if (vopts.literal_denominator) {
    // Square of the mean instrument; near zero by construction for
    // recentered instruments, exposed only for diagnostics.
    jacobian = w.dot(mp.kappa) / static_cast<double>(n);
  } else {
    jacobian = vopts.weights_aware ? mp.denominator
                                   : mp.b.dot(mp.kappa) / static_cast<double>(n);
  }
  const double variance = meat / (jacobian * jacobian);
  return {variance, std::sqrt(variance / static_cast<double>(n))};
}

}  // namespace

std::pair<double, double> variance_estimate(const IvDataset& ds, const NuisanceFit& nf,
                                            EstimatorId id, double theta_tilde,
                                            const VarianceOptions& vopts) {
  MomentPieces mp = moment_pieces(ds, nf, id);
  guard_relevance(ds, mp, id, vopts);
  return sandwich(ds, mp, theta_tilde, vopts);
}

EstimateReport estimate(const IvDataset& ds, const NuisanceFit& nf, EstimatorId id,
                        const VarianceOptions& vopts) {
  require_valid(ds);
  MomentPieces mp = moment_pieces(ds, nf, id);
  guard_relevance(ds, mp, id, vopts);

  EstimateReport rep;
  rep.estimator_id = id;
  rep.n = ds.n();
  rep.denominator = mp.denominator;
  const double numerator = mp.w.cwiseProduct(mp.a).dot(mp.kappa) / static_cast<double>(ds.n());
  rep.theta = numerator / mp.denominator;

  // The point estimate serves as the preliminary theta in the sandwich.
  auto [variance, std_error] = sandwich(ds, mp, rep.theta, vopts);
  rep.variance = variance;
  rep.std_error = std_error;
  rep.ci_lower = rep.theta - vopts.ci_z * std_error;
  rep.ci_upper = rep.theta + vopts.ci_z * std_error;
  return rep;
}

EstimateSet estimate_all(const IvDataset& ds, const FoldPlan& plan, const RegressorSpec& spec,
                         const std::vector<EstimatorId>& requested, const VarianceOptions& vopts,
                         int workers) {
  require_valid(ds);
  if (requested.empty()) throw config_error("no estimators requested");

  const bool z1_binary = is_binary01(ds.z1);
  NuisanceRequest need;
  std::vector<EstimatorId> feasible;
  EstimateSet out;
  for (EstimatorId id : requested) {
    if (id == EstimatorId::cs && !z1_binary) {
      out.failures[id] = {EstimatorFailure::Kind::unsupported_instrument,
                          "cs instrument needs a binary instrument column", 0.0};
      continue;
    }
    feasible.push_back(id);
    switch (id) {
      case EstimatorId::cml:
        need.eta1 = need.eta2 = need.pscore = true;
        break;
      case EstimatorId::ai:
        need.eta2 = need.pscore = true;
        break;
      case EstimatorId::cml_dc:
        need.eta1 = need.eta2 = need.pscore = need.m_dc = true;
        break;
      case EstimatorId::dml:
        need.eta1 = need.eta2 = need.eta_z = true;
        break;
      case EstimatorId::cs:
        need.eta1 = need.eta2 = need.counterfactual = true;
        break;
    }
  }

  if (!feasible.empty()) {
    NuisanceFit nf = fit_nuisances(ds, plan, spec, need, workers);
    for (EstimatorId id : feasible) {
      try {
        out.reports[id] = estimate(ds, nf, id, vopts);
      } catch (const weak_identification_error& e) {
        out.failures[id] = {EstimatorFailure::Kind::weak_identification, e.what(),
                            e.denominator()};
      } catch (const unsupported_instrument_error& e) {
        out.failures[id] = {EstimatorFailure::Kind::unsupported_instrument, e.what(), 0.0};
      }
    }
  }

  if (out.reports.empty()) {
    // Nothing succeeded; surface the first failure as the error.
    const auto& first = out.failures.at(requested.front());
    switch (first.kind) {
      case EstimatorFailure::Kind::weak_identification:
        throw weak_identification_error(first.message, first.denominator);
      case EstimatorFailure::Kind::unsupported_instrument:
        throw unsupported_instrument_error(first.message);
      case EstimatorFailure::Kind::configuration:
        throw config_error(first.message);
    }
  }
  return out;
}

}  // namespace cmliv
