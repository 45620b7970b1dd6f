#pragma once

#include <cstdint>
#include <optional>

#include "cmliv/dgp.hpp"

namespace cmliv {

// The three target parameters of a design: the average effect among the
// instrument-moved subpopulation (tau_late), the variance-weighted
// estimand targeted by the compliance instrument (theta0), and the
// estimand of the recentered-raw-instrument moment (theta_dml).
// theta_dml is absent when its closed-form weight denominator is exactly
// zero (e.g. beta_xz = 0 in threshold mode).
struct Estimands {
  double tau_late = 0.0;
  double theta0 = 0.0;
  std::optional<double> theta_dml;
};

// Textbook closed forms for the three estimands. These treat the effect
// latent tau as independent of the compliance strata, which collapses the
// conditional effect to rho_delta_tau * sigma_tau * E[delta | X1] and, in
// degenerate mode, to zero. When rho_delta_tau != 0 that independence
// does not hold in the sampled population and the exact estimands differ;
// mc_estimand_oracle computes them by simulation. Kept as the default
// tabulation target so reported bias decompositions line up with the
// conventional closed-form targets for these designs.
Estimands closed_form_estimands(const DgpConfig& cfg);

// True conditional expectations of the design, constant in the noise
// covariate X2. Propensity and instrument cells are analytic; the outcome
// cell means come from a one-off cached simulation keyed by the config.
class OracleNuisances {
 public:
  explicit OracleNuisances(const DgpConfig& cfg, long ey_draws = 10'000'000);

  const DgpConfig& config() const { return cfg_; }
  // E[D | Z1 = z1, X1 = x1]
  double pscore_cell(int z1, int x1) const;
  // E[Z1 | X1 = x1]
  double ez_cell(int x1) const;
  // E[D | X1 = x1] via the tower property over Z1.
  double ed_cell(int x1) const;
  // E[Y | X1 = x1], simulation-backed.
  double ey_cell(int x1) const;

 private:
  DgpConfig cfg_;
  double ey_[2];
};

OracleNuisances oracle_nuisances(const DgpConfig& cfg, long ey_draws = 10'000'000);

// Brute-force estimands: simulates the latent population, identifies
// compliers and defiers from the potential-treatment indicators, and
// assembles the three weighted ratios directly. Also computes theta0 a
// second way, as the moment ratio E[(Y - E[Y|X]) xi] / E[(D - E[D|X]) xi]
// with the oracle instrument xi = E[D|Z1,X] - E[D|X]. Standard errors
// come from splitting the draws into independent blocks.
struct McEstimands {
  Estimands value;
  double tau_late_se = 0.0;
  double theta0_se = 0.0;
  double theta_dml_se = 0.0;
  double theta0_moment = 0.0;
  double theta0_moment_se = 0.0;
};

McEstimands mc_estimand_oracle(const DgpConfig& cfg, long n_oracle, std::uint64_t seed);

}  // namespace cmliv
