#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>

#include "cmliv/dataset.hpp"

namespace cmliv {

// How the discrete covariate X1 is generated from the selection latent:
// threshold sets X1 = 1(delta >= 0); degenerate sets X1 = 1 for everyone,
// in which case compliance is monotone in the whole population.
enum class X1Mode { threshold, degenerate };

// Full parameterization of the simulation designs. The latent triple
// (delta, eps, tau) is joint normal: delta drives selection, eps is the
// untreated outcome and tau the treatment effect.
struct DgpConfig {
  double sigma_tau = 1.0;      // sd of tau
  double rho_delta_tau = 0.5;  // corr(delta, tau)
  double rho_delta_eps = 0.5;  // corr(delta, eps)
  double rho_tau_eps = 1.0;    // corr(tau, eps)
  double alpha = 0.0;          // outcome-noise heterogeneity in delta
  double sigma_x = 2.0;        // sd of the pure-noise covariate X2
  double alpha_z = 0.0;        // probit intercept for P(Z1=1|X1)
  double beta_xz = 0.5;        // probit slope on X1
  double s1 = 0.2;             // always-taker share
  double s2 = 0.4;             // never-taker share
  X1Mode x1_mode = X1Mode::threshold;
};

// Covariance of (delta, eps, tau). Rank-deficient when |rho_tau_eps| = 1
// with matching variances, which the presets deliberately hit.
Eigen::Matrix3d latent_covariance(const DgpConfig& cfg);

// PSD-tolerant square root of the latent covariance: symmetric
// eigendecomposition with negative eigenvalues above -1e-10 clamped to 0.
Eigen::Matrix3d latent_covariance_factor(const DgpConfig& cfg);

// Throws config_error on invalid shares, correlations outside [-1,1], or a
// latent covariance with an eigenvalue below -1e-10.
void validate_config(const DgpConfig& cfg);

bool is_preset_id(const std::string& id);
// Presets dgp1..dgp4: threshold/degenerate crossed with beta_xz in {0.5, 0.001}.
DgpConfig dgp_preset(const std::string& id);

// Stable hash of all parameters; keys the oracle caches.
std::uint64_t config_hash(const DgpConfig& cfg);

// Latent state kept out of IvDataset so estimator code can never touch it.
struct LatentDraw {
  Eigen::VectorXd delta, eps, tau;
  Eigen::VectorXd d0, d1;  // potential treatments at Z1 = 0 / 1
};

// Draws n iid observations. Deterministic given seed. The covariance is
// factored by a symmetric eigendecomposition with negative eigenvalues
// above -1e-10 clamped to zero, so the rank-deficient presets sample
// cleanly where a plain Cholesky would fail.
IvDataset draw_sample(const DgpConfig& cfg, long n, std::uint64_t seed);

// Testing accessor: same draw plus the hidden latents.
std::pair<IvDataset, LatentDraw> draw_sample_with_latents(const DgpConfig& cfg, long n,
                                                          std::uint64_t seed);

}  // namespace cmliv
