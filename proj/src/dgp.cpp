#include "cmliv/dgp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstring>

#include "cmliv/common.hpp"
#include "cmliv/rng.hpp"

namespace cmliv {

Eigen::Matrix3d latent_covariance(const DgpConfig& cfg) {
  const double st = cfg.sigma_tau;
  Eigen::Matrix3d sigma;
  sigma << 1.0, cfg.rho_delta_eps, cfg.rho_delta_tau * st,  //
      cfg.rho_delta_eps, 1.0, cfg.rho_tau_eps * st,         //
      cfg.rho_delta_tau * st, cfg.rho_tau_eps * st, st * st;
  return sigma;
}

void validate_config(const DgpConfig& cfg) {
  if (!(cfg.sigma_tau > 0.0)) throw config_error("sigma_tau must be positive");
  if (!(cfg.sigma_x > 0.0)) throw config_error("sigma_x must be positive");
  for (double rho : {cfg.rho_delta_tau, cfg.rho_delta_eps, cfg.rho_tau_eps}) {
    if (!(rho >= -1.0 && rho <= 1.0)) throw config_error("correlations must lie in [-1, 1]");
  }
  if (!(cfg.s1 > 0.0 && cfg.s1 < 1.0 && cfg.s2 > 0.0 && cfg.s2 < 1.0))
    throw config_error("shares s1, s2 must lie in (0, 1)");
  if (!(1.0 - cfg.s1 > cfg.s2))
    throw config_error("shares must satisfy 1 - s1 > s2 (compliers must exist)");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(latent_covariance(cfg));
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw config_error("latent covariance is not positive semidefinite");
}

bool is_preset_id(const std::string& id) {
  return id == "dgp1" || id == "dgp2" || id == "dgp3" || id == "dgp4";
}

DgpConfig dgp_preset(const std::string& id) {
  DgpConfig cfg;  // defaults carry the common parameters
  if (id == "dgp1") {
    cfg.x1_mode = X1Mode::threshold;
    cfg.beta_xz = 0.5;
  } else if (id == "dgp2") {
    cfg.x1_mode = X1Mode::threshold;
    cfg.beta_xz = 0.001;
  } else if (id == "dgp3") {
    cfg.x1_mode = X1Mode::degenerate;
    cfg.beta_xz = 0.5;
  } else if (id == "dgp4") {
    cfg.x1_mode = X1Mode::degenerate;
    cfg.beta_xz = 0.001;
  } else {
    throw config_error("unknown preset '" + id + "' (expected dgp1..dgp4)");
  }
  return cfg;
}

std::uint64_t config_hash(const DgpConfig& cfg) {
  auto bits = [](double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, sizeof u);
    return u;
  };
  std::uint64_t h = mix64(0x636d6c6976ULL);
  for (double v : {cfg.sigma_tau, cfg.rho_delta_tau, cfg.rho_delta_eps, cfg.rho_tau_eps, cfg.alpha,
                   cfg.sigma_x, cfg.alpha_z, cfg.beta_xz, cfg.s1, cfg.s2}) {
    h = mix64(h ^ bits(v));
  }
  h = mix64(h ^ static_cast<std::uint64_t>(cfg.x1_mode));
  return h;
}

Eigen::Matrix3d latent_covariance_factor(const DgpConfig& cfg) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(latent_covariance(cfg));
  Eigen::Vector3d lam = es.eigenvalues();
  for (int i = 0; i < 3; ++i) {
    if (lam[i] < -1e-10) throw config_error("latent covariance is not positive semidefinite");
    if (lam[i] < 0.0) lam[i] = 0.0;
  }
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

std::pair<IvDataset, LatentDraw> draw_sample_with_latents(const DgpConfig& cfg, long n,
                                                          std::uint64_t seed) {
  validate_config(cfg);
  if (n < 1) throw config_error("sample size must be at least 1");

  const Eigen::Matrix3d factor = latent_covariance_factor(cfg);
  Rng rng(seed);

  IvDataset ds;
  ds.y.resize(n);
  ds.d.resize(n);
  ds.z1.resize(n);
  ds.x.resize(n, 2);
  LatentDraw lat;
  lat.delta.resize(n);
  lat.eps.resize(n);
  lat.tau.resize(n);
  lat.d0.resize(n);
  lat.d1.resize(n);

  const bool threshold_mode = cfg.x1_mode == X1Mode::threshold;
  for (long i = 0; i < n; ++i) {
    // Fixed draw order per row: 3 latent normals, X2, the Z1 uniform.
    Eigen::Vector3d z(rng.next_normal(), rng.next_normal(), rng.next_normal());
    Eigen::Vector3d latent = factor * z;
    const double delta = latent[0], eps = latent[1], tau = latent[2];
    const double x2 = cfg.sigma_x * rng.next_normal();
    const double u_z = rng.next_double();

    const double x1 = threshold_mode ? (delta >= 0.0 ? 1.0 : 0.0) : 1.0;
    const double u = norm_cdf(delta);
    const double d0 = u > x1 * (1.0 - cfg.s1) + (1.0 - x1) * cfg.s2 ? 1.0 : 0.0;
    const double d1 = u > x1 * cfg.s2 + (1.0 - x1) * (1.0 - cfg.s1) ? 1.0 : 0.0;
    const double z1 = u_z < norm_cdf(cfg.alpha_z + cfg.beta_xz * x1) ? 1.0 : 0.0;
    const double d = d0 * (1.0 - z1) + d1 * z1;

    lat.delta[i] = delta;
    lat.eps[i] = eps;
    lat.tau[i] = tau;
    lat.d0[i] = d0;
    lat.d1[i] = d1;
    ds.x(i, 0) = x1;
    ds.x(i, 1) = x2;
    ds.z1[i] = z1;
    ds.d[i] = d;
    ds.y[i] = d * tau + (1.0 + cfg.alpha * delta) * eps;
  }
  return {std::move(ds), std::move(lat)};
}

IvDataset draw_sample(const DgpConfig& cfg, long n, std::uint64_t seed) {
  return draw_sample_with_latents(cfg, n, seed).first;
}

}  // namespace cmliv
