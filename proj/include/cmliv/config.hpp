#pragma once

#include <iosfwd>
#include <string>

#include "cmliv/dgp.hpp"
#include "cmliv/experiment.hpp"

namespace cmliv {

// Flat key=value experiment configuration: one assignment per line,
// comma-separated lists, '#' comments. Errors carry line numbers.
//
//   dgps = dgp1,dgp3
//   n = 500,2000
//   reps = 200
//   folds = 4
//   learners = rf,oracle
//   estimators = cml,dml,ai
//   seed = 42
//   variance = iid            # or cluster
//   untrimmed = false
//   targets = closed-form     # or oracle
//   oracle_draws = 1000000
//   workers = 0               # 0 = all cores
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig parse_experiment_config_file(const std::string& path);

// Same format for a single design: sigma_tau, rho_delta_tau,
// rho_delta_eps, rho_tau_eps, alpha, sigma_x, alpha_z, beta_xz, s1, s2,
// x1_mode = threshold|degenerate. Unset keys keep the common defaults.
DgpConfig parse_dgp_config(std::istream& in);
DgpConfig parse_dgp_config_file(const std::string& path);

}  // namespace cmliv
