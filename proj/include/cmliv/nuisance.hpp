#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "cmliv/common.hpp"

namespace cmliv {

// Out-of-fold predictions of the first-stage conditional expectations.
// Every present vector has length n with finite entries. When the
// treatment is binary the propensity columns are clamped into
// [1e-6, 1 - 1e-6] at assembly time.
struct NuisanceFit {
  std::optional<Eigen::VectorXd> eta1;        // E[Y|X]
  std::optional<Eigen::VectorXd> eta2;        // E[D|X]
  std::optional<Eigen::VectorXd> pscore;      // E[D|Z1,X]
  std::optional<Eigen::VectorXd> eta_z;       // E[Z1|X]
  std::optional<Eigen::VectorXd> pscore_cf0;  // E[D|Z1=0,X] counterfactual
  std::optional<Eigen::VectorXd> pscore_cf1;  // E[D|Z1=1,X] counterfactual
  std::optional<Eigen::VectorXd> m_dc;        // E[p(Z1,X)|X], double cross-fitted

  static const Eigen::VectorXd& require(const std::optional<Eigen::VectorXd>& v,
                                        const std::string& name) {
    if (!v) throw config_error("nuisance fit is missing " + name);
    return *v;
  }
};

}  // namespace cmliv
