#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "cmliv/dgp.hpp"

namespace cmliv {

enum class LearnerKind { ridge, knn, forest, oracle };

// Which conditional expectation a cross-fit run estimates. Also tells the
// oracle learner which cell function to evaluate.
enum class CrossFitTarget { y_on_x, d_on_x, d_on_z1x, z1_on_x };

std::string to_string(CrossFitTarget t);

struct RegressorSpec {
  LearnerKind kind = LearnerKind::forest;
  std::uint64_t seed = 0;

  // ridge on polynomial/interaction-expanded features
  double ridge_lambda = 1e-3;
  int ridge_degree = 2;

  // k-nearest-neighbors (k clamped to the training size per fold)
  int knn_k = 10;

  // bagged regression trees; mtry = 0 means ceil(k/3)
  int forest_trees = 200;
  int forest_min_leaf = 5;
  int forest_max_depth = 0;  // 0 = unlimited
  int forest_mtry = 0;

  // oracle: true conditional expectations of a known design
  std::optional<DgpConfig> oracle_config;
  std::optional<CrossFitTarget> oracle_target;

  std::string label = "rf";
};

// Parses "rf", "rf:trees=100,min_leaf=5,mtry=1,max_depth=0,seed=7",
// "ridge:lambda=0.001,degree=2", "knn:k=25", "oracle".
RegressorSpec parse_learner_spec(const std::string& text);

// Throws config_error when hyperparameters are out of range.
void validate_spec(const RegressorSpec& spec);

// Fitted state. Immutable after construction; concurrent predict calls
// are safe.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& features) const = 0;
};

using FittedRegressor = std::shared_ptr<const Regressor>;

// Fits one regressor. Deterministic given the spec: all randomness runs
// through seeded per-tree streams, so any worker count yields identical
// fits. Throws fit_error on degenerate input (zero rows, non-finite
// values) and config_error on invalid hyperparameters.
FittedRegressor fit(const RegressorSpec& spec, const Eigen::MatrixXd& features,
                    const Eigen::VectorXd& targets,
                    const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                    int workers = 1);

// The oracle regressor for one conditional expectation. Feature layout
// follows cross_fit: covariates only (X1 first) except d_on_z1x, which
// takes [Z1 | X].
FittedRegressor make_oracle_regressor(const DgpConfig& cfg, CrossFitTarget target,
                                      long oracle_ey_draws = 10'000'000);

}  // namespace cmliv
