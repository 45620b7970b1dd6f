#include "cmliv/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cmliv/common.hpp"
#include "cmliv/estimands.hpp"

namespace cmliv {

std::string to_string(CrossFitTarget t) {
  switch (t) {
    case CrossFitTarget::y_on_x: return "y-on-x";
    case CrossFitTarget::d_on_x: return "d-on-x";
    case CrossFitTarget::d_on_z1x: return "d-on-z1x";
    case CrossFitTarget::z1_on_x: return "z1-on-x";
  }
  return "?";
}

RegressorSpec parse_learner_spec(const std::string& text) {
  RegressorSpec spec;
  std::string head = text, params;
  if (auto pos = text.find(':'); pos != std::string::npos) {
    head = text.substr(0, pos);
    params = text.substr(pos + 1);
  }
  if (head == "rf" || head == "forest" || head == "random-forest") {
    spec.kind = LearnerKind::forest;
  } else if (head == "ridge") {
    spec.kind = LearnerKind::ridge;
  } else if (head == "knn") {
    spec.kind = LearnerKind::knn;
  } else if (head == "oracle") {
    spec.kind = LearnerKind::oracle;
  } else {
    throw config_error("unknown learner '" + head + "' (expected rf, ridge, knn, or oracle)");
  }
  spec.label = text;

  std::size_t start = 0;
  while (start < params.size()) {
    auto comma = params.find(',', start);
    std::string item = params.substr(start, comma == std::string::npos ? params.size() - start
                                                                       : comma - start);
    start = comma == std::string::npos ? params.size() : comma + 1;
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw config_error("learner parameter '" + item + "' is not key=value");
    std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    try {
      if (key == "seed") spec.seed = std::stoull(value);
      else if (key == "lambda") spec.ridge_lambda = std::stod(value);
      else if (key == "degree") spec.ridge_degree = std::stoi(value);
      else if (key == "k") spec.knn_k = std::stoi(value);
      else if (key == "trees") spec.forest_trees = std::stoi(value);
      else if (key == "min_leaf") spec.forest_min_leaf = std::stoi(value);
      else if (key == "max_depth") spec.forest_max_depth = std::stoi(value);
      else if (key == "mtry") spec.forest_mtry = std::stoi(value);
      else throw config_error("unknown learner parameter '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw config_error("bad value for learner parameter '" + key + "': " + value);
    } catch (const std::out_of_range&) {
      throw config_error("bad value for learner parameter '" + key + "': " + value);
    }
  }
  validate_spec(spec);
  return spec;
}

void validate_spec(const RegressorSpec& spec) {
  if (spec.ridge_lambda < 0.0) throw config_error("ridge lambda must be >= 0");
  if (spec.ridge_degree < 1) throw config_error("ridge expansion degree must be >= 1");
  if (spec.knn_k < 1) throw config_error("knn neighbor count must be >= 1");
  if (spec.forest_trees < 1) throw config_error("forest tree count must be >= 1");
  if (spec.forest_min_leaf < 1) throw config_error("forest min leaf size must be >= 1");
  if (spec.forest_max_depth < 0) throw config_error("forest max depth must be >= 0");
  if (spec.forest_mtry < 0) throw config_error("forest mtry must be >= 0");
}

namespace {

void check_training_input(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                          const std::optional<Eigen::VectorXd>& weights) {
  if (features.rows() < 1) throw fit_error("cannot fit on zero rows");
  if (features.cols() < 1) throw fit_error("cannot fit without feature columns");
  if (features.rows() != targets.size())
    throw fit_error("feature rows (" + std::to_string(features.rows()) +
                    ") do not match target length (" + std::to_string(targets.size()) + ")");
  if (!features.allFinite() || !targets.allFinite())
    throw fit_error("non-finite values in training data");
  if (weights) {
    if (weights->size() != targets.size()) throw fit_error("weight length mismatch");
    if (!weights->allFinite() || weights->minCoeff() < 0.0)
      throw fit_error("weights must be finite and nonnegative");
    if (weights->maxCoeff() <= 0.0) throw fit_error("weights are all zero");
  }
}

// --- ridge on expanded features ---------------------------------------

// Expansion: powers x_j^p for p = 1..degree plus pairwise interactions
// x_a * x_b (a < b) when degree >= 2.
Eigen::MatrixXd expand_features(const Eigen::MatrixXd& x, int degree) {
  const long n = x.rows(), k = x.cols();
  long cols = k * degree + (degree >= 2 ? k * (k - 1) / 2 : 0);
  Eigen::MatrixXd out(n, cols);
  long c = 0;
  for (long j = 0; j < k; ++j) {
    Eigen::VectorXd power = x.col(j);
    out.col(c++) = power;
    for (int p = 2; p <= degree; ++p) {
      power = power.cwiseProduct(x.col(j));
      out.col(c++) = power;
    }
  }
  if (degree >= 2) {
    for (long a = 0; a < k; ++a)
      for (long b = a + 1; b < k; ++b) out.col(c++) = x.col(a).cwiseProduct(x.col(b));
  }
  return out;
}

class RidgeRegressor final : public Regressor {
 public:
  RidgeRegressor(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                 const std::optional<Eigen::VectorXd>& weights, double lambda, int degree)
      : degree_(degree), k_(features.cols()) {
    Eigen::MatrixXd a = expand_features(features, degree);
    const long n = a.rows(), p = a.cols();
    Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(n);
    const double wsum = w.sum();

    center_ = (a.transpose() * w) / wsum;
    scale_.resize(p);
    Eigen::MatrixXd ac = a.rowwise() - center_.transpose();
    for (long j = 0; j < p; ++j) {
      double s = std::sqrt((w.array() * ac.col(j).array().square()).sum() / wsum);
      scale_[j] = s > 1e-12 ? s : 1.0;
      ac.col(j) /= scale_[j];
    }
    y_center_ = w.dot(targets) / wsum;
    Eigen::VectorXd yc = targets.array() - y_center_;

    Eigen::VectorXd sw = w.cwiseSqrt();
    Eigen::MatrixXd aw = sw.asDiagonal() * ac;
    Eigen::VectorXd yw = sw.asDiagonal() * yc;
    if (lambda > 0.0) {
      Eigen::MatrixXd gram = aw.transpose() * aw;
      gram.diagonal().array() += lambda;
      beta_ = gram.ldlt().solve(aw.transpose() * yw);
    } else {
      // Plain least squares; rank-revealing so redundant expansion
      // columns do not break interpolation.
      beta_ = aw.colPivHouseholderQr().solve(yw);
    }
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const override {
    if (features.cols() != k_)
      throw fit_error("prediction feature count " + std::to_string(features.cols()) +
                      " does not match training (" + std::to_string(k_) + ")");
    Eigen::MatrixXd a = expand_features(features, degree_);
    Eigen::MatrixXd ac = a.rowwise() - center_.transpose();
    for (long j = 0; j < ac.cols(); ++j) ac.col(j) /= scale_[j];
    return (ac * beta_).array() + y_center_;
  }

 private:
  int degree_;
  long k_;
  Eigen::VectorXd center_, scale_, beta_;
  double y_center_ = 0.0;
};

// --- k-nearest-neighbors ----------------------------------------------

class KnnRegressor final : public Regressor {
 public:
  KnnRegressor(Eigen::MatrixXd features, Eigen::VectorXd targets,
               std::optional<Eigen::VectorXd> weights, int k)
      : x_(std::move(features)), y_(std::move(targets)), w_(std::move(weights)), k_(k) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const override {
    if (features.cols() != x_.cols())
      throw fit_error("prediction feature count " + std::to_string(features.cols()) +
                      " does not match training (" + std::to_string(x_.cols()) + ")");
    const long n_train = x_.rows();
    const long k = std::min<long>(k_, n_train);
    Eigen::VectorXd out(features.rows());
    std::vector<std::pair<double, long>> dist(n_train);
    for (long r = 0; r < features.rows(); ++r) {
      for (long i = 0; i < n_train; ++i) {
        dist[i] = {(x_.row(i) - features.row(r)).squaredNorm(), i};
      }
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      double num = 0.0, den = 0.0;
      for (long j = 0; j < k; ++j) {
        double w = w_ ? (*w_)[dist[j].second] : 1.0;
        num += w * y_[dist[j].second];
        den += w;
      }
      out[r] = den > 0.0 ? num / den : y_.mean();
    }
    return out;
  }

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  std::optional<Eigen::VectorXd> w_;
  int k_;
};

// --- oracle ------------------------------------------------------------

class OracleRegressor final : public Regressor {
 public:
  OracleRegressor(const DgpConfig& cfg, CrossFitTarget target, long ey_draws)
      : cells_(cfg, ey_draws), target_(target) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const override {
    const bool with_z1 = target_ == CrossFitTarget::d_on_z1x;
    if (features.cols() < (with_z1 ? 2 : 1))
      throw fit_error("oracle prediction needs " + std::string(with_z1 ? "[z1 | x]" : "x") +
                      " feature columns");
    Eigen::VectorXd out(features.rows());
    for (long i = 0; i < features.rows(); ++i) {
      const int x1 = features(i, with_z1 ? 1 : 0) >= 0.5 ? 1 : 0;
      switch (target_) {
        case CrossFitTarget::y_on_x: out[i] = cells_.ey_cell(x1); break;
        case CrossFitTarget::d_on_x: out[i] = cells_.ed_cell(x1); break;
        case CrossFitTarget::z1_on_x: out[i] = cells_.ez_cell(x1); break;
        case CrossFitTarget::d_on_z1x:
          out[i] = cells_.pscore_cell(features(i, 0) >= 0.5 ? 1 : 0, x1);
          break;
      }
    }
    return out;
  }

 private:
  OracleNuisances cells_;
  CrossFitTarget target_;
};

}  // namespace

FittedRegressor make_forest_regressor(const RegressorSpec& spec, const Eigen::MatrixXd& features,
                                      const Eigen::VectorXd& targets,
                                      const std::optional<Eigen::VectorXd>& weights, int workers);

FittedRegressor make_oracle_regressor(const DgpConfig& cfg, CrossFitTarget target,
                                      long oracle_ey_draws) {
  return std::make_shared<OracleRegressor>(cfg, target, oracle_ey_draws);
}

FittedRegressor fit(const RegressorSpec& spec, const Eigen::MatrixXd& features,
                    const Eigen::VectorXd& targets, const std::optional<Eigen::VectorXd>& weights,
                    int workers) {
  validate_spec(spec);
  check_training_input(features, targets, weights);
  switch (spec.kind) {
    case LearnerKind::ridge:
      return std::make_shared<RidgeRegressor>(features, targets, weights, spec.ridge_lambda,
                                              spec.ridge_degree);
    case LearnerKind::knn:
      return std::make_shared<KnnRegressor>(features, targets, weights, spec.knn_k);
    case LearnerKind::forest:
      return make_forest_regressor(spec, features, targets, weights, workers);
    case LearnerKind::oracle: {
      if (!spec.oracle_config)
        throw config_error("oracle learner needs a design configuration");
      if (!spec.oracle_target)
        throw config_error("oracle learner needs a conditional-expectation target");
      return make_oracle_regressor(*spec.oracle_config, *spec.oracle_target);
    }
  }
  throw config_error("unknown learner kind");
}

}  // namespace cmliv
