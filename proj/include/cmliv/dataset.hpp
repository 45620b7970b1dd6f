#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace cmliv {

// Observed sample for one estimation run. Columns are immutable after
// construction; instances are safe to share read-only across workers.
struct IvDataset {
  Eigen::VectorXd y;   // outcome
  Eigen::VectorXd d;   // treatment, typically {0,1}
  Eigen::VectorXd z1;  // excluded instrument, typically {0,1}
  Eigen::MatrixXd x;   // covariates, n rows x k columns, k >= 1
  std::optional<Eigen::VectorXd> weight;     // nonnegative, not all zero
  std::optional<std::vector<long>> cluster;  // integer cluster labels

  long n() const { return y.size(); }
  long n_covariates() const { return x.cols(); }
};

struct ValidationReport {
  std::vector<std::string> problems;
  bool treatment_binary = false;
  bool instrument_binary = false;
  bool ok() const { return problems.empty(); }
};

// A column is binary iff every entry is exactly 0.0 or 1.0.
bool is_binary01(const Eigen::VectorXd& v);

// Reports every invariant violation; never throws. The binary flags
// drive estimator eligibility downstream.
ValidationReport validate_dataset(const IvDataset& ds);

// Throws data_error listing all problems when the dataset is invalid.
void require_valid(const IvDataset& ds);

}  // namespace cmliv
