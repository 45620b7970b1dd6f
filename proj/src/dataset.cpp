#include "cmliv/dataset.hpp"

#include <cmath>
#include <sstream>

#include "cmliv/common.hpp"

namespace cmliv {

bool is_binary01(const Eigen::VectorXd& v) {
  for (long i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0 && v[i] != 1.0) return false;
  }
  return true;
}

namespace {

void check_finite(const Eigen::VectorXd& v, const std::string& name,
                  std::vector<std::string>& problems) {
  for (long i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      problems.push_back("non-finite " + name + " at row " + std::to_string(i));
      return;  // one report per column is enough
    }
  }
}

}  // namespace

ValidationReport validate_dataset(const IvDataset& ds) {
  ValidationReport rep;
  const long n = ds.y.size();
  if (n < 1) rep.problems.push_back("dataset is empty");
  if (ds.d.size() != n)
    rep.problems.push_back("column length mismatch: d has " + std::to_string(ds.d.size()) +
                           " rows, y has " + std::to_string(n));
  if (ds.z1.size() != n)
    rep.problems.push_back("column length mismatch: z1 has " + std::to_string(ds.z1.size()) +
                           " rows, y has " + std::to_string(n));
  if (ds.x.rows() != n)
    rep.problems.push_back("column length mismatch: x has " + std::to_string(ds.x.rows()) +
                           " rows, y has " + std::to_string(n));
  if (ds.x.cols() < 1) rep.problems.push_back("covariate matrix needs at least one column");

  check_finite(ds.y, "outcome", rep.problems);
  check_finite(ds.d, "treatment", rep.problems);
  check_finite(ds.z1, "instrument", rep.problems);
  for (long j = 0; j < ds.x.cols(); ++j) {
    check_finite(ds.x.col(j), "covariate x_" + std::to_string(j + 1), rep.problems);
  }

  if (ds.weight) {
    if (ds.weight->size() != n)
      rep.problems.push_back("column length mismatch: weight has " +
                             std::to_string(ds.weight->size()) + " rows, y has " +
                             std::to_string(n));
    check_finite(*ds.weight, "weight", rep.problems);
    bool any_positive = false;
    for (long i = 0; i < ds.weight->size(); ++i) {
      double w = (*ds.weight)[i];
      if (w < 0.0) {
        rep.problems.push_back("negative weight at row " + std::to_string(i));
        break;
      }
      if (w > 0.0) any_positive = true;
    }
    if (!any_positive && ds.weight->size() > 0)
      rep.problems.push_back("all weights are zero");
  }
  if (ds.cluster && static_cast<long>(ds.cluster->size()) != n)
    rep.problems.push_back("column length mismatch: cluster has " +
                           std::to_string(ds.cluster->size()) + " rows, y has " +
                           std::to_string(n));

  if (rep.ok()) {
    rep.treatment_binary = is_binary01(ds.d);
    rep.instrument_binary = is_binary01(ds.z1);
  }
  return rep;
}

void require_valid(const IvDataset& ds) {
  ValidationReport rep = validate_dataset(ds);
  if (rep.ok()) return;
  std::ostringstream msg;
  msg << "invalid dataset:";
  for (const auto& p : rep.problems) msg << " [" << p << "]";
  throw data_error(msg.str());
}

}  // namespace cmliv
