#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cmliv/estimands.hpp"
#include "cmliv/estimators.hpp"

namespace cmliv {

// Which estimand set supplies the bias/MSE targets: the closed forms or
// the simulation oracle.
enum class TargetSource { closed_form, mc_oracle };

struct ExperimentConfig {
  std::vector<std::string> dgps = {"dgp3"};
  std::vector<long> sample_sizes = {500};
  int reps = 1000;
  int folds = 4;
  std::vector<RegressorSpec> learners;
  std::vector<EstimatorId> estimators = {EstimatorId::cml};
  std::uint64_t master_seed = 1;
  VarianceMode variance = VarianceMode::iid_sandwich;
  bool untrimmed = false;  // disable the weak-identification guard so
                           // near-zero denominators flow into the moments
  TargetSource target_source = TargetSource::closed_form;
  long oracle_draws = 1'000'000;  // for mc_oracle targets
  int workers = 0;                // 0 = hardware concurrency
};

void validate_experiment_config(const ExperimentConfig& cfg);

// Deterministic per-rep seed: every (dgp, n, rep) triple gets the same
// sample no matter which learners/estimators run or how work is scheduled.
std::uint64_t rep_seed(std::uint64_t master_seed, const std::string& dgp, long n, int rep);

// Population-style moments so that mse = bias_sq + variance exactly.
struct Decomposition {
  double mse = 0.0;
  double bias_sq = 0.0;
  double variance = 0.0;
};
Decomposition decompose(const std::vector<double>& estimates, double target);

struct McRow {
  std::string dgp;
  long n = 0;
  std::string estimator;
  std::string learner;
  std::string target;  // "own" or "late"
  double mse = 0.0, bias_sq = 0.0, variance = 0.0;
  long rep_count = 0;
  long failure_count = 0;
};

struct McResultTable {
  std::vector<McRow> rows;  // sorted by (dgp, n, estimator, learner, target)
};

// Raw per-cell results for callers that need the estimate vectors
// themselves (acceptance checks, coverage).
struct CellKey {
  std::string dgp;
  long n;
  std::string estimator;
  std::string learner;
  bool operator<(const CellKey& o) const;
};

struct CellResult {
  std::vector<double> estimates;       // successful reps, in rep order
  std::vector<double> std_errors;      // matching entries
  std::vector<double> ci_lower, ci_upper;
  long failure_count = 0;
  Estimands targets;                   // estimands of the cell's design
};

using RawResults = std::map<CellKey, CellResult>;

RawResults run_experiment_raw(const ExperimentConfig& cfg);

// The MSE decomposition against both targets ("own" per estimator, "late").
McResultTable run_experiment(const ExperimentConfig& cfg);
McResultTable build_table(const RawResults& raw);

struct CoverageRow {
  std::string dgp;
  long n = 0;
  std::string estimator;
  std::string learner;
  double coverage = 0.0;  // share of reps whose CI contains the own target
  long rep_count = 0;
  long failure_count = 0;
};

// Re-runs the cells with the CI level implied by `nominal` and reports
// empirical coverage of the own-estimand target.
std::vector<CoverageRow> coverage_experiment(const ExperimentConfig& cfg, double nominal);

enum class TableFormat { csv, markdown };

std::string emit_table(const McResultTable& table, TableFormat format);
McResultTable parse_table_csv(const std::string& text);
McResultTable parse_table_markdown(const std::string& text);

}  // namespace cmliv
