#include "cmliv/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <tuple>

#include "cmliv/common.hpp"
#include "cmliv/dgp.hpp"
#include "cmliv/parallel.hpp"
#include "cmliv/rng.hpp"

namespace cmliv {

bool CellKey::operator<(const CellKey& o) const {
  if (dgp != o.dgp) return dgp < o.dgp;
  if (n != o.n) return n < o.n;
  if (estimator != o.estimator) return estimator < o.estimator;
  return learner < o.learner;
}

void validate_experiment_config(const ExperimentConfig& cfg) {
  if (cfg.reps < 2) throw config_error("reps must be at least 2 (variance is undefined otherwise)");
  if (cfg.folds < 2) throw config_error("folds must be at least 2");
  if (cfg.dgps.empty()) throw config_error("no designs requested");
  if (cfg.sample_sizes.empty()) throw config_error("no sample sizes requested");
  if (cfg.learners.empty()) throw config_error("no learners requested");
  if (cfg.estimators.empty()) throw config_error("no estimators requested");
  for (const auto& id : cfg.dgps) {
    if (!is_preset_id(id)) throw config_error("unknown design preset '" + id + "'");
  }
  for (long n : cfg.sample_sizes) {
    if (n < cfg.folds) throw config_error("sample size smaller than the fold count");
  }
  for (const auto& spec : cfg.learners) validate_spec(spec);
  if (cfg.oracle_draws < 1000) throw config_error("oracle_draws must be at least 1000");
}

std::uint64_t rep_seed(std::uint64_t master_seed, const std::string& dgp, long n, int rep) {
  return derive_seed(master_seed, {hash_string(dgp), static_cast<std::uint64_t>(n),
                                   static_cast<std::uint64_t>(rep)});
}

Decomposition decompose(const std::vector<double>& estimates, double target) {
  if (estimates.empty()) return {};
  const double reps = static_cast<double>(estimates.size());
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= reps;
  Decomposition d;
  d.bias_sq = (mean - target) * (mean - target);
  for (double e : estimates) {
    d.variance += (e - mean) * (e - mean);
    d.mse += (e - target) * (e - target);
  }
  d.variance /= reps;
  d.mse /= reps;
  return d;
}

namespace {

Estimands cell_targets(const ExperimentConfig& cfg, const DgpConfig& dgp_cfg,
                       const std::string& dgp_id) {
  if (cfg.target_source == TargetSource::closed_form) return closed_form_estimands(dgp_cfg);
  auto mc = mc_estimand_oracle(dgp_cfg, cfg.oracle_draws,
                               derive_seed(cfg.master_seed, {0x7a26ull, hash_string(dgp_id)}));
  return mc.value;
}

struct RepOutcome {
  std::map<EstimatorId, EstimateReport> reports;
  std::map<EstimatorId, EstimatorFailure> failures;
};

}  // namespace

RawResults run_experiment_raw(const ExperimentConfig& cfg) {
  validate_experiment_config(cfg);
  const int workers = resolve_workers(cfg.workers);

  RawResults out;
  for (const auto& dgp_id : cfg.dgps) {
    const DgpConfig dgp_cfg = dgp_preset(dgp_id);
    const Estimands targets = cell_targets(cfg, dgp_cfg, dgp_id);
    for (long n : cfg.sample_sizes) {
      for (const auto& learner : cfg.learners) {
        RegressorSpec spec = learner;
        if (spec.kind == LearnerKind::oracle) spec.oracle_config = dgp_cfg;

        VarianceOptions vopts;
        vopts.mode = cfg.variance;
        vopts.relevance_guard = !cfg.untrimmed;

        std::vector<RepOutcome> outcomes(cfg.reps);
        parallel_for(cfg.reps, workers, [&](long rep) {
          const std::uint64_t seed = rep_seed(cfg.master_seed, dgp_id, n, static_cast<int>(rep));
          IvDataset ds = draw_sample(dgp_cfg, n, seed);
          FoldPlan plan = make_fold_plan(n, cfg.folds, derive_seed(seed, {0xF01Dull}));
          RegressorSpec rep_spec = spec;
          rep_spec.seed = derive_seed(seed, {0x5eedull});
          try {
            EstimateSet set =
                estimate_all(ds, plan, rep_spec, cfg.estimators, vopts, /*workers=*/1);
            outcomes[rep].reports = std::move(set.reports);
            outcomes[rep].failures = std::move(set.failures);
          } catch (const weak_identification_error& e) {
            for (EstimatorId id : cfg.estimators) {
              outcomes[rep].failures[id] = {EstimatorFailure::Kind::weak_identification, e.what(),
                                            e.denominator()};
            }
          } catch (const unsupported_instrument_error& e) {
            for (EstimatorId id : cfg.estimators) {
              outcomes[rep].failures[id] = {EstimatorFailure::Kind::unsupported_instrument,
                                            e.what(), 0.0};
            }
          }
        });

        for (EstimatorId id : cfg.estimators) {
          CellKey key{dgp_id, n, to_string(id), spec.label};
          CellResult cell;
          cell.targets = targets;
          for (const auto& outcome : outcomes) {
            auto it = outcome.reports.find(id);
            if (it != outcome.reports.end()) {
              cell.estimates.push_back(it->second.theta);
              cell.std_errors.push_back(it->second.std_error);
              cell.ci_lower.push_back(it->second.ci_lower);
              cell.ci_upper.push_back(it->second.ci_upper);
            } else {
              ++cell.failure_count;
            }
          }
          out.emplace(std::move(key), std::move(cell));
        }
      }
    }
  }
  return out;
}

McResultTable build_table(const RawResults& raw) {
  McResultTable table;
  for (const auto& [key, cell] : raw) {
    auto add_row = [&](const std::string& target_name, double target) {
      Decomposition d = decompose(cell.estimates, target);
      McRow row;
      row.dgp = key.dgp;
      row.n = key.n;
      row.estimator = key.estimator;
      row.learner = key.learner;
      row.target = target_name;
      row.mse = d.mse;
      row.bias_sq = d.bias_sq;
      row.variance = d.variance;
      row.rep_count = static_cast<long>(cell.estimates.size());
      row.failure_count = cell.failure_count;
      table.rows.push_back(std::move(row));
    };
    if (key.estimator == "dml") {
      if (cell.targets.theta_dml) add_row("own", *cell.targets.theta_dml);
    } else {
      add_row("own", cell.targets.theta0);
    }
    add_row("late", cell.targets.tau_late);
  }
  std::sort(table.rows.begin(), table.rows.end(), [](const McRow& a, const McRow& b) {
    return std::tie(a.dgp, a.n, a.estimator, a.learner, a.target) <
           std::tie(b.dgp, b.n, b.estimator, b.learner, b.target);
  });
  return table;
}

McResultTable run_experiment(const ExperimentConfig& cfg) {
  return build_table(run_experiment_raw(cfg));
}

std::vector<CoverageRow> coverage_experiment(const ExperimentConfig& cfg, double nominal) {
  if (!(nominal >= 0.0 && nominal < 1.0))
    throw config_error("nominal coverage level must lie in [0, 1)");
  const double z = nominal <= 0.0 ? 0.0 : norm_quantile(0.5 + nominal / 2.0);

  RawResults raw = run_experiment_raw(cfg);
  std::vector<CoverageRow> out;
  for (const auto& [key, cell] : raw) {
    double target;
    if (key.estimator == "dml") {
      if (!cell.targets.theta_dml) continue;
      target = *cell.targets.theta_dml;
    } else {
      target = cell.targets.theta0;
    }
    long covered = 0;
    for (std::size_t i = 0; i < cell.estimates.size(); ++i) {
      const double lo = cell.estimates[i] - z * cell.std_errors[i];
      const double hi = cell.estimates[i] + z * cell.std_errors[i];
      if (lo <= target && target <= hi) ++covered;
    }
    CoverageRow row;
    row.dgp = key.dgp;
    row.n = key.n;
    row.estimator = key.estimator;
    row.learner = key.learner;
    row.rep_count = static_cast<long>(cell.estimates.size());
    row.failure_count = cell.failure_count;
    row.coverage = cell.estimates.empty()
                       ? 0.0
                       : static_cast<double>(covered) / static_cast<double>(cell.estimates.size());
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

std::string fmt_g(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

const char* kHeader = "dgp,n,estimator,learner,target,mse,bias_sq,variance,rep_count,failure_count";

McRow parse_row_fields(const std::vector<std::string>& f, const std::string& where) {
  if (f.size() != 10) throw data_error(where + ": expected 10 fields, got " +
                                       std::to_string(f.size()));
  McRow row;
  row.dgp = trim(f[0]);
  row.n = std::stol(trim(f[1]));
  row.estimator = trim(f[2]);
  row.learner = trim(f[3]);
  row.target = trim(f[4]);
  row.mse = std::stod(trim(f[5]));
  row.bias_sq = std::stod(trim(f[6]));
  row.variance = std::stod(trim(f[7]));
  row.rep_count = std::stol(trim(f[8]));
  row.failure_count = std::stol(trim(f[9]));
  return row;
}

}  // namespace

std::string emit_table(const McResultTable& table, TableFormat format) {
  std::ostringstream os;
  if (format == TableFormat::csv) {
    os << kHeader << "\n";
    for (const auto& r : table.rows) {
      os << r.dgp << ',' << r.n << ',' << r.estimator << ',' << r.learner << ',' << r.target << ','
         << fmt_g(r.mse, 17) << ',' << fmt_g(r.bias_sq, 17) << ',' << fmt_g(r.variance, 17) << ','
         << r.rep_count << ',' << r.failure_count << "\n";
    }
    return os.str();
  }
  os << "| dgp | n | estimator | learner | target | mse | bias_sq | variance | rep_count | "
        "failure_count |\n";
  os << "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : table.rows) {
    os << "| " << r.dgp << " | " << r.n << " | " << r.estimator << " | " << r.learner << " | "
       << r.target << " | " << fmt_g(r.mse, 6) << " | " << fmt_g(r.bias_sq, 6) << " | "
       << fmt_g(r.variance, 6) << " | " << r.rep_count << " | " << r.failure_count << " |\n";
  }
  return os.str();
}

McResultTable parse_table_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  McResultTable table;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line_no == 1) {
      if (trim(line) != kHeader) throw data_error("line 1: unexpected table header");
      continue;
    }
    table.rows.push_back(parse_row_fields(split(line, ','), "line " + std::to_string(line_no)));
  }
  return table;
}

McResultTable parse_table_markdown(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  McResultTable table;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || line_no <= 2) continue;  // header and separator
    if (t.front() == '|') t = t.substr(1);
    if (!t.empty() && t.back() == '|') t.pop_back();
    table.rows.push_back(parse_row_fields(split(t, '|'), "line " + std::to_string(line_no)));
  }
  return table;
}

}  // namespace cmliv
