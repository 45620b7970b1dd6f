// cmliv: debiased instrumental-variable estimation for partially linear
// models, with simulation designs and a Monte Carlo table harness.
//
// Subcommands:
//   simulate   draw a design sample and write it as CSV
//   estimate   run estimators on a CSV dataset
//   mc-table   Monte Carlo MSE-decomposition table from a config file
//   estimands  closed-form or simulated target parameters of a design
//
// Exit status: 0 success, 2 usage/configuration, 3 data errors,
// 4 weak identification of every requested estimator.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cmliv/common.hpp"
#include "cmliv/config.hpp"
#include "cmliv/csv.hpp"
#include "cmliv/dgp.hpp"
#include "cmliv/estimands.hpp"
#include "cmliv/estimators.hpp"
#include "cmliv/experiment.hpp"
#include "cmliv/folds.hpp"
#include "cmliv/rng.hpp"

namespace {

using namespace cmliv;

DgpConfig load_design(const std::string& preset, const std::string& config_path) {
  if (!preset.empty() && !config_path.empty())
    throw config_error("pass either --preset or --config, not both");
  if (!preset.empty()) return dgp_preset(preset);
  if (!config_path.empty()) return parse_dgp_config_file(config_path);
  throw config_error("a design is required: --preset dgp1..dgp4 or --config FILE");
}

void write_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw data_error("cannot open '" + out_path + "' for writing");
  out << text;
  if (!out.flush()) throw data_error("failed writing '" + out_path + "'");
}

int cmd_simulate(const std::string& preset, const std::string& config_path, long n,
                 std::uint64_t seed, const std::string& out_path) {
  DgpConfig cfg = load_design(preset, config_path);
  IvDataset ds = draw_sample(cfg, n, seed);
  std::ostringstream text;
  write_dataset_csv(ds, text);
  write_text(out_path, text.str());
  return 0;
}

int cmd_estimate(const std::string& in_path, const std::string& estimators_text,
                 const std::string& learner_text, int folds, std::uint64_t seed,
                 const std::string& variance_text, const std::string& weights_col,
                 const std::string& cluster_col, const std::string& oracle_preset, int workers) {
  CsvReadOptions read_opts;
  if (!weights_col.empty()) read_opts.weight_column = weights_col;
  if (!cluster_col.empty()) read_opts.cluster_column = cluster_col;
  IvDataset ds = read_dataset_csv_file(in_path, read_opts);
  require_valid(ds);

  RegressorSpec spec = parse_learner_spec(learner_text);
  spec.seed = derive_seed(seed, {0x5eedull});
  if (spec.kind == LearnerKind::oracle) {
    if (oracle_preset.empty())
      throw config_error("--learner oracle needs --oracle-preset to name the design");
    spec.oracle_config = dgp_preset(oracle_preset);
  }

  VarianceOptions vopts;
  if (variance_text == "iid") vopts.mode = VarianceMode::iid_sandwich;
  else if (variance_text == "cluster") vopts.mode = VarianceMode::cluster_robust;
  else throw config_error("--variance must be iid or cluster");

  std::vector<EstimatorId> requested = parse_estimator_list(estimators_text);
  FoldPlan plan = make_fold_plan(ds.n(), folds, derive_seed(seed, {0xF01Dull}));
  EstimateSet set = estimate_all(ds, plan, spec, requested, vopts, workers);

  // Line-delimited records, one per estimator, machine- and human-readable.
  for (EstimatorId id : requested) {
    auto it = set.reports.find(id);
    if (it != set.reports.end()) {
      const EstimateReport& r = it->second;
      std::cout << "estimator=" << to_string(id) << " theta=" << format_double17(r.theta)
                << " std_error=" << format_double17(r.std_error)
                << " ci_lower=" << format_double17(r.ci_lower)
                << " ci_upper=" << format_double17(r.ci_upper)
                << " denominator=" << format_double17(r.denominator) << " n=" << r.n << "\n";
    } else {
      const EstimatorFailure& f = set.failures.at(id);
      const char* kind = f.kind == EstimatorFailure::Kind::weak_identification
                             ? "weak-identification"
                             : (f.kind == EstimatorFailure::Kind::unsupported_instrument
                                    ? "unsupported-instrument"
                                    : "configuration");
      std::cout << "estimator=" << to_string(id) << " error=" << kind;
      if (f.kind == EstimatorFailure::Kind::weak_identification)
        std::cout << " denominator=" << format_double17(f.denominator);
      std::cout << "\n";
    }
  }
  return 0;
}

int cmd_mc_table(const std::string& config_path, const std::string& out_path,
                 const std::string& format_text, int workers_override, int reps_override,
                 long seed_override) {
  ExperimentConfig cfg = parse_experiment_config_file(config_path);
  if (workers_override > 0) cfg.workers = workers_override;
  if (reps_override > 0) cfg.reps = reps_override;
  if (seed_override >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed_override);
  validate_experiment_config(cfg);
  TableFormat format;
  if (format_text == "csv") format = TableFormat::csv;
  else if (format_text == "markdown") format = TableFormat::markdown;
  else throw config_error("--format must be csv or markdown");

  McResultTable table = run_experiment(cfg);
  write_text(out_path, emit_table(table, format));

  long reps_total = 0, failures_total = 0;
  for (const auto& row : table.rows) {
    if (row.target == "own") {
      reps_total += row.rep_count;
      failures_total += row.failure_count;
    }
  }
  std::cerr << "cells=" << table.rows.size() << " successful_reps=" << reps_total
            << " failures=" << failures_total << "\n";
  return 0;
}

int cmd_estimands(const std::string& preset, const std::string& config_path,
                  const std::string& mode, long n_oracle, std::uint64_t seed) {
  DgpConfig cfg = load_design(preset, config_path);
  if (mode == "closed-form") {
    Estimands e = closed_form_estimands(cfg);
    std::cout << "tau_late=" << format_double17(e.tau_late) << "\n";
    std::cout << "theta0=" << format_double17(e.theta0) << "\n";
    if (e.theta_dml) {
      std::cout << "theta_dml=" << format_double17(*e.theta_dml) << "\n";
      if (std::fabs(*e.theta_dml) > 1e5)
        std::cerr << "warning: the closed-form dml weight denominator is near zero; "
                     "theta_dml is numerically unstable\n";
    } else {
      std::cout << "theta_dml=undefined\n";
      std::cerr << "note: the closed-form dml weight denominator is exactly zero\n";
    }
    return 0;
  }
  if (mode != "oracle") throw config_error("--mode must be closed-form or oracle");
  McEstimands m = mc_estimand_oracle(cfg, n_oracle, seed);
  std::cout << "tau_late=" << format_double17(m.value.tau_late)
            << " se=" << format_double17(m.tau_late_se) << "\n";
  std::cout << "theta0=" << format_double17(m.value.theta0)
            << " se=" << format_double17(m.theta0_se) << "\n";
  std::cout << "theta_dml=" << format_double17(*m.value.theta_dml)
            << " se=" << format_double17(m.theta_dml_se) << "\n";
  std::cout << "theta0_moment_ratio=" << format_double17(m.theta0_moment)
            << " se=" << format_double17(m.theta0_moment_se) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Debiased IV estimation with first-stage machine learning"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "draw a design sample and write CSV");
  std::string sim_preset, sim_config, sim_out = "-";
  long sim_n = 1000;
  std::uint64_t sim_seed = 1;
  sim->add_option("--preset", sim_preset, "design preset dgp1..dgp4");
  sim->add_option("--config", sim_config, "design config file (key = value lines)");
  sim->add_option("--n", sim_n, "sample size")->required();
  sim->add_option("--seed", sim_seed, "rng seed");
  sim->add_option("--out", sim_out, "output path, '-' for stdout");

  // estimate
  auto* est = app.add_subcommand("estimate", "run estimators on a CSV dataset");
  std::string est_in, est_estimators = "cml", est_learner = "rf", est_variance = "iid";
  std::string est_weights_col, est_cluster_col, est_oracle_preset;
  int est_folds = 4, est_workers = 0;
  std::uint64_t est_seed = 1;
  est->add_option("--in", est_in, "input CSV path")->required();
  est->add_option("--estimators", est_estimators, "comma list of cml,cml-dc,dml,cs,ai");
  est->add_option("--learner", est_learner, "rf | ridge | knn | oracle, with :key=value params");
  est->add_option("--folds", est_folds, "cross-fitting folds");
  est->add_option("--seed", est_seed, "rng seed (folds and learners)");
  est->add_option("--variance", est_variance, "iid | cluster");
  est->add_option("--weights-col", est_weights_col, "weight column name (default 'weight')");
  est->add_option("--cluster-col", est_cluster_col, "cluster column name (default 'cluster')");
  est->add_option("--oracle-preset", est_oracle_preset, "design preset for --learner oracle");
  est->add_option("--workers", est_workers, "worker threads (0 = all cores)");

  // mc-table
  auto* mc = app.add_subcommand("mc-table", "Monte Carlo MSE decomposition table");
  std::string mc_config, mc_out = "-", mc_format = "csv";
  int mc_workers = 0, mc_reps = 0;
  long mc_seed = -1;
  mc->add_option("--config", mc_config, "experiment config file")->required();
  mc->add_option("--out", mc_out, "output path, '-' for stdout");
  mc->add_option("--format", mc_format, "csv | markdown");
  mc->add_option("--workers", mc_workers, "override config worker count");
  mc->add_option("--reps", mc_reps, "override config repetition count");
  mc->add_option("--seed", mc_seed, "override config master seed");

  // estimands
  auto* ests = app.add_subcommand("estimands", "target parameters of a design");
  std::string ests_preset, ests_config, ests_mode = "closed-form";
  long ests_n = 1'000'000;
  std::uint64_t ests_seed = 1;
  ests->add_option("--preset", ests_preset, "design preset dgp1..dgp4");
  ests->add_option("--config", ests_config, "design config file");
  ests->add_option("--mode", ests_mode, "closed-form | oracle");
  ests->add_option("--n-oracle", ests_n, "simulation draws in oracle mode");
  ests->add_option("--seed", ests_seed, "rng seed for oracle mode");

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return cmd_simulate(sim_preset, sim_config, sim_n, sim_seed, sim_out);
    if (est->parsed())
      return cmd_estimate(est_in, est_estimators, est_learner, est_folds, est_seed, est_variance,
                          est_weights_col, est_cluster_col, est_oracle_preset, est_workers);
    if (mc->parsed()) return cmd_mc_table(mc_config, mc_out, mc_format, mc_workers, mc_reps, mc_seed);
    if (ests->parsed()) return cmd_estimands(ests_preset, ests_config, ests_mode, ests_n, ests_seed);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const weak_identification_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
