#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "cmliv/common.hpp"
#include "cmliv/config.hpp"
#include "cmliv/experiment.hpp"

using namespace cmliv;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.dgps = {"dgp3"};
  cfg.sample_sizes = {200};
  cfg.reps = 24;
  cfg.folds = 4;
  cfg.learners = {parse_learner_spec("oracle")};
  cfg.estimators = {EstimatorId::cml, EstimatorId::dml};
  cfg.master_seed = 99;
  cfg.workers = 2;
  return cfg;
}

}  // namespace

TEST_CASE("decompose matches hand-computed moments") {
  // Estimates {0, 2}, target 1: bias^2 = 0, variance = 1, mse = 1.
  Decomposition d = decompose({0.0, 2.0}, 1.0);
  CHECK(d.bias_sq == doctest::Approx(0.0));
  CHECK(d.variance == doctest::Approx(1.0));
  CHECK(d.mse == doctest::Approx(1.0));

  // Constant estimator: bias^2 = (c - t)^2, variance 0.
  Decomposition c = decompose({3.0, 3.0, 3.0}, 1.0);
  CHECK(c.bias_sq == doctest::Approx(4.0));
  CHECK(c.variance == doctest::Approx(0.0));
  CHECK(c.mse == doctest::Approx(4.0));
}

TEST_CASE("decomposition identity holds on random vectors") {
  std::vector<double> estimates;
  double target = 0.7;
  unsigned state = 12345;
  for (int i = 0; i < 500; ++i) {
    state = state * 1664525u + 1013904223u;
    estimates.push_back(static_cast<double>(state) / 4.0e9);
  }
  Decomposition d = decompose(estimates, target);
  CHECK(d.mse == doctest::Approx(d.bias_sq + d.variance).epsilon(1e-9));
}

TEST_CASE("run_experiment is bit-reproducible across worker counts") {
  ExperimentConfig cfg = small_config();
  cfg.workers = 1;
  std::string one = emit_table(run_experiment(cfg), TableFormat::csv);
  cfg.workers = 8;
  std::string eight = emit_table(run_experiment(cfg), TableFormat::csv);
  CHECK(one == eight);
}

TEST_CASE("experiment cells carry both targets and respect failure counting") {
  ExperimentConfig cfg = small_config();
  McResultTable table = run_experiment(cfg);
  // two estimators x two targets
  REQUIRE(table.rows.size() == 4);
  for (const auto& row : table.rows) {
    CHECK(row.rep_count + row.failure_count == cfg.reps);
    CHECK(row.mse == doctest::Approx(row.bias_sq + row.variance).epsilon(1e-9));
  }
  // deterministic ordering: estimator alphabetical within (dgp, n)
  CHECK(table.rows[0].estimator == "cml");
  CHECK(table.rows[0].target == "late");
  CHECK(table.rows[1].target == "own");
  CHECK(table.rows[2].estimator == "dml");
}

TEST_CASE("rep estimates look independent across reps") {
  ExperimentConfig cfg = small_config();
  cfg.reps = 200;
  cfg.estimators = {EstimatorId::cml};
  RawResults raw = run_experiment_raw(cfg);
  const auto& cell = raw.begin()->second;
  REQUIRE(cell.estimates.size() == 200);
  double mean = 0;
  for (double e : cell.estimates) mean += e;
  mean /= 200.0;
  double num = 0, den = 0;
  for (std::size_t i = 0; i + 1 < cell.estimates.size(); ++i) {
    num += (cell.estimates[i] - mean) * (cell.estimates[i + 1] - mean);
  }
  for (double e : cell.estimates) den += (e - mean) * (e - mean);
  double lag1 = num / den;
  CHECK(std::fabs(lag1) < 4.0 / std::sqrt(200.0));
}

TEST_CASE("a full grid produces one row per (dgp, n, estimator, target)") {
  ExperimentConfig cfg = small_config();
  cfg.dgps = {"dgp3", "dgp4"};
  cfg.sample_sizes = {100, 200};
  cfg.reps = 3;
  cfg.estimators = {EstimatorId::cml, EstimatorId::dml, EstimatorId::ai};
  McResultTable table = run_experiment(cfg);
  CHECK(table.rows.size() == 2 * 2 * 3 * 2);
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const auto &a = table.rows[i - 1], &b = table.rows[i];
    CHECK(std::tie(a.dgp, a.n, a.estimator, a.learner, a.target) <
          std::tie(b.dgp, b.n, b.estimator, b.learner, b.target));
  }
}

TEST_CASE("coverage experiment boundary behavior") {
  ExperimentConfig cfg = small_config();
  cfg.estimators = {EstimatorId::cml};
  auto rows = coverage_experiment(cfg, 0.0);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].coverage == doctest::Approx(0.0));  // width-zero intervals
  CHECK_THROWS_AS(coverage_experiment(cfg, 1.0), config_error);
}

TEST_CASE("table emission round-trips") {
  ExperimentConfig cfg = small_config();
  McResultTable table = run_experiment(cfg);

  SUBCASE("csv is lossless") {
    std::string csv = emit_table(table, TableFormat::csv);
    McResultTable back = parse_table_csv(csv);
    REQUIRE(back.rows.size() == table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      CHECK(back.rows[i].mse == table.rows[i].mse);  // bit-exact at 17 digits
      CHECK(back.rows[i].bias_sq == table.rows[i].bias_sq);
      CHECK(back.rows[i].variance == table.rows[i].variance);
      CHECK(back.rows[i].dgp == table.rows[i].dgp);
      CHECK(back.rows[i].rep_count == table.rows[i].rep_count);
    }
  }
  SUBCASE("markdown preserves six significant digits") {
    std::string md = emit_table(table, TableFormat::markdown);
    McResultTable back = parse_table_markdown(md);
    REQUIRE(back.rows.size() == table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      CHECK(back.rows[i].mse ==
            doctest::Approx(table.rows[i].mse).epsilon(1e-5));
    }
  }
  SUBCASE("empty table emits only the header") {
    McResultTable empty;
    std::string csv = emit_table(empty, TableFormat::csv);
    CHECK(csv.find("dgp,n,estimator") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
  }
}

TEST_CASE("experiment config validation") {
  ExperimentConfig cfg = small_config();
  cfg.reps = 1;
  CHECK_THROWS_AS(validate_experiment_config(cfg), config_error);
  cfg = small_config();
  cfg.dgps = {"dgp7"};
  CHECK_THROWS_AS(validate_experiment_config(cfg), config_error);
}

TEST_CASE("flat key=value config parses with line-addressed errors") {
  std::istringstream good(
      "dgps = dgp3\n"
      "n = 200\n"
      "reps = 10\n"
      "learners = oracle\n"
      "estimators = cml\n"
      "seed = 5\n"
      "# comment line\n"
      "untrimmed = true\n");
  ExperimentConfig cfg = parse_experiment_config(good);
  CHECK(cfg.reps == 10);
  CHECK(cfg.untrimmed);
  CHECK(cfg.master_seed == 5);

  std::istringstream bad(
      "dgps = dgp3\n"
      "bogus_key = 1\n");
  try {
    parse_experiment_config(bad);
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  std::istringstream bad2("reps one\n");
  CHECK_THROWS_AS(parse_experiment_config(bad2), config_error);
}

TEST_CASE("dgp config files override preset defaults") {
  std::istringstream in(
      "beta_xz = 0.25\n"
      "x1_mode = degenerate\n");
  DgpConfig cfg = parse_dgp_config(in);
  CHECK(cfg.beta_xz == doctest::Approx(0.25));
  CHECK(cfg.x1_mode == X1Mode::degenerate);
  CHECK(cfg.s1 == doctest::Approx(0.2));  // defaults retained

  std::istringstream bad("s1 = 2.0\n");
  CHECK_THROWS_AS(parse_dgp_config(bad), config_error);
}
