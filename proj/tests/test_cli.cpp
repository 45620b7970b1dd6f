#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct RunResult {
  int status = -1;
  std::string out;
};

// Runs the CLI binary through the shell, capturing stdout.
RunResult run_cli(const std::string& args) {
  RunResult result;
  std::string cmd = std::string(CMLIV_CLI_PATH) + " " + args + " 2>/tmp/cmliv_cli_stderr.txt";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  while (std::size_t got = std::fread(buf.data(), 1, buf.size(), pipe)) result.out.append(buf.data(), got);
  int rc = pclose(pipe);
  result.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return result;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double record_value(const std::string& line, const std::string& key) {
  auto pos = line.find(key + "=");
  REQUIRE(pos != std::string::npos);
  return std::stod(line.substr(pos + key.size() + 1));
}

}  // namespace

TEST_CASE("simulate writes the schema and is byte-deterministic") {
  auto a = run_cli("simulate --preset dgp3 --n 100 --seed 7 --out /tmp/cli_a.csv");
  CHECK(a.status == 0);
  auto b = run_cli("simulate --preset dgp3 --n 100 --seed 7 --out /tmp/cli_b.csv");
  CHECK(b.status == 0);
  std::string fa = slurp("/tmp/cli_a.csv"), fb = slurp("/tmp/cli_b.csv");
  CHECK(fa == fb);
  CHECK(fa.rfind("y,d,z1,x_1,x_2\n", 0) == 0);
  CHECK(std::count(fa.begin(), fa.end(), '\n') == 101);  // header + 100 rows
}

TEST_CASE("simulate rejects unknown presets with usage status") {
  auto r = run_cli("simulate --preset dgp9 --n 10");
  CHECK(r.status == 2);
}

TEST_CASE("estimate on a simulated design recovers the plim") {
  REQUIRE(run_cli("simulate --preset dgp3 --n 5000 --seed 41 --out /tmp/cli_est.csv").status == 0);
  auto r = run_cli(
      "estimate --in /tmp/cli_est.csv --estimators cml --learner oracle --oracle-preset dgp3");
  REQUIRE(r.status == 0);
  double theta = record_value(r.out, "theta");
  double se = record_value(r.out, "std_error");
  CHECK(std::fabs(theta) < 4 * se);  // wide interval at this n
  CHECK(record_value(r.out, "denominator") > 0.0);
}

TEST_CASE("estimate keeps going when one estimator is unsupported") {
  // Corrupt z1 to a non-binary value: cs must fail, cml must not.
  REQUIRE(run_cli("simulate --preset dgp3 --n 200 --seed 42 --out /tmp/cli_cs.csv").status == 0);
  std::string text = slurp("/tmp/cli_cs.csv");
  auto pos = text.find('\n') + 1;          // first data row
  auto field = text.find(',', pos) + 1;    // skip y
  field = text.find(',', field) + 1;       // skip d
  text.replace(field, text.find(',', field) - field, "0.5");
  std::ofstream("/tmp/cli_cs.csv") << text;

  auto r = run_cli("estimate --in /tmp/cli_cs.csv --estimators cml,cs --learner rf:trees=10");
  CHECK(r.status == 0);
  CHECK(r.out.find("estimator=cml theta=") != std::string::npos);
  CHECK(r.out.find("estimator=cs error=unsupported-instrument") != std::string::npos);
}

TEST_CASE("estimate reports schema errors with data status") {
  std::ofstream("/tmp/cli_bad.csv") << "y,z1,x_1\n1,0,2\n";
  auto r = run_cli("estimate --in /tmp/cli_bad.csv");
  CHECK(r.status == 3);
  std::string err = slurp("/tmp/cmliv_cli_stderr.txt");
  CHECK(err.find("missing column d") != std::string::npos);
}

TEST_CASE("weak identification of every estimator exits 4") {
  // Constant instrument: eta_z fits it exactly, so the dml instrument
  // vanishes.
  std::ostringstream csv;
  csv << "y,d,z1,x_1\n";
  for (int i = 0; i < 40; ++i) csv << (i % 3) << ',' << (i % 2) << ",1," << (i % 5) << "\n";
  std::ofstream("/tmp/cli_weak.csv") << csv.str();
  auto r = run_cli("estimate --in /tmp/cli_weak.csv --estimators dml --learner knn:k=40");
  CHECK(r.status == 4);
}

TEST_CASE("mc-table produces a table and honors reps>=2") {
  std::ofstream("/tmp/cli_exp.cfg") << "dgps = dgp3\nn = 200\nreps = 6\nlearners = oracle\n"
                                       "estimators = cml\nseed = 3\nworkers = 2\n";
  auto r = run_cli("mc-table --config /tmp/cli_exp.cfg --out /tmp/cli_table.csv");
  CHECK(r.status == 0);
  std::string table = slurp("/tmp/cli_table.csv");
  CHECK(table.rfind("dgp,n,estimator,learner,target,", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 3);  // header + own + late
  std::string err = slurp("/tmp/cmliv_cli_stderr.txt");
  CHECK(err.find("failures=") != std::string::npos);

  std::ofstream("/tmp/cli_exp1.cfg") << "dgps = dgp3\nn = 200\nreps = 1\nlearners = oracle\n"
                                        "estimators = cml\n";
  CHECK(run_cli("mc-table --config /tmp/cli_exp1.cfg").status == 2);
}

TEST_CASE("mc-table reports config parse errors with line numbers") {
  std::ofstream("/tmp/cli_expbad.cfg") << "dgps = dgp3\nreps = soon\n";
  auto r = run_cli("mc-table --config /tmp/cli_expbad.cfg");
  CHECK(r.status == 2);
  CHECK(slurp("/tmp/cmliv_cli_stderr.txt").find("line 2") != std::string::npos);
}

TEST_CASE("estimands closed form prints the zero designs exactly") {
  auto r = run_cli("estimands --preset dgp4");
  REQUIRE(r.status == 0);
  CHECK(r.out == "tau_late=0\ntheta0=0\ntheta_dml=0\n");

  auto r2 = run_cli("estimands --preset dgp2");
  REQUIRE(r2.status == 0);
  CHECK(std::fabs(record_value(r2.out, "theta_dml")) > 1e5);
  CHECK(slurp("/tmp/cmliv_cli_stderr.txt").find("near zero") != std::string::npos);
}

TEST_CASE("estimands oracle mode prints simulation errors") {
  auto r = run_cli("estimands --preset dgp1 --mode oracle --n-oracle 100000 --seed 9");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("se=") != std::string::npos);
  CHECK(r.out.find("theta0_moment_ratio=") != std::string::npos);
}

TEST_CASE("simulate round-trips through estimate") {
  REQUIRE(run_cli("simulate --preset dgp1 --n 400 --seed 10 --out /tmp/cli_rt.csv").status == 0);
  auto r = run_cli("estimate --in /tmp/cli_rt.csv --estimators cml --learner ridge --folds 2");
  CHECK(r.status == 0);
  CHECK(r.out.find("estimator=cml theta=") != std::string::npos);
}
