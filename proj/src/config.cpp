#include "cmliv/config.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "cmliv/common.hpp"

namespace cmliv {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    std::string item =
        trim(s.substr(start, comma == std::string::npos ? s.size() - start : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Assignment {
  long line;
  std::string key, value;
};

std::vector<Assignment> read_assignments(std::istream& in) {
  std::vector<Assignment> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(line_no) + ": expected key = value");
    out.push_back({line_no, trim(t.substr(0, eq)), trim(t.substr(eq + 1))});
  }
  return out;
}

[[noreturn]] void fail(const Assignment& a, const std::string& what) {
  throw config_error("line " + std::to_string(a.line) + ": " + what);
}

long to_long(const Assignment& a) {
  try {
    return std::stol(a.value);
  } catch (const std::exception&) {
    fail(a, "'" + a.value + "' is not an integer");
  }
}

double to_double(const Assignment& a) {
  try {
    return std::stod(a.value);
  } catch (const std::exception&) {
    fail(a, "'" + a.value + "' is not a number");
  }
}

bool to_bool(const Assignment& a) {
  if (a.value == "true" || a.value == "1" || a.value == "yes") return true;
  if (a.value == "false" || a.value == "0" || a.value == "no") return false;
  fail(a, "'" + a.value + "' is not a boolean");
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  cfg.learners.clear();
  bool have_learners = false;

  for (const Assignment& a : read_assignments(in)) {
    try {
      if (a.key == "dgps" || a.key == "dgp") {
        cfg.dgps = split_list(a.value);
      } else if (a.key == "n" || a.key == "sample_sizes") {
        cfg.sample_sizes.clear();
        for (const auto& item : split_list(a.value)) cfg.sample_sizes.push_back(std::stol(item));
      } else if (a.key == "reps") {
        cfg.reps = static_cast<int>(to_long(a));
      } else if (a.key == "folds") {
        cfg.folds = static_cast<int>(to_long(a));
      } else if (a.key == "learners" || a.key == "learner") {
        for (const auto& item : split_list(a.value)) cfg.learners.push_back(parse_learner_spec(item));
        have_learners = true;
      } else if (a.key == "estimators") {
        cfg.estimators.clear();
        for (const auto& item : split_list(a.value))
          cfg.estimators.push_back(parse_estimator_id(item));
      } else if (a.key == "seed") {
        cfg.master_seed = static_cast<std::uint64_t>(to_long(a));
      } else if (a.key == "variance") {
        if (a.value == "iid") cfg.variance = VarianceMode::iid_sandwich;
        else if (a.value == "cluster") cfg.variance = VarianceMode::cluster_robust;
        else fail(a, "variance must be iid or cluster");
      } else if (a.key == "untrimmed") {
        cfg.untrimmed = to_bool(a);
      } else if (a.key == "targets") {
        if (a.value == "closed-form") cfg.target_source = TargetSource::closed_form;
        else if (a.value == "oracle") cfg.target_source = TargetSource::mc_oracle;
        else fail(a, "targets must be closed-form or oracle");
      } else if (a.key == "oracle_draws") {
        cfg.oracle_draws = to_long(a);
      } else if (a.key == "workers") {
        cfg.workers = static_cast<int>(to_long(a));
      } else {
        fail(a, "unknown key '" + a.key + "'");
      }
    } catch (const config_error&) {
      throw;
    } catch (const std::exception& e) {
      fail(a, e.what());
    }
  }
  if (!have_learners) cfg.learners.push_back(parse_learner_spec("rf"));
  validate_experiment_config(cfg);
  return cfg;
}

ExperimentConfig parse_experiment_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open '" + path + "' for reading");
  return parse_experiment_config(in);
}

DgpConfig parse_dgp_config(std::istream& in) {
  DgpConfig cfg;
  for (const Assignment& a : read_assignments(in)) {
    if (a.key == "sigma_tau") cfg.sigma_tau = to_double(a);
    else if (a.key == "rho_delta_tau") cfg.rho_delta_tau = to_double(a);
    else if (a.key == "rho_delta_eps") cfg.rho_delta_eps = to_double(a);
    else if (a.key == "rho_tau_eps") cfg.rho_tau_eps = to_double(a);
    else if (a.key == "alpha") cfg.alpha = to_double(a);
    else if (a.key == "sigma_x") cfg.sigma_x = to_double(a);
    else if (a.key == "alpha_z") cfg.alpha_z = to_double(a);
    else if (a.key == "beta_xz") cfg.beta_xz = to_double(a);
    else if (a.key == "s1") cfg.s1 = to_double(a);
    else if (a.key == "s2") cfg.s2 = to_double(a);
    else if (a.key == "x1_mode") {
      if (a.value == "threshold") cfg.x1_mode = X1Mode::threshold;
      else if (a.value == "degenerate") cfg.x1_mode = X1Mode::degenerate;
      else fail(a, "x1_mode must be threshold or degenerate");
    } else {
      fail(a, "unknown key '" + a.key + "'");
    }
  }
  validate_config(cfg);
  return cfg;
}

DgpConfig parse_dgp_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open '" + path + "' for reading");
  return parse_dgp_config(in);
}

}  // namespace cmliv
