#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cmliv/common.hpp"
#include "cmliv/dataset.hpp"
#include "cmliv/folds.hpp"
#include "cmliv/rng.hpp"

using namespace cmliv;

namespace {

IvDataset tiny_dataset(long n = 6) {
  IvDataset ds;
  ds.y = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  ds.d = Eigen::VectorXd::Zero(n);
  for (long i = 0; i < n; i += 2) ds.d[i] = 1.0;
  ds.z1 = ds.d;
  ds.x = Eigen::MatrixXd::Ones(n, 2);
  return ds;
}

}  // namespace

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    auto v = a.next_u64();
    CHECK(v == b.next_u64());
  }
  bool all_equal = true;
  Rng a2(42);
  for (int i = 0; i < 10; ++i) all_equal = all_equal && (a2.next_u64() == c.next_u64());
  CHECK_FALSE(all_equal);
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-9, 1e-4, 0.3, 0.5, 0.69146246127401312, 0.975, 1.0 - 1e-9}) {
    CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(norm_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK_THROWS(norm_quantile(0.0));
}

TEST_CASE("derive_seed separates paths") {
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(hash_string("dgp1") != hash_string("dgp2"));
}

TEST_CASE("fold plan splits 10 into 4 as {3,3,2,2}") {
  FoldPlan plan = make_fold_plan(10, 4, 7);
  std::vector<long> sizes(4, 0);
  for (int f : plan.assignment) ++sizes[f];
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<long>{2, 2, 3, 3});
}

TEST_CASE("fold plan is a partition and reproducible") {
  FoldPlan a = make_fold_plan(8, 2, 99);
  FoldPlan b = make_fold_plan(8, 2, 99);
  CHECK(a.assignment == b.assignment);
  auto f0 = a.fold_indices(0), f1 = a.fold_indices(1);
  CHECK(f0.size() == 4);
  CHECK(f1.size() == 4);
  std::set<long> all(f0.begin(), f0.end());
  all.insert(f1.begin(), f1.end());
  CHECK(all.size() == 8);

  // Random shapes: every index lands in exactly one fold, sizes within 1.
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    long n = 2 + static_cast<long>(rng.next_below(200));
    int folds = 2 + static_cast<int>(rng.next_below(5));
    if (n < folds) continue;
    FoldPlan p = make_fold_plan(n, folds, rng.next_u64());
    std::vector<long> sizes(folds, 0);
    for (int f : p.assignment) {
      REQUIRE(f >= 0);
      REQUIRE(f < folds);
      ++sizes[f];
    }
    long lo = *std::min_element(sizes.begin(), sizes.end());
    long hi = *std::max_element(sizes.begin(), sizes.end());
    CHECK(hi - lo <= 1);
    CHECK(lo >= 1);
  }
}

TEST_CASE("fold plan rejects impossible configurations") {
  CHECK_THROWS_AS(make_fold_plan(3, 4, 1), config_error);
  CHECK_THROWS_AS(make_fold_plan(10, 1, 1), config_error);
}

TEST_CASE("validate_dataset reports problems and flags binary columns") {
  IvDataset ds = tiny_dataset();
  auto rep = validate_dataset(ds);
  CHECK(rep.ok());
  CHECK(rep.treatment_binary);
  CHECK(rep.instrument_binary);

  SUBCASE("NaN in outcome is row-addressed") {
    ds.y[3] = std::nan("");
    auto r = validate_dataset(ds);
    REQUIRE_FALSE(r.ok());
    CHECK(r.problems[0] == "non-finite outcome at row 3");
  }
  SUBCASE("length mismatch is reported") {
    ds.d.conservativeResize(4);
    auto r = validate_dataset(ds);
    REQUIRE_FALSE(r.ok());
    CHECK(r.problems[0].find("length mismatch") != std::string::npos);
  }
  SUBCASE("non-binary instrument clears the flag") {
    ds.z1[0] = 0.5;
    auto r = validate_dataset(ds);
    CHECK(r.ok());
    CHECK_FALSE(r.instrument_binary);
  }
  SUBCASE("weights must be nonnegative with at least one positive") {
    ds.weight = Eigen::VectorXd::Zero(ds.n());
    CHECK_FALSE(validate_dataset(ds).ok());
    (*ds.weight)[0] = -1.0;
    CHECK_FALSE(validate_dataset(ds).ok());
    ds.weight = Eigen::VectorXd::Ones(ds.n());
    CHECK(validate_dataset(ds).ok());
  }
}
