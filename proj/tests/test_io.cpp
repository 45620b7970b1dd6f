#include <doctest.h>

#include <sstream>

#include "cmliv/common.hpp"
#include "cmliv/csv.hpp"
#include "cmliv/dgp.hpp"

using namespace cmliv;

TEST_CASE("dataset csv round-trips bit-exactly") {
  IvDataset ds = draw_sample(dgp_preset("dgp1"), 50, 31);
  std::ostringstream out;
  write_dataset_csv(ds, out);
  std::istringstream in(out.str());
  IvDataset back = read_dataset_csv(in);
  CHECK(back.n() == ds.n());
  CHECK((back.y - ds.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.d - ds.d).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.z1 - ds.z1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.x - ds.x).cwiseAbs().maxCoeff() == 0.0);

  // Writing the parsed dataset again reproduces the bytes.
  std::ostringstream out2;
  write_dataset_csv(back, out2);
  CHECK(out.str() == out2.str());
}

TEST_CASE("optional columns survive the round trip") {
  IvDataset ds = draw_sample(dgp_preset("dgp3"), 20, 32);
  ds.weight = Eigen::VectorXd::Constant(20, 2.0);
  ds.cluster = std::vector<long>(20);
  for (long i = 0; i < 20; ++i) (*ds.cluster)[i] = i / 3;
  std::ostringstream out;
  write_dataset_csv(ds, out);
  std::istringstream in(out.str());
  IvDataset back = read_dataset_csv(in);
  REQUIRE(back.weight.has_value());
  REQUIRE(back.cluster.has_value());
  CHECK((*back.cluster)[5] == 1);
}

TEST_CASE("schema violations are addressed by row and column") {
  SUBCASE("missing required column") {
    std::istringstream in("y,z1,x_1\n1,0,2\n");
    try {
      read_dataset_csv(in);
      FAIL("expected data_error");
    } catch (const data_error& e) {
      CHECK(std::string(e.what()).find("missing column d") != std::string::npos);
    }
  }
  SUBCASE("non-numeric cell") {
    std::istringstream in("y,d,z1,x_1\n1,0,1,2\n1,zero,1,2\n");
    try {
      read_dataset_csv(in);
      FAIL("expected data_error");
    } catch (const data_error& e) {
      std::string msg = e.what();
      CHECK(msg.find("row 3") != std::string::npos);
      CHECK(msg.find("column d") != std::string::npos);
    }
  }
  SUBCASE("unexpected column") {
    std::istringstream in("y,d,z1,x_1,foo\n1,0,1,2,3\n");
    CHECK_THROWS_AS(read_dataset_csv(in), data_error);
  }
  SUBCASE("non-contiguous covariates") {
    std::istringstream in("y,d,z1,x_1,x_3\n1,0,1,2,3\n");
    CHECK_THROWS_AS(read_dataset_csv(in), data_error);
  }
  SUBCASE("ragged row") {
    std::istringstream in("y,d,z1,x_1\n1,0,1\n");
    CHECK_THROWS_AS(read_dataset_csv(in), data_error);
  }
  SUBCASE("no data rows") {
    std::istringstream in("y,d,z1,x_1\n");
    CHECK_THROWS_AS(read_dataset_csv(in), data_error);
  }
}

TEST_CASE("alternate weight and cluster column names") {
  std::istringstream in("y,d,z1,x_1,survey_wt,hh\n1,0,1,2,1.5,7\n2,1,0,3,0.5,7\n");
  CsvReadOptions opts;
  opts.weight_column = "survey_wt";
  opts.cluster_column = "hh";
  IvDataset ds = read_dataset_csv(in, opts);
  REQUIRE(ds.weight.has_value());
  CHECK((*ds.weight)[0] == doctest::Approx(1.5));
  REQUIRE(ds.cluster.has_value());
  CHECK((*ds.cluster)[1] == 7);
}

TEST_CASE("17-digit formatting is lossless") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.123456789, -0.0}) {
    CHECK(std::stod(format_double17(v)) == v);
  }
}
