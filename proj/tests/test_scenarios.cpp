#include <catch2/catch.hpp>

#include <set>

#include "flcboot/flc_test.hpp"
#include "flcboot/scenarios.hpp"
#include "oracles.hpp"

using flcboot::ErrorTag;
using flcboot::generate;
using flcboot::make_scenario;
using flcboot::RngStream;
using flcboot::ScenarioSpec;
using flcboot::Setting;

TEST_CASE("tested split per setting") {
  const ScenarioSpec s1 = make_scenario(Setting::S1, 10, 3, {ErrorTag::NORMAL, 1.0});
  const ScenarioSpec s2 = make_scenario(Setting::S2, 7, 10, {ErrorTag::NORMAL, 1.0});
  const ScenarioSpec s3 = make_scenario(Setting::S3, 10, 10, {ErrorTag::NORMAL, 1.0});

  CHECK(flcboot::tested_split(s1) == std::pair<int, bool>{0, true});
  CHECK(flcboot::tested_split(s2) == std::pair<int, bool>{1, true});
  CHECK(flcboot::tested_split(s3) == std::pair<int, bool>{2, true});

  ScenarioSpec power = s1;
  power.D << 0.05, 0.02, 0.02, 0.05;
  CHECK(flcboot::tested_split(power).second == false);

  ScenarioSpec footnote_b = s3;
  footnote_b.r0_override = 3;  // test R4 = 0 | R1, R2, R3
  CHECK(flcboot::tested_split(footnote_b).first == 3);
}

TEST_CASE("setting 1 shape: block-diagonal Z with all columns tested") {
  ScenarioSpec spec = make_scenario(Setting::S1, 10, 3, {ErrorTag::STUDENT_T3, 1.0});
  RngStream rng = RngStream::root(50);
  const auto data = generate(spec, rng);

  CHECK(data.design.n_obs() == 30);
  CHECK(data.design.X.rows() == 30);
  CHECK(data.design.X.cols() == 2);
  CHECK(data.design.Z.rows() == 30);
  CHECK(data.design.Z.cols() == 20);
  CHECK(data.design.r0 == 0);
  CHECK(data.design.X.col(0) == Eigen::VectorXd::Ones(30));

  // rows of cluster c vanish outside that cluster's own columns
  for (int c = 0; c < 10; ++c) {
    std::set<Eigen::Index> own;
    for (int j = 0; j < 2; ++j) own.insert(flcboot::z_column(spec, c, j));
    for (int i = 0; i < 3; ++i) {
      const Eigen::Index row = c * 3 + i;
      for (Eigen::Index col = 0; col < 20; ++col) {
        if (!own.count(col)) CHECK(data.design.Z(row, col) == 0.0);
      }
    }
    CHECK(data.design.Z.block(c * 3, *own.begin(), 3, 1) == Eigen::MatrixXd::Ones(3, 1));
  }
}

TEST_CASE("untested columns lead the design for settings 2 and 3") {
  ScenarioSpec s2 = make_scenario(Setting::S2, 5, 4, {ErrorTag::NORMAL, 1.0});
  RngStream rng = RngStream::root(51);
  const auto data2 = generate(s2, rng);
  CHECK(data2.design.Z.cols() == 15);
  CHECK(data2.design.r0 == 5);  // one untested covariate per cluster
  // leading r0 columns are the per-cluster random intercepts
  for (int c = 0; c < 5; ++c) {
    CHECK(data2.design.Z.block(c * 4, c, 4, 1) == Eigen::MatrixXd::Ones(4, 1));
  }

  ScenarioSpec s3 = make_scenario(Setting::S3, 4, 3, {ErrorTag::NORMAL, 1.0});
  RngStream rng3 = RngStream::root(52);
  const auto data3 = generate(s3, rng3);
  CHECK(data3.design.Z.cols() == 16);
  CHECK(data3.design.r0 == 8);
  CHECK(data3.design.X.cols() == 8);  // eight fixed covariates
}

TEST_CASE("null setting 1 draws no random effects") {
  ScenarioSpec spec = make_scenario(Setting::S1, 6, 4, {ErrorTag::CHISQ3_CENTERED, 1.0});
  RngStream rng = RngStream::root(53);
  const auto data = generate(spec, rng);
  CHECK(data.null_is_true);
  CHECK(data.random_effects.norm() == 0.0);
  // y = X beta + eps exactly; the Z contribution vanishes
  CHECK(data.design.y.size() == 24);
}

TEST_CASE("setting 2 random effects reproduce the tested covariance block") {
  ScenarioSpec spec = make_scenario(Setting::S2, 40, 2, {ErrorTag::NORMAL, 1.0});
  spec.D.bottomRightCorner(2, 2) << 0.2, 0.1, 0.1, 0.2;

  const int datasets = 2500;  // 100000 clusters in total
  Eigen::MatrixXd pairs(datasets * 40, 2);
  RngStream root = RngStream::root(54);
  for (int d = 0; d < datasets; ++d) {
    RngStream stream = root.split(static_cast<std::uint64_t>(d));
    const auto data = generate(spec, stream);
    for (int c = 0; c < 40; ++c) {
      pairs(d * 40 + c, 0) = data.random_effects(flcboot::z_column(spec, c, 1));
      pairs(d * 40 + c, 1) = data.random_effects(flcboot::z_column(spec, c, 2));
    }
  }
  const Eigen::RowVectorXd mean = pairs.colwise().mean();
  const Eigen::MatrixXd centered = pairs.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(pairs.rows());
  CHECK(cov(0, 0) == Approx(0.2).margin(0.01));
  CHECK(cov(1, 1) == Approx(0.2).margin(0.01));
  CHECK(cov(0, 1) == Approx(0.1).margin(0.01));
}

TEST_CASE("under the null the response covariance is sigma^2 I") {
  ScenarioSpec spec = make_scenario(Setting::S1, 4, 2, {ErrorTag::NORMAL, 1.0});
  const int reps = 30000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(8, 8);
  RngStream root = RngStream::root(55);
  for (int r = 0; r < reps; ++r) {
    RngStream stream = root.split(static_cast<std::uint64_t>(r));
    const auto data = generate(spec, stream);
    const Eigen::VectorXd centered = data.design.y - data.design.X * spec.beta;
    sum += centered * centered.transpose();
  }
  const Eigen::MatrixXd cov = sum / reps;
  for (int i = 0; i < 8; ++i) {
    CHECK(cov(i, i) == Approx(1.0).margin(0.03));
    for (int j = 0; j < i; ++j) CHECK(cov(i, j) == Approx(0.0).margin(0.025));
  }
}

TEST_CASE("generation is deterministic given the stream") {
  ScenarioSpec spec = make_scenario(Setting::S3, 5, 4, {ErrorTag::TWO_COMP_MIXTURE, 1.0});
  spec.tau = 0.1;
  RngStream a = RngStream::root(56);
  RngStream b = RngStream::root(56);
  const auto da = generate(spec, a);
  const auto db = generate(spec, b);
  CHECK(da.design.y == db.design.y);
  CHECK(da.design.X == db.design.X);
  CHECK(da.design.Z == db.design.Z);
  CHECK(da.d_realized == db.d_realized);
}

TEST_CASE("setting 3 covariance assembly") {
  ScenarioSpec spec = make_scenario(Setting::S3, 6, 8, {ErrorTag::STUDENT_T3, 1.0});
  spec.tau = 0.2;
  RngStream root = RngStream::root(57);
  for (int rep = 0; rep < 200; ++rep) {
    RngStream stream = root.split(static_cast<std::uint64_t>(rep));
    const auto data = generate(spec, stream);
    const Eigen::MatrixXd& d = data.d_realized;
    REQUIRE(d.rows() == 4);
    CHECK(d(2, 2) == 0.2);
    CHECK(d(3, 3) == 0.2);
    CHECK(d(2, 3) == 0.1);
    for (int i = 0; i < 2; ++i)
      for (int j = 2; j < 4; ++j) CHECK(d(i, j) == 0.1);
    CHECK(d == d.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    CHECK_FALSE(data.null_is_true);
  }

  spec.tau = 0.0;
  RngStream stream = root.split(9999);
  const auto null_data = generate(spec, stream);
  CHECK(null_data.null_is_true);
  CHECK(null_data.d_realized.bottomRightCorner(2, 2).isZero(0.0));
  // a null setting-3 dataset feeds the test pipeline end to end
  CHECK_NOTHROW(flcboot::flc_test(null_data.design));
}

TEST_CASE("footnote-B override tests only the last random covariate") {
  ScenarioSpec spec = make_scenario(Setting::S3, 5, 6, {ErrorTag::NORMAL, 1.0});
  spec.r0_override = 3;
  RngStream rng = RngStream::root(58);
  const auto data = generate(spec, rng);
  CHECK(data.design.r0 == 15);
  const auto result = flcboot::flc_test(data.design);
  CHECK(result.df_num >= 1);
}

TEST_CASE("custom beta sets the fixed design width") {
  ScenarioSpec spec = make_scenario(Setting::S1, 5, 3, {ErrorTag::NORMAL, 1.0});
  spec.beta = Eigen::VectorXd::Constant(4, 0.5);
  RngStream rng = RngStream::root(59);
  const auto data = generate(spec, rng);
  CHECK(data.design.X.cols() == 4);
}

TEST_CASE("labels summarize the tested block") {
  ScenarioSpec s1 = make_scenario(Setting::S1, 5, 3, {ErrorTag::NORMAL, 1.0});
  s1.D << 0.05, 0.02, 0.02, 0.05;
  CHECK(flcboot::default_label(s1) == "[0.05 0.02; 0.02 0.05]");

  ScenarioSpec s3 = make_scenario(Setting::S3, 5, 3, {ErrorTag::NORMAL, 1.0});
  s3.tau = 0.1;
  CHECK(flcboot::default_label(s3) == "tau=0.1");
}

TEST_CASE("invalid scenarios are rejected") {
  ScenarioSpec spec = make_scenario(Setting::S2, 5, 3, {ErrorTag::NORMAL, 1.0});
  RngStream rng = RngStream::root(60);

  SECTION("bad sizes") {
    spec.n_clusters = 0;
    CHECK_THROWS_AS(generate(spec, rng), flcboot::DomainError);
  }
  SECTION("wrong covariance dimension") {
    spec.D = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(generate(spec, rng), flcboot::DomainError);
  }
  SECTION("negative tau") {
    ScenarioSpec s3 = make_scenario(Setting::S3, 5, 3, {ErrorTag::NORMAL, 1.0});
    s3.tau = -0.1;
    CHECK_THROWS_AS(generate(s3, rng), flcboot::DomainError);
  }
  SECTION("r0 override out of range") {
    spec.r0_override = 3;
    CHECK_THROWS_AS(generate(spec, rng), flcboot::DomainError);
  }
  SECTION("indefinite tested block") {
    spec.D.bottomRightCorner(2, 2) << 0.1, 0.9, 0.9, 0.1;
    CHECK_THROWS_AS(generate(spec, rng), flcboot::NotPsd);
  }
}
