#include <catch2/catch.hpp>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <vector>

#include "flcboot/distributions.hpp"
#include "oracles.hpp"

using flcboot::draw_error_vector;
using flcboot::draw_mvnormal;
using flcboot::draw_wishart;
using flcboot::ErrorDistribution;
using flcboot::ErrorTag;
using flcboot::RngStream;

namespace {

Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& rows) {
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Eigen::MatrixXd centered = rows.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(rows.rows());
}

}  // namespace

TEST_CASE("streams are reproducible and children are distinct") {
  RngStream a = RngStream::root(42);
  RngStream b = RngStream::root(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c1 = RngStream::root(42).split(0);
  RngStream c2 = RngStream::root(42).split(1);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += c1.next_u64() == c2.next_u64();
  CHECK(same == 0);

  // splitting does not consume parent state
  RngStream parent = RngStream::root(9);
  const std::uint64_t before = RngStream(parent).next_u64();
  (void)parent.split(3);
  CHECK(RngStream(parent).next_u64() == before);
}

TEST_CASE("bounded draws stay in range and cover the support") {
  RngStream rng = RngStream::root(11);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.next_below(7);
    REQUIRE(v < 7);
    ++hits[static_cast<std::size_t>(v)];
  }
  for (int h : hits) CHECK(h == Approx(10000).epsilon(0.05));
}

TEST_CASE("error generators are standardized") {
  const int n = 1000000;

  SECTION("normal") {
    RngStream rng = RngStream::root(100);
    const auto m = oracle::moments(draw_error_vector({ErrorTag::NORMAL, 1.0}, n, rng));
    CHECK(m.mean == Approx(0.0).margin(0.004));
    CHECK(m.variance == Approx(1.0).margin(0.01));
  }

  SECTION("student t3") {
    RngStream rng = RngStream::root(101);
    const auto m = oracle::moments(draw_error_vector({ErrorTag::STUDENT_T3, 1.0}, n, rng));
    CHECK(m.mean == Approx(0.0).margin(0.004));
    // t3 has no fourth moment, so its sample variance converges slowly
    CHECK(m.variance == Approx(1.0).margin(0.1));
  }

  SECTION("centered chi-squared 3") {
    RngStream rng = RngStream::root(102);
    const auto m = oracle::moments(draw_error_vector({ErrorTag::CHISQ3_CENTERED, 1.0}, n, rng));
    CHECK(m.mean == Approx(0.0).margin(0.004));
    CHECK(m.variance == Approx(1.0).margin(0.01));
    // skewness of chi^2_k is sqrt(8/k)
    CHECK(m.skewness == Approx(std::sqrt(8.0 / 3.0)).margin(0.05));
  }

  SECTION("two-component mixture") {
    RngStream rng = RngStream::root(103);
    const auto m =
        oracle::moments(draw_error_vector({ErrorTag::TWO_COMP_MIXTURE, 1.0}, n, rng));
    CHECK(m.mean == Approx(0.0).margin(0.004));
    CHECK(m.variance == Approx(1.0).margin(0.01));
    // fourth moment of the mixture: 3(0.8 v^2 + 0.2 (9v)^2) with v = 1/2.6
    const double v = 1.0 / 2.6;
    const double kurt = 3.0 * (0.8 * v * v + 0.2 * 81.0 * v * v);
    CHECK(kurt == Approx(7.5444).margin(5e-4));
    CHECK(m.kurtosis - 3.0 == Approx(kurt - 3.0).margin(0.15));
  }

  SECTION("sigma scales the variance") {
    RngStream rng = RngStream::root(104);
    const auto m = oracle::moments(draw_error_vector({ErrorTag::NORMAL, 2.0}, 200000, rng));
    CHECK(m.variance == Approx(4.0).epsilon(0.02));
  }
}

TEST_CASE("error draws are deterministic given the stream") {
  RngStream a = RngStream::root(7);
  RngStream b = RngStream::root(7);
  const Eigen::VectorXd va = draw_error_vector({ErrorTag::TWO_COMP_MIXTURE, 1.0}, 512, a);
  const Eigen::VectorXd vb = draw_error_vector({ErrorTag::TWO_COMP_MIXTURE, 1.0}, 512, b);
  CHECK(va == vb);
}

TEST_CASE("multivariate normal sampling") {
  SECTION("zero covariance gives exact zeros") {
    RngStream rng = RngStream::root(200);
    const Eigen::MatrixXd rows = draw_mvnormal(Eigen::MatrixXd::Zero(3, 3), 50, rng);
    CHECK(rows.norm() == 0.0);
  }

  SECTION("identity covariance") {
    RngStream rng = RngStream::root(201);
    const Eigen::MatrixXd rows = draw_mvnormal(Eigen::MatrixXd::Identity(2, 2), 100000, rng);
    const Eigen::MatrixXd cov = sample_cov(rows);
    CHECK(cov(0, 0) == Approx(1.0).margin(0.02));
    CHECK(cov(1, 1) == Approx(1.0).margin(0.02));
    CHECK(cov(0, 1) == Approx(0.0).margin(0.02));
  }

  SECTION("setting-1 covariance matrix") {
    Eigen::Matrix2d d;
    d << 0.05, 0.02, 0.02, 0.05;
    RngStream rng = RngStream::root(202);
    const Eigen::MatrixXd rows = draw_mvnormal(d, 100000, rng);
    const Eigen::MatrixXd cov = sample_cov(rows);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(cov(i, j) == Approx(d(i, j)).margin(0.005));
  }

  SECTION("singular but PSD covariance is accepted") {
    Eigen::Matrix2d d;
    d << 1.0, 1.0, 1.0, 1.0;  // rank one
    RngStream rng = RngStream::root(203);
    const Eigen::MatrixXd rows = draw_mvnormal(d, 20000, rng);
    CHECK((rows.col(0) - rows.col(1)).lpNorm<Eigen::Infinity>() <= 1e-8);
  }

  SECTION("indefinite matrix is rejected") {
    Eigen::Matrix2d d;
    d << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
    RngStream rng = RngStream::root(204);
    CHECK_THROWS_AS(draw_mvnormal(d, 10, rng), flcboot::NotPsd);
  }
}

TEST_CASE("wishart draws") {
  SECTION("mean is df * scale") {
    const Eigen::MatrixXd scale = 0.5 * Eigen::MatrixXd::Identity(2, 2);
    RngStream rng = RngStream::root(300);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 2);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) sum += draw_wishart(3, scale, rng);
    const Eigen::MatrixXd mean = sum / draws;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(mean(i, j) == Approx(3.0 * scale(i, j)).margin(0.02));
  }

  SECTION("dimension one reduces to scale times chi-squared") {
    RngStream rng = RngStream::root(301);
    std::vector<double> draws;
    draws.reserve(100000);
    const Eigen::MatrixXd scale = Eigen::MatrixXd::Identity(1, 1);
    for (int i = 0; i < 100000; ++i) draws.push_back(draw_wishart(3, scale, rng)(0, 0));
    const boost::math::chi_squared chi(3.0);
    const double ks = oracle::ks_against(draws, [&](double x) { return cdf(chi, x); });
    CHECK(ks < 0.01);
  }

  SECTION("output is exactly symmetric") {
    Eigen::Matrix2d scale;
    scale << 2.0, 0.3, 0.3, 1.0;
    RngStream rng = RngStream::root(302);
    for (int i = 0; i < 100; ++i) {
      const Eigen::MatrixXd w = draw_wishart(4, scale, rng);
      CHECK((w - w.transpose()).norm() == 0.0);
    }
  }

  SECTION("df below the dimension is rejected") {
    RngStream rng = RngStream::root(303);
    CHECK_THROWS_AS(draw_wishart(1, Eigen::MatrixXd::Identity(2, 2), rng), flcboot::DomainError);
  }
}
