#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "flcboot/distributions.hpp"
#include "flcboot/errors.hpp"
#include "flcboot/projection.hpp"
#include "flcboot/rng.hpp"

namespace flcboot {

enum class Setting { S1, S2, S3 };

inline const char* setting_name(Setting s) {
  switch (s) {
    case Setting::S1: return "s1";
    case Setting::S2: return "s2";
    case Setting::S3: return "s3";
  }
  return "?";
}

// Number of random covariates per cluster (the first is a random intercept).
inline int random_covariates(Setting s) {
  switch (s) {
    case Setting::S1: return 2;
    case Setting::S2: return 3;
    case Setting::S3: return 4;
  }
  return 0;
}

inline int default_fixed_covariates(Setting s) { return s == Setting::S3 ? 8 : 2; }

// Leading random-effect columns kept under the null: S1 tests all of them,
// S2 tests columns 2-3 given the random intercept, S3 tests columns 3-4.
inline int default_r0(Setting s) {
  switch (s) {
    case Setting::S1: return 0;
    case Setting::S2: return 1;
    case Setting::S3: return 2;
  }
  return 0;
}

// One cell of the simulation grid.
//
// D holds the deterministic part of the random-effect covariance: the full
// 2x2 matrix for Setting 1; the full 3x3 matrix for Setting 2 (unit variance
// random intercept, independent of the tested block); for Setting 3 only tau
// matters and the top-left 2x2 block is redrawn per dataset from a
// Wishart(3, 0.5 I) distribution.
struct ScenarioSpec {
  Setting setting = Setting::S1;
  int n_clusters = 10;
  int cluster_size = 3;
  Eigen::MatrixXd D;
  double tau = 0.0;                  // S3 only
  ErrorDistribution error;
  Eigen::VectorXd beta;              // length = number of fixed covariates
  std::uint64_t seed = 0;
  int r0_override = -1;              // -1: use the setting default
  std::string label;                 // row label for result tables
};

inline ScenarioSpec make_scenario(Setting setting, int n_clusters, int cluster_size,
                                  const ErrorDistribution& error) {
  ScenarioSpec spec;
  spec.setting = setting;
  spec.n_clusters = n_clusters;
  spec.cluster_size = cluster_size;
  spec.error = error;
  const int k = random_covariates(setting);
  spec.D = Eigen::MatrixXd::Zero(k, k);
  if (setting == Setting::S2) spec.D(0, 0) = 1.0;
  spec.beta = Eigen::VectorXd::Ones(default_fixed_covariates(setting));
  return spec;
}

inline int tested_r0(const ScenarioSpec& spec) {
  return spec.r0_override >= 0 ? spec.r0_override : default_r0(spec.setting);
}

inline bool null_block_is_zero(const ScenarioSpec& spec) {
  switch (spec.setting) {
    case Setting::S1: return spec.D.isZero(0.0);
    case Setting::S2: return spec.D.bottomRightCorner(2, 2).isZero(0.0);
    case Setting::S3: return spec.tau == 0.0;
  }
  return false;
}

// (r0, tested-block-is-zero) for the scenario's hypothesis split.
inline std::pair<int, bool> tested_split(const ScenarioSpec& spec) {
  return {tested_r0(spec), null_block_is_zero(spec)};
}

inline void validate(const ScenarioSpec& spec) {
  if (spec.n_clusters < 1 || spec.cluster_size < 1)
    throw DomainError("scenario: n and m must be >= 1");
  const int k = random_covariates(spec.setting);
  if (spec.D.rows() != k || spec.D.cols() != k)
    throw DomainError("scenario: D has the wrong dimension for the setting");
  if (spec.setting == Setting::S3 && spec.tau < 0.0)
    throw DomainError("scenario: tau must be >= 0");
  if (spec.beta.size() < 1) throw DomainError("scenario: beta must be nonempty");
  if (!(spec.error.sigma > 0.0)) throw DomainError("scenario: sigma must be > 0");
  const int r0 = tested_r0(spec);
  if (r0 < 0 || r0 >= k) throw DomainError("scenario: r0 must satisfy 0 <= r0 < r");
}

inline std::string default_label(const ScenarioSpec& spec) {
  std::ostringstream os;
  if (spec.setting == Setting::S3) {
    os << "tau=" << spec.tau;
    return os.str();
  }
  const Eigen::MatrixXd block =
      spec.setting == Setting::S1 ? spec.D : spec.D.bottomRightCorner(2, 2).eval();
  os << "[" << block(0, 0) << " " << block(0, 1) << "; " << block(1, 0) << " " << block(1, 1)
     << "]";
  return os.str();
}

struct GeneratedDataset {
  DesignMatrices design;
  ScenarioSpec truth;
  bool null_is_true = false;
  Eigen::VectorXd random_effects;  // stacked b in Z's column order
  Eigen::MatrixXd d_realized;      // covariance actually used (S3 redraws per dataset)
};

// Z column layout: the untested random covariates of all clusters first, then
// the tested ones, each group block-diagonal by cluster. The tested-split
// r0 of the assembled DesignMatrices is therefore n_clusters * tested_r0.
inline Eigen::Index untested_design_columns(const ScenarioSpec& spec) {
  return static_cast<Eigen::Index>(spec.n_clusters) * tested_r0(spec);
}

// Global column of random covariate j for cluster c under that layout.
inline Eigen::Index z_column(const ScenarioSpec& spec, int cluster, int covariate) {
  const int r0 = tested_r0(spec);
  const int k = random_covariates(spec.setting);
  if (covariate < r0) return static_cast<Eigen::Index>(cluster) * r0 + covariate;
  return untested_design_columns(spec) +
         static_cast<Eigen::Index>(cluster) * (k - r0) + (covariate - r0);
}

namespace detail {

// Covariates are standardized uniform: mean 0, variance 1, bounded support.
// Unbounded draws put extreme leverage into the tiny per-cluster blocks these
// designs use, which distorts the heavy-tailed-error rejection rates the
// published tables report.
inline double covariate(RngStream& rng) {
  return 1.7320508075688772 * (2.0 * rng.next_double() - 1.0);
}

inline bool is_psd(const Eigen::MatrixXd& a, double tol_scale = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  return lo >= -tol_scale * std::max(1.0, hi);
}

// Setting 3 covariance: Wishart(3, 0.5 I) top-left block, tau on the tested
// diagonal, tau/2 everywhere else; redrawn until positive semidefinite.
inline Eigen::MatrixXd assemble_s3_covariance(double tau, RngStream& rng) {
  const Eigen::MatrixXd wishart_scale = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(4, 4, tau / 2.0);
    d.topLeftCorner(2, 2) = draw_wishart(3, wishart_scale, rng);
    d(2, 2) = tau;
    d(3, 3) = tau;
    if (is_psd(d)) return d;
  }
  throw NotPsd("setting 3: covariance assembly failed 100 redraws");
}

}  // namespace detail

// Simulate one dataset: X = [1 | iid standardized covariates], one
// [1 | iid standardized covariates] random block per cluster (the random
// intercept is covariate 0), b_i ~ N(0, D), errors per the scenario's tag.
// Deterministic given the rng stream.
inline GeneratedDataset generate(const ScenarioSpec& spec, RngStream& rng) {
  validate(spec);
  const int n = spec.n_clusters;
  const int m = spec.cluster_size;
  const Eigen::Index total = static_cast<Eigen::Index>(n) * m;
  const int p = static_cast<int>(spec.beta.size());
  const int k = random_covariates(spec.setting);

  GeneratedDataset out;
  out.truth = spec;
  out.truth.label = spec.label.empty() ? default_label(spec) : spec.label;
  out.null_is_true = null_block_is_zero(spec);

  Eigen::MatrixXd x(total, p);
  x.col(0).setOnes();
  for (Eigen::Index j = 1; j < p; ++j)
    for (Eigen::Index i = 0; i < total; ++i) x(i, j) = detail::covariate(rng);

  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(total, static_cast<Eigen::Index>(n) * k);
  for (int c = 0; c < n; ++c) {
    const Eigen::Index row0 = static_cast<Eigen::Index>(c) * m;
    z.block(row0, z_column(spec, c, 0), m, 1).setOnes();
    for (int j = 1; j < k; ++j) {
      const Eigen::Index col = z_column(spec, c, j);
      for (int i = 0; i < m; ++i) z(row0 + i, col) = detail::covariate(rng);
    }
  }

  out.d_realized = spec.setting == Setting::S3 ? detail::assemble_s3_covariance(spec.tau, rng)
                                               : spec.D;
  const Eigen::MatrixXd b_rows = draw_mvnormal(out.d_realized, n, rng);
  out.random_effects.resize(static_cast<Eigen::Index>(n) * k);
  for (int c = 0; c < n; ++c)
    for (int j = 0; j < k; ++j) out.random_effects(z_column(spec, c, j)) = b_rows(c, j);

  const Eigen::VectorXd eps = draw_error_vector(spec.error, total, rng);

  out.design.X = std::move(x);
  out.design.Z = std::move(z);
  out.design.y = out.design.X * spec.beta + out.design.Z * out.random_effects + eps;
  out.design.r0 = static_cast<int>(untested_design_columns(spec));
  return out;
}

}  // namespace flcboot
