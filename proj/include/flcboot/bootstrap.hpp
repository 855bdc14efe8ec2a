#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "flcboot/errors.hpp"
#include "flcboot/flc_test.hpp"
#include "flcboot/projection.hpp"
#include "flcboot/rng.hpp"

namespace flcboot {

enum class BootstrapVariant { NULL_RESIDUAL, NONNULL_RESIDUAL, M_OUT_OF_N, DOUBLE, FAST_DOUBLE };

struct BootstrapPlan {
  BootstrapVariant variant = BootstrapVariant::NULL_RESIDUAL;
  int B = 1;             // first-level resamples
  int B2 = 1;            // second-level resamples, DOUBLE only
  int m = 0;             // M_OUT_OF_N only, 1 <= m <= N
  std::uint64_t seed = 0;
};

inline Method method_for(BootstrapVariant v) {
  switch (v) {
    case BootstrapVariant::NULL_RESIDUAL: return Method::BT;
    case BootstrapVariant::NONNULL_RESIDUAL: return Method::BT_NONNULL;
    case BootstrapVariant::M_OUT_OF_N: return Method::BT_MN;
    case BootstrapVariant::DOUBLE: return Method::DB;
    case BootstrapVariant::FAST_DOUBLE: return Method::FDB;
  }
  return Method::BT;
}

// Statistic evaluations a plan will perform: 1+B for the single-level
// bootstraps, 1+2B for the fast double bootstrap, 1+B1+B1*B2 for the full
// double bootstrap.
inline std::int64_t expected_evaluations(BootstrapVariant v, int B, int B2 = 1) {
  switch (v) {
    case BootstrapVariant::FAST_DOUBLE: return 1 + 2 * static_cast<std::int64_t>(B);
    case BootstrapVariant::DOUBLE:
      return 1 + static_cast<std::int64_t>(B) + static_cast<std::int64_t>(B) * B2;
    default: return 1 + static_cast<std::int64_t>(B);
  }
}

namespace detail {

// y*_i = fitted_i + scale * resid_j with j drawn uniformly with replacement.
inline Eigen::VectorXd resample_around(const Eigen::VectorXd& fitted, const Eigen::VectorXd& resid,
                                       double scale, RngStream& rng) {
  const Eigen::Index n = fitted.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto j = static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    out(i) = fitted(i) + scale * resid(j);
  }
  return out;
}

inline void require_m_in_range(int m, Eigen::Index n) {
  if (m < 1 || m > n) throw DomainError("m-out-of-n bootstrap: m must lie in [1, N]");
}

}  // namespace detail

// Null-imposed residual bootstrap draw: residuals and fitted values both come
// from the least-squares fit of the null design (X, Z0).
inline Eigen::VectorXd resample_null(const DesignMatrices& design, const ProjectionPair& pair,
                                     RngStream& rng) {
  const Eigen::VectorXd fitted = fitted_null(pair, design.y);
  const Eigen::VectorXd resid = design.y - fitted;
  return detail::resample_around(fitted, resid, 1.0, rng);
}

// Residuals taken from the full fit (variance of the tested effects not set to
// zero), responses still rebuilt around the null fitted values.
inline Eigen::VectorXd resample_nonnull(const DesignMatrices& design, const ProjectionPair& pair,
                                        RngStream& rng) {
  const Eigen::VectorXd fitted = fitted_null(pair, design.y);
  const Eigen::VectorXd resid = design.y - fitted_full(pair, design.y);
  return detail::resample_around(fitted, resid, 1.0, rng);
}

// Null resample with residuals inflated by sqrt(N/m).
inline Eigen::VectorXd resample_m_out_of_n(const DesignMatrices& design,
                                           const ProjectionPair& pair, int m, RngStream& rng) {
  detail::require_m_in_range(m, design.n_obs());
  const Eigen::VectorXd fitted = fitted_null(pair, design.y);
  const Eigen::VectorXd resid = design.y - fitted;
  const double scale = std::sqrt(static_cast<double>(design.n_obs()) / m);
  return detail::resample_around(fitted, resid, scale, rng);
}

// Heuristic m with m/N equal to the ratio of the full-fit to null-fit residual
// variance, rounded to the nearest integer and clamped to [1, N].
inline int m_from_variance_ratio(const ProjectionPair& pair, const Eigen::VectorXd& y) {
  const double r_full = rss_full(pair, y);
  const double r_null = rss_null(pair, y);
  if (r_null <= 0.0) throw SaturatedFit("null design reproduces the response");
  const auto n = static_cast<double>(pair.n_obs);
  const auto m = static_cast<int>(std::llround(n * r_full / r_null));
  return std::clamp(m, 1, static_cast<int>(pair.n_obs));
}

// ---- counting and quantile rules, shared by all procedures --------------

// #{s > threshold} / size; ties count as non-exceeding.
inline double exceed_fraction(double threshold, std::span<const double> stats) {
  if (stats.empty()) throw DimensionMismatch("exceed_fraction: empty statistic set");
  std::int64_t count = 0;
  for (double s : stats) {
    if (s > threshold) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(stats.size());
}

struct FdbFromStats {
  double first_level_p;
  double quantile;  // 1 - p* empirical quantile of the second-level stats
  double p_value;
};

// Steps 3, 5 and 6 of the fast double bootstrap given the statistic values.
// The quantile is the ascending order statistic with 1-based index
// ceil((1 - p*) * B) clamped to [1, B]; with p* = c/B that index is B - c.
inline FdbFromStats fdb_p_from_stats(double f_obs, std::span<const double> first_level,
                                     std::span<const double> second_level) {
  const auto b = static_cast<std::int64_t>(first_level.size());
  if (b < 1 || static_cast<std::int64_t>(second_level.size()) != b)
    throw DimensionMismatch("fdb_p_from_stats: need B first-level and B second-level statistics");
  std::int64_t count = 0;
  for (double s : first_level) {
    if (s > f_obs) ++count;
  }
  std::vector<double> sorted(second_level.begin(), second_level.end());
  std::sort(sorted.begin(), sorted.end());
  const std::int64_t index = std::max<std::int64_t>(b - count, 1);
  const double quantile = sorted[static_cast<std::size_t>(index - 1)];
  FdbFromStats out;
  out.first_level_p = static_cast<double>(count) / static_cast<double>(b);
  out.quantile = quantile;
  out.p_value = exceed_fraction(quantile, first_level);
  return out;
}

// Step 6 of the full double bootstrap: fraction of second-level p-values
// strictly below the first-level p-value. Counts are compared in integer
// arithmetic so that exact ties never slip through.
inline double db_p_from_counts(std::int64_t first_count, std::int64_t b1,
                               std::span<const std::int64_t> second_counts, std::int64_t b2) {
  std::int64_t extreme = 0;
  for (std::int64_t c : second_counts) {
    if (c * b1 < first_count * b2) ++extreme;  // c/B2 < first_count/B1
  }
  return static_cast<double>(extreme) / static_cast<double>(b1);
}

// ---- full procedures -----------------------------------------------------

namespace detail {

struct EvalCounter {
  std::int64_t n = 0;
};

inline double counted_statistic(const ProjectionPair& pair, const Eigen::VectorXd& v,
                                EvalCounter& counter) {
  ++counter.n;
  return flc_statistic(pair, v);
}

inline void require_plan(const BootstrapPlan& plan) {
  if (plan.B < 1) throw DomainError("bootstrap plan: B must be >= 1");
  if (plan.variant == BootstrapVariant::DOUBLE && plan.B2 < 1)
    throw DomainError("bootstrap plan: B2 must be >= 1");
}

}  // namespace detail

// Single-level residual bootstraps (variants NULL_RESIDUAL, NONNULL_RESIDUAL,
// M_OUT_OF_N). p-value is #{F* > F_obs}/B with strict exceedance.
inline TestResult bootstrap_p(const DesignMatrices& design, const ProjectionPair& pair,
                              const BootstrapPlan& plan) {
  detail::require_plan(plan);
  if (plan.variant != BootstrapVariant::NULL_RESIDUAL &&
      plan.variant != BootstrapVariant::NONNULL_RESIDUAL &&
      plan.variant != BootstrapVariant::M_OUT_OF_N)
    throw DomainError("bootstrap_p: plan variant must be a single-level bootstrap");

  detail::EvalCounter evals;
  const double f_obs = detail::counted_statistic(pair, design.y, evals);

  const Eigen::VectorXd fitted = fitted_null(pair, design.y);
  double scale = 1.0;
  Eigen::VectorXd resid;
  if (plan.variant == BootstrapVariant::NONNULL_RESIDUAL) {
    resid = design.y - fitted_full(pair, design.y);
  } else {
    resid = design.y - fitted;
    if (plan.variant == BootstrapVariant::M_OUT_OF_N) {
      detail::require_m_in_range(plan.m, design.n_obs());
      scale = std::sqrt(static_cast<double>(design.n_obs()) / plan.m);
    }
  }

  RngStream first = RngStream::root(plan.seed).split(0);
  std::int64_t count = 0;
  for (int k = 0; k < plan.B; ++k) {
    RngStream s = first.split(static_cast<std::uint64_t>(k));
    const Eigen::VectorXd y_star = detail::resample_around(fitted, resid, scale, s);
    if (detail::counted_statistic(pair, y_star, evals) > f_obs) ++count;
  }

  TestResult r;
  r.statistic = f_obs;
  r.df_num = pair.df_num;
  r.df_den = pair.df_den;
  r.p_value = static_cast<double>(count) / static_cast<double>(plan.B);
  r.method = method_for(plan.variant);
  r.evaluations = evals.n;
  return r;
}

inline TestResult bootstrap_p(const DesignMatrices& design, const BootstrapPlan& plan) {
  return bootstrap_p(design, build_projection_pair(design), plan);
}

struct FdbOutcome {
  TestResult test;             // p_value is the fast double bootstrap p
  double first_level_p = 0.0;  // single-level bootstrap p
  double quantile = 0.0;       // second-level 1 - p* quantile
};

// Fast double bootstrap: one second-level resample per first-level sample,
// each refit to and resampled from that sample's own null fit.
inline FdbOutcome fast_double_bootstrap_detail(const DesignMatrices& design,
                                               const ProjectionPair& pair,
                                               const BootstrapPlan& plan) {
  detail::require_plan(plan);
  detail::EvalCounter evals;
  const double f_obs = detail::counted_statistic(pair, design.y, evals);

  const Eigen::VectorXd fitted = fitted_null(pair, design.y);
  const Eigen::VectorXd resid = design.y - fitted;

  const RngStream root = RngStream::root(plan.seed);
  const RngStream first = root.split(0);
  const RngStream second = root.split(1);

  std::vector<double> f_star(static_cast<std::size_t>(plan.B));
  std::vector<double> f_star2(static_cast<std::size_t>(plan.B));
  for (int k = 0; k < plan.B; ++k) {
    RngStream s1 = first.split(static_cast<std::uint64_t>(k));
    const Eigen::VectorXd y_star = detail::resample_around(fitted, resid, 1.0, s1);
    f_star[static_cast<std::size_t>(k)] = detail::counted_statistic(pair, y_star, evals);

    const Eigen::VectorXd fitted_star = fitted_null(pair, y_star);
    const Eigen::VectorXd resid_star = y_star - fitted_star;
    RngStream s2 = second.split(static_cast<std::uint64_t>(k));
    const Eigen::VectorXd y_star2 = detail::resample_around(fitted_star, resid_star, 1.0, s2);
    f_star2[static_cast<std::size_t>(k)] = detail::counted_statistic(pair, y_star2, evals);
  }

  const FdbFromStats stats = fdb_p_from_stats(f_obs, f_star, f_star2);

  FdbOutcome out;
  out.test.statistic = f_obs;
  out.test.df_num = pair.df_num;
  out.test.df_den = pair.df_den;
  out.test.p_value = stats.p_value;
  out.test.method = Method::FDB;
  out.test.evaluations = evals.n;
  out.first_level_p = stats.first_level_p;
  out.quantile = stats.quantile;
  return out;
}

inline TestResult fast_double_bootstrap(const DesignMatrices& design, const ProjectionPair& pair,
                                        const BootstrapPlan& plan) {
  return fast_double_bootstrap_detail(design, pair, plan).test;
}

inline TestResult fast_double_bootstrap(const DesignMatrices& design, const BootstrapPlan& plan) {
  return fast_double_bootstrap(design, build_projection_pair(design), plan);
}

// Full double bootstrap with B2 second-level resamples per first-level sample.
inline TestResult double_bootstrap(const DesignMatrices& design, const ProjectionPair& pair,
                                   const BootstrapPlan& plan) {
  detail::require_plan(plan);
  detail::EvalCounter evals;
  const double f_obs = detail::counted_statistic(pair, design.y, evals);

  const Eigen::VectorXd fitted = fitted_null(pair, design.y);
  const Eigen::VectorXd resid = design.y - fitted;

  const RngStream root = RngStream::root(plan.seed);
  const RngStream first = root.split(0);
  const RngStream second = root.split(1);

  std::int64_t first_count = 0;
  std::vector<std::int64_t> second_counts(static_cast<std::size_t>(plan.B), 0);
  for (int k = 0; k < plan.B; ++k) {
    RngStream s1 = first.split(static_cast<std::uint64_t>(k));
    const Eigen::VectorXd y_star = detail::resample_around(fitted, resid, 1.0, s1);
    const double f_star = detail::counted_statistic(pair, y_star, evals);
    if (f_star > f_obs) ++first_count;

    const Eigen::VectorXd fitted_star = fitted_null(pair, y_star);
    const Eigen::VectorXd resid_star = y_star - fitted_star;
    const RngStream second_k = second.split(static_cast<std::uint64_t>(k));
    std::int64_t count_k = 0;
    for (int l = 0; l < plan.B2; ++l) {
      RngStream s2 = second_k.split(static_cast<std::uint64_t>(l));
      const Eigen::VectorXd y_star2 = detail::resample_around(fitted_star, resid_star, 1.0, s2);
      if (detail::counted_statistic(pair, y_star2, evals) > f_star) ++count_k;
    }
    second_counts[static_cast<std::size_t>(k)] = count_k;
  }

  TestResult r;
  r.statistic = f_obs;
  r.df_num = pair.df_num;
  r.df_den = pair.df_den;
  r.p_value = db_p_from_counts(first_count, plan.B, second_counts, plan.B2);
  r.method = Method::DB;
  r.evaluations = evals.n;
  return r;
}

inline TestResult double_bootstrap(const DesignMatrices& design, const BootstrapPlan& plan) {
  return double_bootstrap(design, build_projection_pair(design), plan);
}

// Dispatch on the plan's variant.
inline TestResult run_bootstrap(const DesignMatrices& design, const ProjectionPair& pair,
                                const BootstrapPlan& plan) {
  switch (plan.variant) {
    case BootstrapVariant::FAST_DOUBLE: return fast_double_bootstrap(design, pair, plan);
    case BootstrapVariant::DOUBLE: return double_bootstrap(design, pair, plan);
    default: return bootstrap_p(design, pair, plan);
  }
}

}  // namespace flcboot
