#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

#include "flcboot/errors.hpp"
#include "flcboot/rng.hpp"

namespace flcboot {

// Error families used in the simulation designs. Every tag draws iid variates
// with mean 0 and variance 1 before the sigma scaling, so cov(eps) = sigma^2 I.
enum class ErrorTag { NORMAL, STUDENT_T3, CHISQ3_CENTERED, TWO_COMP_MIXTURE };

struct ErrorDistribution {
  ErrorTag tag = ErrorTag::NORMAL;
  double sigma = 1.0;
};

inline const char* error_tag_name(ErrorTag t) {
  switch (t) {
    case ErrorTag::NORMAL: return "normal";
    case ErrorTag::STUDENT_T3: return "student";
    case ErrorTag::CHISQ3_CENTERED: return "chisq";
    case ErrorTag::TWO_COMP_MIXTURE: return "2cmm";
  }
  return "?";
}

namespace detail {

inline double chi_squared_3(RngStream& rng) {
  const double a = rng.next_normal();
  const double b = rng.next_normal();
  const double c = rng.next_normal();
  return a * a + b * b + c * c;
}

// t with 3 df scaled to unit variance (t3 variance is 3).
inline double standardized_t3(RngStream& rng) {
  const double z = rng.next_normal();
  return z / std::sqrt(chi_squared_3(rng) / 3.0) / std::sqrt(3.0);
}

// chi^2_3 shifted to mean 0 and scaled to unit variance (variance 2k = 6).
inline double standardized_chisq3(RngStream& rng) {
  return (chi_squared_3(rng) - 3.0) / std::sqrt(6.0);
}

// Two-component contamination mixture: 20% of draws come from a component
// with 9x the core variance; core variance 1/2.6 makes the mixture unit.
inline double standardized_mixture(RngStream& rng) {
  constexpr double core_sd = 0.62017367294604225;  // sqrt(1/2.6)
  const double sd = rng.next_double() < 0.2 ? 3.0 * core_sd : core_sd;
  return sd * rng.next_normal();
}

}  // namespace detail

inline Eigen::VectorXd draw_error_vector(const ErrorDistribution& dist, Eigen::Index n,
                                         RngStream& rng) {
  if (n < 1) throw DomainError("draw_error_vector: N must be >= 1");
  if (!(dist.sigma > 0.0)) throw DomainError("draw_error_vector: sigma must be > 0");
  Eigen::VectorXd out(n);
  switch (dist.tag) {
    case ErrorTag::NORMAL:
      for (Eigen::Index i = 0; i < n; ++i) out(i) = rng.next_normal();
      break;
    case ErrorTag::STUDENT_T3:
      for (Eigen::Index i = 0; i < n; ++i) out(i) = detail::standardized_t3(rng);
      break;
    case ErrorTag::CHISQ3_CENTERED:
      for (Eigen::Index i = 0; i < n; ++i) out(i) = detail::standardized_chisq3(rng);
      break;
    case ErrorTag::TWO_COMP_MIXTURE:
      for (Eigen::Index i = 0; i < n; ++i) out(i) = detail::standardized_mixture(rng);
      break;
  }
  if (dist.sigma != 1.0) out *= dist.sigma;
  return out;
}

// Rows iid N(0, D) for symmetric PSD D. A symmetric eigendecomposition with
// zero-clamping of small negative eigenvalues keeps singular D (for example
// D = 0 under the null) usable; genuinely indefinite D is rejected.
inline Eigen::MatrixXd draw_mvnormal(const Eigen::MatrixXd& D, Eigen::Index count,
                                     RngStream& rng) {
  if (D.rows() != D.cols()) throw DimensionMismatch("draw_mvnormal: D must be square");
  if (count < 0) throw DomainError("draw_mvnormal: count must be >= 0");
  const Eigen::Index k = D.rows();
  if (!D.isApprox(D.transpose(), 1e-12)) throw NotPsd("draw_mvnormal: D is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
  Eigen::VectorXd lambda = es.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  const double tol = 1e-10 * scale;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (lambda(i) < -tol) throw NotPsd("draw_mvnormal: D has a negative eigenvalue");
    if (lambda(i) < 0.0) lambda(i) = 0.0;
  }
  const Eigen::MatrixXd factor = es.eigenvectors() * lambda.cwiseSqrt().asDiagonal();

  Eigen::MatrixXd z(count, k);
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index j = 0; j < k; ++j) z(i, j) = rng.next_normal();
  return z * factor.transpose();
}

// One Wishart(df, scale) draw by the Bartlett decomposition; integer df >= k,
// scale positive definite. The result is exactly symmetric.
inline Eigen::MatrixXd draw_wishart(int df, const Eigen::MatrixXd& scale, RngStream& rng) {
  if (scale.rows() != scale.cols()) throw DimensionMismatch("draw_wishart: scale must be square");
  const Eigen::Index k = scale.rows();
  if (df < k) throw DomainError("draw_wishart: df must be >= dimension");

  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw NotPsd("draw_wishart: scale is not positive definite");

  Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double chi = 0.0;
    for (int t = 0; t < df - static_cast<int>(i); ++t) {
      const double z = rng.next_normal();
      chi += z * z;
    }
    bartlett(i, i) = std::sqrt(chi);
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = rng.next_normal();
  }

  const Eigen::MatrixXd half = llt.matrixL() * bartlett;
  Eigen::MatrixXd w(k, k);
  w.triangularView<Eigen::Lower>() = half * half.transpose();
  w = w.selfadjointView<Eigen::Lower>();
  return w;
}

}  // namespace flcboot
