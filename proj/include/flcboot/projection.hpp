#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <optional>

#include "flcboot/errors.hpp"

namespace flcboot {

// Response and designs for one linear mixed model instance.
//
// Z is partitioned column-wise: the first r0 columns (Z0) carry the random
// effects kept under the null, the remaining r - r0 columns are under test.
struct DesignMatrices {
  Eigen::VectorXd y;  // N
  Eigen::MatrixXd X;  // N x p
  Eigen::MatrixXd Z;  // N x r
  int r0 = 0;         // untested leading columns of Z, 0 <= r0 < r

  Eigen::Index n_obs() const { return y.size(); }
};

inline void validate(const DesignMatrices& d) {
  const Eigen::Index n = d.y.size();
  if (n <= 0) throw DomainError("design: empty response");
  if (d.X.rows() != n || d.Z.rows() != n)
    throw DimensionMismatch("design: X/Z row count differs from length of y");
  if (d.Z.cols() < 1) throw DomainError("design: Z must have at least one column");
  if (d.r0 < 0 || d.r0 >= d.Z.cols())
    throw DomainError("design: r0 must satisfy 0 <= r0 < cols(Z)");
  if (!d.y.allFinite() || !d.X.allFinite() || !d.Z.allFinite())
    throw DomainError("design: non-finite entries");
}

// Orthonormal bases for span(X, Z0) and span(X, Z) plus the rank bookkeeping
// the F statistic needs. Immutable once built; O(N * cols) storage, never an
// N x N projector. For any v, ||(I - P)v||^2 is evaluated through the basis.
struct ProjectionPair {
  Eigen::Index n_obs = 0;
  int rank_null = 0;  // rk(X, Z0)
  int rank_full = 0;  // rk(X, Z)
  int df_num = 0;     // rank_full - rank_null
  int df_den = 0;     // N - rank_full
  Eigen::MatrixXd basis_null;  // N x rank_null, orthonormal columns
  Eigen::MatrixXd basis_full;  // N x rank_full, orthonormal columns
};

namespace detail {

// Thin orthonormal basis of span(A) by Householder QR with column pivoting.
// A diagonal entry of R counts toward the rank iff |R_ii| > tol * max|R_jj|.
inline Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& A, double rel_tol, int* rank_out) {
  const Eigen::Index n = A.rows();
  if (A.cols() == 0) {
    *rank_out = 0;
    return Eigen::MatrixXd(n, 0);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::Index diag = std::min(n, A.cols());
  const auto rdiag = qr.matrixQR().diagonal().head(diag);
  const double rmax = rdiag.cwiseAbs().maxCoeff();
  int rank = 0;
  if (rmax > 0.0) {
    const double cut = rel_tol * rmax;
    for (Eigen::Index i = 0; i < diag; ++i) {
      if (std::abs(rdiag(i)) > cut) ++rank;
    }
  }
  *rank_out = rank;
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, rank);
  q.applyOnTheLeft(qr.householderQ());
  return q;
}

inline double default_rank_tol(Eigen::Index n, Eigen::Index cols) {
  return static_cast<double>(std::max(n, cols)) * std::numeric_limits<double>::epsilon();
}

}  // namespace detail

// Factorize the null design (X, Z0) and the full design (X, Z).
// Throws DegenerateDesign when the tested block adds no rank or the full
// design saturates all N degrees of freedom.
inline ProjectionPair build_projection_pair(const DesignMatrices& d,
                                            std::optional<double> rank_tol = std::nullopt) {
  validate(d);
  const Eigen::Index n = d.n_obs();
  const Eigen::Index p = d.X.cols();

  Eigen::MatrixXd null_design(n, p + d.r0);
  null_design << d.X, d.Z.leftCols(d.r0);
  Eigen::MatrixXd full_design(n, p + d.Z.cols());
  full_design << d.X, d.Z;

  ProjectionPair pair;
  pair.n_obs = n;
  const double tol_null = rank_tol.value_or(detail::default_rank_tol(n, null_design.cols()));
  const double tol_full = rank_tol.value_or(detail::default_rank_tol(n, full_design.cols()));
  pair.basis_null = detail::orthonormal_basis(null_design, tol_null, &pair.rank_null);
  pair.basis_full = detail::orthonormal_basis(full_design, tol_full, &pair.rank_full);
  pair.df_num = pair.rank_full - pair.rank_null;
  pair.df_den = static_cast<int>(n) - pair.rank_full;

  if (pair.df_num < 1)
    throw DegenerateDesign("tested columns add no rank beyond the null design");
  if (pair.df_den < 1) throw DegenerateDesign("full design is saturated: N - rk(X,Z) = 0");
  return pair;
}

namespace detail {

inline void check_length(const ProjectionPair& pair, const Eigen::VectorXd& v) {
  if (v.size() != pair.n_obs) throw DimensionMismatch("vector length differs from design rows");
}

inline double rss_against(const Eigen::MatrixXd& basis, const Eigen::VectorXd& v) {
  if (basis.cols() == 0) return v.squaredNorm();
  // Explicit residual v - Q(Q^T v): accurate even when v is nearly in span,
  // where the ||v||^2 - ||Q^T v||^2 form would cancel catastrophically.
  Eigen::VectorXd r = v - basis * (basis.transpose() * v);
  return r.squaredNorm();
}

}  // namespace detail

// ||(I - P_{X,Z0}) v||^2
inline double rss_null(const ProjectionPair& pair, const Eigen::VectorXd& v) {
  detail::check_length(pair, v);
  return detail::rss_against(pair.basis_null, v);
}

// ||(I - P_{X,Z}) v||^2
inline double rss_full(const ProjectionPair& pair, const Eigen::VectorXd& v) {
  detail::check_length(pair, v);
  return detail::rss_against(pair.basis_full, v);
}

// Least-squares projection of v onto span(X, Z0); the null fitted values.
inline Eigen::VectorXd fitted_null(const ProjectionPair& pair, const Eigen::VectorXd& v) {
  detail::check_length(pair, v);
  if (pair.basis_null.cols() == 0) return Eigen::VectorXd::Zero(pair.n_obs);
  return pair.basis_null * (pair.basis_null.transpose() * v);
}

inline Eigen::VectorXd fitted_null(const ProjectionPair& pair, const DesignMatrices& d) {
  return fitted_null(pair, d.y);
}

// Projection onto span(X, Z); used by the non-null residual bootstrap.
inline Eigen::VectorXd fitted_full(const ProjectionPair& pair, const Eigen::VectorXd& v) {
  detail::check_length(pair, v);
  return pair.basis_full * (pair.basis_full.transpose() * v);
}

}  // namespace flcboot
