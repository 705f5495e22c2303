#pragma once

#include "tr/tensor.hpp"

namespace tr {

/** Shared numerical tolerances.
 *  - pinv_rel_tol: singular values below pinv_rel_tol * sigma_max are treated
 *    as zero by the pseudo-inverse (1e-10 for exact-arithmetic pipelines,
 *    1e-8 recommended under noise).
 *  - eig_residual_tol: maximum accepted relative eigenpair residual
 *    ||A v - lambda v|| / ||A||.
 *  - spectral_gap_min: minimum relative separation (against the spectral
 *    radius) between probe eigenvalue clusters; probes below it are redrawn. */
struct ToleranceConfig {
    double pinv_rel_tol = 1e-10;
    double eig_residual_tol = 1e-8;
    double spectral_gap_min = 1e-4;
};

/** Thin singular value decomposition A = u * diag(singular_values) * v^H. */
struct SvdResult {
    Matrix u;
    Eigen::VectorXd singular_values;
    Matrix v;
};

SvdResult svd(const Matrix& a);

/** Number of singular values above rel_tol * sigma_max. */
std::int64_t numerical_rank(const SvdResult& s, double rel_tol);

/** Eigendecomposition A * vectors.col(i) = values(i) * vectors.col(i). Each
 *  eigenvector is normalized to unit 2-norm with its first significant entry
 *  rotated onto the positive real axis, making the basis deterministic up to
 *  the solver's ordering. Throws NumericalError when a residual exceeds
 *  cfg.eig_residual_tol * ||A||_F. */
struct EigResult {
    Vector values;
    Matrix vectors;
};

EigResult eig(const Matrix& a, const ToleranceConfig& cfg = {});

/** Moore-Penrose pseudo-inverse with relative singular-value cutoff. */
Matrix pinv(const Matrix& a, double rel_tol = 1e-10);

/** Least-squares solve min ||A x - b||_2 by column-pivoted QR; falls back to
 *  the minimum-norm pseudo-inverse solution when A is numerically
 *  rank-deficient at rel_tol. */
Matrix solve_least_squares(const Matrix& a, const Matrix& b, double rel_tol = 1e-10);

/** Unit-norm vector with the first entry of magnitude above
 *  1e-12 * max|v_i| rotated to be real positive. */
Vector normalize_phase(Vector v);

/** True inverse of a square matrix; throws RankDeficientError when the matrix
 *  is numerically singular at rel_tol (no pseudo-inverse fallback). */
Matrix strict_inverse(const Matrix& a, double rel_tol = 1e-12, const char* who = "strict_inverse");

}  // namespace tr
