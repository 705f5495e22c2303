#include "tr/numerics.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace tr {

SvdResult svd(const Matrix& a) {
    // Jacobi is the more accurate option and these matrices are small; BDC
    // takes over for larger blocks.
    SvdResult out;
    if (a.rows() * a.cols() <= 64 * 64) {
        Eigen::JacobiSVD<Matrix> s(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (s.info() != Eigen::Success) throw NumericalError("svd: decomposition failed");
        out.u = s.matrixU();
        out.singular_values = s.singularValues();
        out.v = s.matrixV();
        return out;
    }
    Eigen::BDCSVD<Matrix> s(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (s.info() != Eigen::Success) throw NumericalError("svd: decomposition failed");
    out.u = s.matrixU();
    out.singular_values = s.singularValues();
    out.v = s.matrixV();
    return out;
}

std::int64_t numerical_rank(const SvdResult& s, double rel_tol) {
    if (s.singular_values.size() == 0) return 0;
    const double cutoff = rel_tol * s.singular_values(0);
    std::int64_t rank = 0;
    for (Eigen::Index i = 0; i < s.singular_values.size(); ++i) {
        if (s.singular_values(i) > cutoff) ++rank;
    }
    return rank;
}

Vector normalize_phase(Vector v) {
    const double nrm = v.norm();
    if (nrm == 0.0) return v;
    v /= nrm;
    double max_abs = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) max_abs = std::max(max_abs, std::abs(v(i)));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-12 * max_abs) {
            const Complex phase = v(i) / std::abs(v(i));
            v *= std::conj(phase);
            break;
        }
    }
    return v;
}

EigResult eig(const Matrix& a, const ToleranceConfig& cfg) {
    if (a.rows() != a.cols()) throw DimensionError("eig: matrix must be square");
    Eigen::ComplexEigenSolver<Matrix> solver(a, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success) throw NumericalError("eig: solver failed to converge");
    EigResult out;
    out.values = solver.eigenvalues();
    out.vectors = solver.eigenvectors();
    const double scale = a.norm();
    for (Eigen::Index i = 0; i < out.values.size(); ++i) {
        out.vectors.col(i) = normalize_phase(out.vectors.col(i));
        const double resid = (a * out.vectors.col(i) - out.values(i) * out.vectors.col(i)).norm();
        if (scale > 0.0 && resid > cfg.eig_residual_tol * scale) {
            throw NumericalError("eig: eigenpair residual " + std::to_string(resid / scale) +
                                 " exceeds tolerance");
        }
    }
    return out;
}

Matrix pinv(const Matrix& a, double rel_tol) {
    const SvdResult s = svd(a);
    if (s.singular_values.size() == 0) return Matrix::Zero(a.cols(), a.rows());
    const double cutoff = rel_tol * s.singular_values(0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.singular_values.size());
    for (Eigen::Index i = 0; i < s.singular_values.size(); ++i) {
        if (s.singular_values(i) > cutoff) inv(i) = 1.0 / s.singular_values(i);
    }
    return s.v * inv.asDiagonal() * s.u.adjoint();
}

Matrix solve_least_squares(const Matrix& a, const Matrix& b, double rel_tol) {
    if (a.rows() != b.rows()) {
        throw DimensionError("solve_least_squares: incompatible shapes");
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    qr.setThreshold(rel_tol);
    if (qr.rank() == a.cols()) {
        return qr.solve(b);
    }
    // Rank-deficient: return the minimum-norm least-squares solution.
    return pinv(a, rel_tol) * b;
}

Matrix strict_inverse(const Matrix& a, double rel_tol, const char* who) {
    if (a.rows() != a.cols()) throw DimensionError(std::string(who) + ": matrix must be square");
    Eigen::FullPivLU<Matrix> lu(a);
    lu.setThreshold(rel_tol);
    if (!lu.isInvertible()) {
        throw RankDeficientError(std::string(who) + ": matrix is numerically singular");
    }
    return lu.inverse();
}

}  // namespace tr
