#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tr/numerics.hpp"
#include "tr/rng.hpp"

using namespace tr;

namespace {

Matrix random_matrix(std::int64_t rows, std::int64_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::int64_t j = 0; j < cols; ++j) {
        for (std::int64_t i = 0; i < rows; ++i) m(i, j) = rng.normal_complex();
    }
    return m;
}

Matrix random_rank_k(std::int64_t rows, std::int64_t cols, std::int64_t k, Rng& rng) {
    return random_matrix(rows, k, rng) * random_matrix(k, cols, rng);
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("svd reconstructs and produces orthonormal factors") {
    Rng rng(1, "svd");
    for (int c = 0; c < 20; ++c) {
        const std::int64_t rows = rng.uniform_int(2, 8);
        const std::int64_t cols = rng.uniform_int(2, 8);
        const Matrix a = random_matrix(rows, cols, rng);
        const SvdResult s = svd(a);
        const std::int64_t k = std::min(rows, cols);
        REQUIRE(s.singular_values.size() == k);
        const Matrix rebuilt = s.u * s.singular_values.asDiagonal() * s.v.adjoint();
        CHECK(max_abs(rebuilt - a) < 1e-12 * (1.0 + max_abs(a)));
        CHECK(max_abs(s.u.adjoint() * s.u - Matrix::Identity(k, k)) < 1e-12);
        CHECK(max_abs(s.v.adjoint() * s.v - Matrix::Identity(k, k)) < 1e-12);
        for (std::int64_t i = 0; i + 1 < k; ++i) {
            CHECK(s.singular_values(i) >= s.singular_values(i + 1));
        }
        CHECK(s.singular_values(k - 1) >= 0.0);
    }
}

TEST_CASE("numerical_rank counts singular values above the relative cutoff") {
    Rng rng(2, "rank");
    for (int c = 0; c < 20; ++c) {
        const std::int64_t n = rng.uniform_int(3, 7);
        const std::int64_t k = rng.uniform_int(1, n);
        const Matrix a = random_rank_k(n, n, k, rng);
        CHECK(numerical_rank(svd(a), 1e-10) == k);
    }
    // A planted spectrum with a hard gap.
    Rng gap_rng(3, "gap");
    Matrix u = random_matrix(5, 5, gap_rng);
    const SvdResult qs = svd(u);
    Eigen::VectorXd vals(5);
    vals << 10.0, 1.0, 1e-3, 1e-9, 0.0;
    const Matrix planted = qs.u * vals.asDiagonal() * qs.v.adjoint();
    CHECK(numerical_rank(svd(planted), 1e-6) == 3);
    CHECK(numerical_rank(svd(planted), 1e-12) == 4);
}

TEST_CASE("eig returns residual-checked pairs with deterministic phases") {
    Rng rng(4, "eig");
    for (int c = 0; c < 20; ++c) {
        const std::int64_t n = rng.uniform_int(2, 8);
        const Matrix a = random_matrix(n, n, rng);
        const EigResult e = eig(a);
        REQUIRE(e.values.size() == n);
        const double scale = a.norm();
        for (std::int64_t i = 0; i < n; ++i) {
            const Vector v = e.vectors.col(i);
            CHECK((a * v - e.values(i) * v).norm() < 1e-8 * scale);
            CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
        }
        // Bitwise repeatability.
        const EigResult e2 = eig(a);
        CHECK(max_abs(e.vectors - e2.vectors) == 0.0);
        CHECK((e.values - e2.values).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("eig rejects non-square input") {
    CHECK_THROWS_AS(eig(Matrix::Zero(2, 3)), ValidationError);
}

TEST_CASE("pinv satisfies the four Penrose identities on rank-deficient input") {
    Rng rng(5, "penrose");
    for (int c = 0; c < 20; ++c) {
        const std::int64_t rows = rng.uniform_int(2, 7);
        const std::int64_t cols = rng.uniform_int(2, 7);
        const std::int64_t k = rng.uniform_int(1, std::min(rows, cols));
        const Matrix a = random_rank_k(rows, cols, k, rng);
        const Matrix p = pinv(a);
        REQUIRE(p.rows() == cols);
        REQUIRE(p.cols() == rows);
        const double scale = 1.0 + max_abs(a) + max_abs(p);
        CHECK(max_abs(a * p * a - a) < 1e-10 * scale);
        CHECK(max_abs(p * a * p - p) < 1e-10 * scale);
        CHECK(max_abs(Matrix(a * p) - Matrix((a * p).adjoint())) < 1e-10 * scale);
        CHECK(max_abs(Matrix(p * a) - Matrix((p * a).adjoint())) < 1e-10 * scale);
    }
}

TEST_CASE("pinv of an invertible matrix is its inverse") {
    Rng rng(6, "inv");
    const Matrix a = random_matrix(4, 4, rng) + 3.0 * Matrix::Identity(4, 4);
    CHECK(max_abs(pinv(a) * a - Matrix::Identity(4, 4)) < 1e-10);
}

TEST_CASE("solve_least_squares matches the normal-equations solution at full rank") {
    Rng rng(7, "lsq");
    for (int c = 0; c < 20; ++c) {
        const std::int64_t rows = rng.uniform_int(4, 9);
        const std::int64_t cols = rng.uniform_int(2, rows);
        const Matrix a = random_matrix(rows, cols, rng);
        const Matrix b = random_matrix(rows, 1, rng);
        const Matrix x = solve_least_squares(a, b);
        const Matrix normal = (a.adjoint() * a).ldlt().solve(a.adjoint() * b);
        CHECK(max_abs(x - normal) < 1e-9 * (1.0 + max_abs(normal)));
    }
}

TEST_CASE("solve_least_squares falls back to the minimum-norm solution under rank loss") {
    Rng rng(8, "lsqr");
    const std::int64_t rows = 6, cols = 4, k = 2;
    const Matrix a = random_rank_k(rows, cols, k, rng);
    const Matrix b = random_matrix(rows, 1, rng);
    const Matrix x = solve_least_squares(a, b);
    const Matrix expected = pinv(a) * b;
    CHECK(max_abs(x - expected) < 1e-9 * (1.0 + max_abs(expected)));
}

TEST_CASE("normalize_phase pins the leading significant entry to the positive real axis") {
    Rng rng(9, "phase");
    for (int c = 0; c < 20; ++c) {
        Vector v = Vector::Zero(5);
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal_complex();
        const Vector n = normalize_phase(v);
        CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(n(0).imag() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(n(0).real() >= 0.0);
        // Scaling by any phase and magnitude yields the same representative.
        const Vector m = normalize_phase(Vector(std::polar(3.7, 1.234) * v));
        CHECK(max_abs(n - m) < 1e-12);
    }
    const Vector zero = normalize_phase(Vector::Zero(3));
    CHECK(zero.norm() == 0.0);
}

TEST_CASE("strict_inverse inverts well-conditioned matrices and rejects singular ones") {
    Rng rng(10, "strict");
    const Matrix a = random_matrix(4, 4, rng) + 2.0 * Matrix::Identity(4, 4);
    CHECK(max_abs(strict_inverse(a) * a - Matrix::Identity(4, 4)) < 1e-10);

    Matrix singular = random_rank_k(4, 4, 2, rng);
    CHECK_THROWS_AS(strict_inverse(singular), RankDeficientError);
    CHECK_THROWS_AS(strict_inverse(Matrix::Zero(3, 3)), RankDeficientError);
    CHECK_THROWS_AS(strict_inverse(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("strict_inverse error message names the caller") {
    try {
        strict_inverse(Matrix::Zero(2, 2), 1e-12, "gauge_block");
        FAIL("expected RankDeficientError");
    } catch (const RankDeficientError& e) {
        CHECK(std::string(e.what()).find("gauge_block") != std::string::npos);
    }
}
