#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "tr/harness.hpp"
#include "tr/mps.hpp"

using namespace tr;

namespace {

RingDecomposition make_state(const Dims& dims, std::int64_t r, std::uint64_t seed) {
    Rng rng(seed, "cores");
    return random_ring(dims, r, rng, 1.0, true);
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("state_norm_squared matches the dense norm") {
    const RingDecomposition state = make_state({3, 4, 3, 2}, 2, 1);
    const DenseTensor psi = ring_reconstruct(state);
    const double dense = psi.frobenius_norm();
    CHECK(state_norm_squared(state) == doctest::Approx(dense * dense).epsilon(1e-12));
}

TEST_CASE("simulated marginals equal dense marginals for every site triple") {
    const Dims dims{3, 2, 3, 2};
    const RingDecomposition state = make_state(dims, 2, 2);
    const DenseTensor psi = ring_reconstruct(state);
    const double norm_sq = state_norm_squared(state);
    for (std::int64_t a = 0; a < 4; ++a) {
        for (std::int64_t b = a + 1; b < 4; ++b) {
            for (std::int64_t c = b + 1; c < 4; ++c) {
                const MarginalTensor sim = simulate_marginal(state, {a, b, c});
                const MarginalTensor dense = dense_marginal(psi, {a, b, c});
                REQUIRE(sim.sites == dense.sites);
                REQUIRE(sim.site_dims == dense.site_dims);
                REQUIRE(sim.rho.rows() == dense.rho.rows());
                CHECK(max_abs(sim.rho - dense.rho) < 1e-12 * (1.0 + max_abs(dense.rho)));
                // Density-matrix structure: Hermitian, PSD, trace = |psi|^2.
                CHECK(max_abs(sim.rho - sim.rho.adjoint()) < 1e-12);
                Eigen::SelfAdjointEigenSolver<Matrix> es(sim.rho);
                CHECK(es.eigenvalues().minCoeff() > -1e-10 * norm_sq);
                CHECK(std::abs(sim.trace() - Complex(norm_sq, 0.0)) < 1e-10 * norm_sq);
            }
        }
    }
}

TEST_CASE("simulate_marginal accepts unsorted sites and normalizes them") {
    const RingDecomposition state = make_state({3, 3, 3, 3}, 2, 3);
    const MarginalTensor a = simulate_marginal(state, {2, 0, 3});
    const MarginalTensor b = simulate_marginal(state, {0, 2, 3});
    CHECK(a.sites == b.sites);
    CHECK(max_abs(a.rho - b.rho) == 0.0);
}

TEST_CASE("serial and parallel marginal simulation agree") {
    const RingDecomposition state = make_state({4, 3, 4, 3}, 2, 4);
    const MarginalTensor p = simulate_marginal(state, {0, 1, 3}, Exec::parallel);
    const MarginalTensor s = simulate_marginal(state, {0, 1, 3}, Exec::serial);
    CHECK(max_abs(p.rho - s.rho) == 0.0);
}

TEST_CASE("site validation rejects bad triples") {
    const RingDecomposition state = make_state({3, 3, 3}, 2, 5);
    CHECK_THROWS_AS(simulate_marginal(state, {0, 0, 1}), ValidationError);
    CHECK_THROWS_AS(simulate_marginal(state, {0, 1, 3}), ValidationError);
    CHECK_THROWS_AS(simulate_marginal(make_state({3, 3}, 1, 6), {0, 1, 1}), DimensionError);
}

TEST_CASE("extract_probe_matrix matches a brute-force contraction of the marginal") {
    const Dims dims{3, 4, 2, 3};
    const RingDecomposition state = make_state(dims, 2, 7);
    const DenseTensor psi = ring_reconstruct(state);
    // Sites sorted ascending; roles: j = 1, k = 3, h = 0.
    const std::int64_t j = 1, k = 3, h = 0;
    const MarginalTensor rho = dense_marginal(psi, {h, j, k});
    Rng rng(8, "selector");
    Vector v(dims[static_cast<std::size_t>(h)]);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal_complex();

    const Matrix m = extract_probe_matrix(rho, j, k, h, v);
    REQUIRE(m.rows() == dims[static_cast<std::size_t>(k)]);
    REQUIRE(m.cols() == dims[static_cast<std::size_t>(j)]);

    // Brute force over the packed density-matrix entries. The packing is
    // column-major over the ascending sites (h, j, k), first site fastest.
    const std::int64_t nh = dims[static_cast<std::size_t>(h)];
    const std::int64_t nj = dims[static_cast<std::size_t>(j)];
    const std::int64_t nk = dims[static_cast<std::size_t>(k)];
    for (std::int64_t ak = 0; ak < nk; ++ak) {
        for (std::int64_t aj = 0; aj < nj; ++aj) {
            Complex expected(0.0, 0.0);
            for (std::int64_t ah = 0; ah < nh; ++ah) {
                for (std::int64_t ahp = 0; ahp < nh; ++ahp) {
                    const std::int64_t row = ah + aj * nh + ak * nh * nj;
                    const std::int64_t col = ahp;  // a'_j = a'_k = 0
                    expected += v(ah) * std::conj(v(ahp)) * rho.rho(row, col);
                }
            }
            CHECK(std::abs(m(ak, aj) - expected) < 1e-12 * (1.0 + std::abs(expected)));
        }
    }
}

TEST_CASE("probe extraction is invariant under selector phase and scale normalization") {
    const Dims dims{3, 4, 2, 3};
    const RingDecomposition state = make_state(dims, 2, 9);
    const MarginalTensor rho = simulate_marginal(state, {0, 1, 3});
    Rng rng(10, "selector");
    Vector v(3);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal_complex();
    const Matrix base = extract_probe_matrix(rho, 1, 3, 0, v);
    const Matrix phased = extract_probe_matrix(rho, 1, 3, 0, Vector(std::polar(1.0, 0.7) * v));
    CHECK(max_abs(base - phased) < 1e-12 * (1.0 + max_abs(base)));
    // Scaling the selector scales the matrix quadratically; the scale
    // argument compensates.
    const Matrix doubled = extract_probe_matrix(rho, 1, 3, 0, Vector(2.0 * v), 4.0);
    CHECK(max_abs(base - doubled) < 1e-12 * (1.0 + max_abs(base)));
}

TEST_CASE("extract_probe_matrix validates roles and coverage") {
    const RingDecomposition state = make_state({3, 3, 3, 3}, 2, 11);
    const MarginalTensor rho = simulate_marginal(state, {0, 1, 2});
    Vector v = Vector::Ones(3);
    CHECK_THROWS_AS(extract_probe_matrix(rho, 1, 1, 0, v), ValidationError);
    CHECK_THROWS_AS(extract_probe_matrix(rho, 1, 3, 0, v), ValidationError);  // 3 not covered
    CHECK_THROWS_AS(extract_probe_matrix(rho, 1, 2, 0, Vector::Ones(2)), DimensionError);
    CHECK_THROWS_AS(extract_probe_matrix(rho, 1, 2, 0, v, 0.0), ValidationError);
}

TEST_CASE("marginal sources cache by site triple") {
    SimulatedMarginalSource source(make_state({3, 3, 3, 3}, 2, 12));
    const MarginalTensor& a = source.marginal({0, 1, 2});
    const MarginalTensor& b = source.marginal({0, 1, 2});
    CHECK(&a == &b);
    CHECK(source.order() == 4);
    CHECK(source.site_dims() == Dims{3, 3, 3, 3});
}

TEST_CASE("full recovery from three-site marginals matches the state up to one scalar") {
    for (const std::int64_t d : {3, 4}) {
        const std::int64_t r = 2;
        const Dims dims(static_cast<std::size_t>(d), r * r + 1);
        const RingDecomposition state = make_state(dims, r, 100 + static_cast<std::uint64_t>(d));
        SimulatedMarginalSource source(state);
        MpsConfig cfg;
        cfg.rank = r;
        const MpsRecovery rec = mps_recover(source, cfg);
        const DenseTensor reference = ring_reconstruct(state);
        const DenseTensor recovered = ring_reconstruct(rec.ring);
        const DispersionResult disp = ratio_dispersion(reference, recovered);
        CHECK(disp.dispersion < 1e-6);
        CHECK(std::abs(disp.scale) > 0.0);
    }
}

TEST_CASE("recovery consumes only three-site marginals (no direct state access)") {
    // A source wrapper that counts requests and hides everything else.
    class CountingSource : public MarginalSource {
    public:
        explicit CountingSource(RingDecomposition state) : inner_(std::move(state)) {}
        std::int64_t order() const override { return inner_.order(); }
        Dims site_dims() const override { return inner_.site_dims(); }
        const MarginalTensor& marginal(std::array<std::int64_t, 3> sites) override {
            ++requests;
            return inner_.marginal(sites);
        }
        int requests = 0;

    private:
        SimulatedMarginalSource inner_;
    };

    const RingDecomposition state = make_state({5, 5, 5, 5}, 2, 13);
    CountingSource source(state);
    MpsConfig cfg;
    cfg.rank = 2;
    const MpsRecovery rec = mps_recover(source, cfg);
    CHECK(source.requests > 0);
    const DispersionResult disp =
        ratio_dispersion(ring_reconstruct(state), ring_reconstruct(rec.ring));
    CHECK(disp.dispersion < 1e-6);
}

TEST_CASE("ratio_dispersion reports the least-squares scale and spread") {
    const RingDecomposition state = make_state({3, 3, 3}, 2, 14);
    const DenseTensor psi = ring_reconstruct(state);

    // Identical states.
    const DispersionResult same = ratio_dispersion(psi, psi);
    CHECK(std::abs(same.scale - Complex(1.0, 0.0)) < 1e-12);
    CHECK(same.dispersion < 1e-12);

    // A global complex factor is recovered exactly.
    const Complex factor(2.5, -1.25);
    DenseTensor scaled = psi;
    for (Complex& x : scaled.data()) x *= factor;
    const DispersionResult prop = ratio_dispersion(psi, scaled);
    CHECK(std::abs(prop.scale - factor) < 1e-12 * std::abs(factor));
    CHECK(prop.dispersion < 1e-12);

    // A perturbation shows up as positive dispersion.
    DenseTensor perturbed = scaled;
    perturbed.data()[3] += Complex(0.05, 0.0);
    CHECK(ratio_dispersion(psi, perturbed).dispersion > 1e-4);

    // Degenerate inputs: a shape mismatch is reported before anything else,
    // and an identically-zero reference has no usable ratios.
    CHECK_THROWS_AS(ratio_dispersion(psi, DenseTensor(Dims{2, 2, 2})), DimensionError);
    CHECK_THROWS_AS(ratio_dispersion(DenseTensor(psi.dims()), psi), NumericalError);
}

TEST_CASE("mps_recover validates shapes") {
    MpsConfig cfg;
    cfg.rank = 2;
    SimulatedMarginalSource small(make_state({3, 5, 5}, 2, 15));
    CHECK_THROWS_AS(mps_recover(small, cfg), DimensionTooSmallError);
    cfg.rank = 0;
    SimulatedMarginalSource ok(make_state({5, 5, 5}, 2, 16));
    CHECK_THROWS_AS(mps_recover(ok, cfg), ValidationError);
}
