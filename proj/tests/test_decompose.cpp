#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tr/decompose.hpp"
#include "tr/harness.hpp"
#include "tr/index_ops.hpp"

using namespace tr;

namespace {

RingDecomposition make_truth(const Dims& dims, std::int64_t r, std::uint64_t seed,
                             bool complex_entries = true) {
    Rng rng(seed, "cores");
    return random_ring(dims, r, rng, 1.0, complex_entries);
}

}  // namespace

TEST_CASE("order-2 decomposition reproduces the tensor exactly") {
    for (const std::int64_t r : {1, 2, 3}) {
        const Dims dims{r * r + 3, r * r + 1};
        const RingDecomposition truth = make_truth(dims, r, 17);
        const DenseTensor t = ring_reconstruct(truth);
        const RingDecomposition rec = decompose_order2(t, r);
        CHECK(rec.order() == 2);
        CHECK(rec.rank() == r);
        CHECK(ring_relative_error(t, rec) < 1e-10);
    }
}

TEST_CASE("order-2 decomposition pads spare bond capacity for low-rank input") {
    // Matrix rank 2 fits inside r*r = 4 with room to spare.
    const Dims dims{6, 5};
    const RingDecomposition truth = make_truth(dims, 1, 3);
    DenseTensor t = ring_reconstruct(truth);
    const RingDecomposition extra = make_truth(dims, 1, 4);
    const DenseTensor t2 = ring_reconstruct(extra);
    for (std::size_t i = 0; i < t.data().size(); ++i) t.data()[i] += t2.data()[i];
    const RingDecomposition rec = decompose_order2(t, 2);
    CHECK(ring_relative_error(t, rec) < 1e-10);
}

TEST_CASE("order-2 decomposition rejects rank above r*r") {
    Rng rng(5, "dense");
    DenseTensor t(Dims{5, 5});
    for (Complex& x : t.data()) x = rng.normal_complex();  // full rank 5 > 2*2
    CHECK_THROWS_AS(decompose_order2(t, 2), RankDeficientError);
}

TEST_CASE("exact pipeline recovers order-3..5 tensors at machine precision") {
    for (const std::int64_t d : {3, 4, 5}) {
        for (const std::int64_t r : {2, 3}) {
            const Dims dims(static_cast<std::size_t>(d), r * r + 1);
            const RingDecomposition truth = make_truth(dims, r, static_cast<std::uint64_t>(d));
            const DenseTensor t = ring_reconstruct(truth);
            DecomposeConfig cfg;
            cfg.rank = r;
            const DecomposeResult res = decompose_exact(t, cfg);
            CHECK(res.residual < 1e-9);
            CHECK(ring_relative_error(t, res.ring) < 1e-9);
            CHECK(res.ring.order() == d);
            CHECK(res.ring.rank() == r);
        }
    }
}

TEST_CASE("exact pipeline works on real-valued tensors") {
    const Dims dims{5, 5, 5, 5};
    const RingDecomposition truth = make_truth(dims, 2, 11, false);
    const DenseTensor t = ring_reconstruct(truth);
    DecomposeConfig cfg;
    cfg.rank = 2;
    const DecomposeResult res = decompose_exact(t, cfg);
    CHECK(res.residual < 1e-8);
}

TEST_CASE("recovered trailing cores carry identity companion slices") {
    // The sequential recovery pins every companion slice after the second to
    // the identity, so the full companion-slice product collapses to the
    // first two factors; this gauge is what the shared-core pipeline builds
    // on.
    for (const std::int64_t d : {3, 4, 5}) {
        const Dims dims(static_cast<std::size_t>(d), 5);
        const std::int64_t r = 2;
        const RingDecomposition truth = make_truth(dims, r, 23);
        const DenseTensor t = ring_reconstruct(truth);
        DecomposeConfig cfg;
        cfg.rank = r;
        const DecomposeResult res = decompose_exact(t, cfg);
        const MultiIndex& companion = res.probes.companion;
        for (std::int64_t k = 2; k < d; ++k) {
            const Matrix slice = res.ring.slice(k, companion[static_cast<std::size_t>(k)]);
            CHECK((slice - Matrix::Identity(r, r)).cwiseAbs().maxCoeff() < 1e-8);
        }
        Matrix full = res.ring.slice(0, companion[0]);
        for (std::int64_t k = 1; k < d; ++k)
            full = full * res.ring.slice(k, companion[static_cast<std::size_t>(k)]);
        const Matrix two = res.ring.slice(0, companion[0]) * res.ring.slice(1, companion[1]);
        CHECK((full - two).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + full.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("a pinned probe plan is honored and reported back") {
    const Dims dims{5, 6, 5};
    const std::int64_t r = 2;
    const RingDecomposition truth = make_truth(dims, r, 29);
    const DenseTensor t = ring_reconstruct(truth);
    Rng rng(67, "probes");
    const ProbeConfig plan = random_probe_config(dims, r, rng);
    DecomposeConfig cfg;
    cfg.rank = r;
    cfg.probes = plan;
    const DecomposeResult res = decompose_exact(t, cfg);
    CHECK(res.retries == 0);
    CHECK(res.residual < 1e-8);
    CHECK(res.probes.pair_a.first == plan.pair_a.first);
    CHECK(res.probes.pair_b.second == plan.pair_b.second);
}

TEST_CASE("truncated probe assembly matches exact probes on noiseless data") {
    const Dims dims{5, 5, 5};
    const std::int64_t r = 2;
    const RingDecomposition truth = make_truth(dims, r, 31);
    const DenseTensor t = ring_reconstruct(truth);
    DecomposeConfig cfg;
    cfg.rank = r;
    DecomposeConfig trunc = cfg;
    trunc.truncated_probes = true;
    const DecomposeResult a = decompose_exact(t, cfg);
    const DecomposeResult b = decompose_exact(t, trunc);
    CHECK(a.residual < 1e-9);
    CHECK(b.residual < 1e-9);
    CHECK(ring_relative_error(a.ring, b.ring) < 1e-8);
}

TEST_CASE("contraction_plan rotates the longest large run to the front") {
    // r = 2, r*r = 4: sizes below 4 must be merged.
    const ContractionPlan plan = contraction_plan({2, 5, 6, 3, 2}, 2);
    // The longest cyclic run of sizes >= 4 is (5, 6) starting at mode 1.
    CHECK(plan.rotation == 1);
    CHECK(plan.kept == 2);
    REQUIRE(plan.contracted_dims.size() == 3);
    CHECK(plan.contracted_dims[0] == 5);
    CHECK(plan.contracted_dims[1] == 6);
    CHECK(plan.contracted_dims[2] == 2 * 3 * 2);
    CHECK(plan.merged_modes == std::vector<std::int64_t>{3, 4, 0});

    // All modes large: no-op plan.
    const ContractionPlan noop = contraction_plan({4, 5, 6}, 2);
    CHECK(noop.rotation == 0);
    CHECK(noop.kept == 3);

    // No two adjacent large modes: no valid start.
    CHECK_THROWS_AS(contraction_plan({5, 2, 5, 2}, 2), NoValidStartError);
    // Merged total below r*r.
    CHECK_THROWS_AS(contraction_plan({5, 5, 3}, 2), NoValidStartError);
}

TEST_CASE("contracted route recovers mixed-size tensors") {
    const Dims dims{3, 5, 6, 7, 2};
    const std::int64_t r = 2;
    const RingDecomposition truth = make_truth(dims, r, 37);
    const DenseTensor t = ring_reconstruct(truth);
    DecomposeConfig cfg;
    cfg.rank = r;
    const DecomposeResult res = decompose_with_contraction(t, cfg);
    CHECK(res.residual < 1e-8);
    CHECK(ring_relative_error(t, res.ring) < 1e-8);
    CHECK(res.ring.order() == 5);
    CHECK(res.ring.mode_dims() == dims);
    CHECK(!res.contracted_modes.empty());
}

TEST_CASE("decompose_auto dispatches by shape") {
    DecomposeConfig cfg;
    cfg.rank = 2;

    // Order 2.
    {
        const Dims dims{5, 6};
        const DenseTensor t = ring_reconstruct(make_truth(dims, 2, 41));
        const DecomposeResult res = decompose_auto(t, cfg);
        CHECK(res.ring.order() == 2);
        CHECK(ring_relative_error(t, res.ring) < 1e-9);
    }
    // All modes large: direct route, no rotation.
    {
        const Dims dims{5, 5, 5};
        const DenseTensor t = ring_reconstruct(make_truth(dims, 2, 43));
        const DecomposeResult res = decompose_auto(t, cfg);
        CHECK(res.rotation == 0);
        CHECK(res.contracted_modes.empty());
        CHECK(res.residual < 1e-9);
    }
    // Small modes present: contracted route.
    {
        const Dims dims{2, 5, 5, 3};
        const DenseTensor t = ring_reconstruct(make_truth(dims, 2, 47));
        const DecomposeResult res = decompose_auto(t, cfg);
        CHECK(!res.contracted_modes.empty());
        CHECK(res.residual < 1e-8);
        CHECK(res.ring.mode_dims() == dims);
    }
}

TEST_CASE("masked decomposition touches only the declared observation set") {
    const Dims dims{5, 5, 5, 5};
    const std::int64_t r = 2;
    const RingDecomposition truth = make_truth(dims, r, 53);
    const DenseTensor t = ring_reconstruct(truth);
    const ProbeConfig probes = default_probe_config(dims, r);
    const SampleMask mask = build_sample_mask(dims, r, probes);
    const MaskedTensorView view(t, mask);
    DecomposeConfig cfg;
    cfg.rank = r;
    cfg.probes = probes;
    const DecomposeResult res = decompose_exact(view, cfg);
    CHECK(res.residual < 1e-8);
    // Verification residual is masked, but the ring also matches everywhere.
    CHECK(ring_relative_error(t, res.ring) < 1e-8);
}

TEST_CASE("removing one touched mask entry makes the masked run fail loudly") {
    const Dims dims{4, 4, 4};
    const std::int64_t r = 2;
    const RingDecomposition truth = make_truth(dims, r, 59);
    const DenseTensor t = ring_reconstruct(truth);
    const ProbeConfig probes = default_probe_config(dims, r);
    const SampleMask mask = build_sample_mask(dims, r, probes);

    // First pass records which entries the pipeline actually consumed.
    const MaskedTensorView probe_view(t, mask);
    DecomposeConfig cfg;
    cfg.rank = r;
    cfg.probes = probes;
    (void)decompose_exact(probe_view, cfg);
    std::int64_t touched_linear = -1;
    for (std::int64_t slot = 0; slot < mask.size(); ++slot) {
        if (probe_view.touched(mask.entry_at(slot))) {
            touched_linear = mask.entry_at(slot);
            break;
        }
    }
    REQUIRE(touched_linear >= 0);

    const MaskedTensorView broken_view(t, mask.without(touched_linear));
    CHECK_THROWS_AS(decompose_exact(broken_view, cfg), MaskViolationError);
}

TEST_CASE("contracted masked run stays inside build_refined_sample_mask") {
    const Dims dims{3, 5, 5, 2};
    const std::int64_t r = 2;
    const RingDecomposition truth = make_truth(dims, r, 61);
    const DenseTensor t = ring_reconstruct(truth);
    const ContractionPlan plan = contraction_plan(dims, r);
    const ProbeConfig probes = default_probe_config(plan.contracted_dims, r);
    const SampleMask mask = build_refined_sample_mask(dims, r, probes);
    CHECK(mask.size() < t.size());
    const MaskedTensorView view(t, mask);
    DecomposeConfig cfg;
    cfg.rank = r;
    cfg.probes = probes;
    const DecomposeResult res = decompose_with_contraction(view, cfg);
    CHECK(res.residual < 1e-8);
    CHECK(ring_relative_error(t, res.ring) < 1e-8);
}

TEST_CASE("rank-1 tensors decompose through every route") {
    DecomposeConfig cfg;
    cfg.rank = 1;
    const Dims dims{3, 4, 2, 3};
    const DenseTensor t = ring_reconstruct(make_truth(dims, 1, 67));
    const DecomposeResult res = decompose_auto(t, cfg);
    CHECK(res.residual < 1e-10);
    CHECK(res.ring.rank() == 1);
}

TEST_CASE("shape validation rejects undersized modes and bad ranks") {
    const DenseTensor t(Dims{3, 3, 3});
    DecomposeConfig cfg;
    cfg.rank = 2;  // needs modes >= 4
    CHECK_THROWS_AS(decompose_exact(t, cfg), DimensionTooSmallError);
    cfg.rank = 0;
    CHECK_THROWS_AS(decompose_exact(t, cfg), ValidationError);
    cfg.rank = kMaxRank + 1;
    CHECK_THROWS_AS(decompose_exact(t, cfg), ValidationError);
}

TEST_CASE("retry accounting: pinned plans fail fast, free plans redraw") {
    // A tensor of actual bond rank 3 cannot be decomposed at rank 2: with a
    // pinned plan the numerical failure surfaces directly; with redraws the
    // budget is spent and RetriesExhaustedError wraps the last failure.
    const Dims dims{5, 5, 5};
    const RingDecomposition truth = make_truth(dims, 3, 71);
    const DenseTensor t = ring_reconstruct(truth);

    DecomposeConfig pinned;
    pinned.rank = 2;
    pinned.probes = default_probe_config(dims, 2);
    pinned.retry_budget = 5;
    bool pinned_threw_plain = false;
    try {
        decompose_exact(t, pinned);
    } catch (const RetriesExhaustedError&) {
        pinned_threw_plain = false;
    } catch (const NumericalError&) {
        pinned_threw_plain = true;
    }
    CHECK(pinned_threw_plain);

    DecomposeConfig free_plan;
    free_plan.rank = 2;
    free_plan.retry_budget = 3;
    CHECK_THROWS_AS(decompose_exact(t, free_plan), RetriesExhaustedError);
}
