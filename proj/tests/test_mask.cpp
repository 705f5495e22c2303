#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tr/harness.hpp"
#include "tr/index_ops.hpp"
#include "tr/probes.hpp"
#include "tr/rng.hpp"

using namespace tr;

namespace {

DenseTensor random_tensor(const Dims& dims, Rng& rng) {
    DenseTensor t(dims);
    for (Complex& x : t.data()) x = rng.normal_complex();
    return t;
}

}  // namespace

TEST_CASE("SampleMask records entries, families and slots") {
    SampleMask mask({3, 3});
    const std::uint32_t fam_a = mask.add_family("alpha");
    const std::uint32_t fam_b = mask.add_family("beta");
    CHECK(mask.family_count() == 2);
    CHECK(mask.family_name(fam_a) == "alpha");
    CHECK(mask.family_name(fam_b) == "beta");

    const std::int64_t slot0 = mask.add(MultiIndex{0, 0}, fam_a);
    const std::int64_t slot1 = mask.add(MultiIndex{1, 2}, fam_b);
    CHECK(mask.size() == 2);
    CHECK(slot0 == 0);
    CHECK(slot1 == 1);
    CHECK(mask.contains(linear_index({3, 3}, {0, 0})));
    CHECK(mask.contains(linear_index({3, 3}, {1, 2})));
    CHECK(!mask.contains(linear_index({3, 3}, {2, 2})));
    CHECK(mask.slot_of(linear_index({3, 3}, {1, 2})) == slot1);
    CHECK(mask.slot_of(linear_index({3, 3}, {2, 2})) == -1);
    CHECK(mask.family_of_slot(slot0) == fam_a);
    CHECK(mask.family_of_slot(slot1) == fam_b);

    // Duplicate insert keeps the first family and does not grow the mask.
    const std::int64_t again = mask.add(MultiIndex{0, 0}, fam_b);
    CHECK(again == slot0);
    CHECK(mask.size() == 2);
    CHECK(mask.family_of_slot(slot0) == fam_a);
}

TEST_CASE("SampleMask::without drops exactly one entry") {
    SampleMask mask({2, 2});
    const std::uint32_t fam = mask.add_family("f");
    for (std::int64_t linear = 0; linear < 4; ++linear) mask.add(linear, fam);
    const SampleMask reduced = mask.without(2);
    CHECK(reduced.size() == 3);
    CHECK(!reduced.contains(2));
    CHECK(reduced.contains(0));
    CHECK(reduced.contains(1));
    CHECK(reduced.contains(3));
    // The original is untouched.
    CHECK(mask.size() == 4);
    CHECK(mask.contains(2));
}

TEST_CASE("MaskedTensorView forwards observable reads and rejects the rest") {
    Rng rng(1, "mask");
    const Dims dims{3, 4, 2};
    const DenseTensor t = random_tensor(dims, rng);
    SampleMask mask(dims);
    const std::uint32_t fam = mask.add_family("subset");
    mask.add(MultiIndex{0, 0, 0}, fam);
    mask.add(MultiIndex{2, 3, 1}, fam);
    mask.add(MultiIndex{1, 2, 0}, fam);

    const MaskedTensorView view(t, mask);
    CHECK(view.dims() == dims);
    CHECK(view.at({0, 0, 0}) == t.at({0, 0, 0}));
    CHECK(view.at({2, 3, 1}) == t.at({2, 3, 1}));
    CHECK_THROWS_AS(view.at({1, 1, 1}), MaskViolationError);
    // A rejected read leaves the telemetry unchanged.
    CHECK(view.touched_count() == 2);
    CHECK(view.touched(linear_index(dims, {0, 0, 0})));
    CHECK(!view.touched(linear_index(dims, {1, 2, 0})));
    // Re-reading the same entry does not double-count.
    CHECK(view.at({0, 0, 0}) == t.at({0, 0, 0}));
    CHECK(view.touched_count() == 2);
    CHECK(view.at({1, 2, 0}) == t.at({1, 2, 0}));
    CHECK(view.touched_count() == 3);
}

TEST_CASE("MaskViolationError names the offending index") {
    Rng rng(2, "mask");
    const Dims dims{2, 2};
    const DenseTensor t = random_tensor(dims, rng);
    SampleMask mask(dims);
    mask.add_family("f");
    const MaskedTensorView view(t, mask);
    try {
        view.at({1, 0});
        FAIL("expected MaskViolationError");
    } catch (const MaskViolationError& e) {
        const std::string what = e.what();
        CHECK(what.find("1") != std::string::npos);
    }
}

TEST_CASE("CyclicEquivalenceView answers any rotation of an observable index") {
    // A shared-core ring tensor is invariant under cyclic index rotation, so
    // the view may legitimately serve a rotated read from the stored entry.
    Rng rng(3, "cores");
    const std::int64_t d = 4, n = 3;
    const RingDecomposition proto = random_ring(Dims(d, n), 2, rng, 1.0, true);
    std::vector<DenseTensor> same(static_cast<std::size_t>(d), proto.core(0));
    const RingDecomposition shared(std::move(same));
    const DenseTensor t = ring_reconstruct(shared);

    SampleMask mask(t.dims());
    const std::uint32_t fam = mask.add_family("stored");
    const MultiIndex stored{1, 2, 0, 1};
    mask.add(stored, fam);
    const MaskedTensorView masked(t, mask);
    const CyclicEquivalenceView view(masked);
    CHECK(view.dims() == t.dims());

    const Complex expected = t.at(stored);
    // Every rotation of the stored index resolves to the stored entry.
    for (std::int64_t s = 0; s < d; ++s) {
        MultiIndex rotated(static_cast<std::size_t>(d));
        for (std::int64_t p = 0; p < d; ++p) {
            rotated[static_cast<std::size_t>(p)] = stored[static_cast<std::size_t>((p + s) % d)];
        }
        CHECK(std::abs(view.at(rotated) - expected) < 1e-12);
    }
    CHECK_THROWS_AS(view.at({0, 0, 0, 0}), MaskViolationError);
}

TEST_CASE("the exact pipeline's observation plan covers every read it performs") {
    // Builds the observable set for the default plan, runs the masked
    // pipeline, and checks it consumed only (and strictly fewer) entries.
    Rng rng(4, "cores");
    const Dims dims{5, 5, 5, 5};
    const std::int64_t r = 2;
    const RingDecomposition truth = random_ring(dims, r, rng, 1.0, true);
    const DenseTensor t = ring_reconstruct(truth);

    const ProbeConfig probes = default_probe_config(dims, r);
    const SampleMask mask = build_sample_mask(dims, r, probes);
    CHECK(mask.size() < t.size());

    const MaskedTensorView view(t, mask);
    DecomposeConfig cfg;
    cfg.rank = r;
    cfg.probes = probes;
    const DecomposeResult result = decompose_exact(view, cfg);
    CHECK(result.residual < 1e-8);
    CHECK(view.touched_count() <= mask.size());
    CHECK(view.touched_count() > 0);
}

TEST_CASE("full_mask marks every entry and bounds huge requests") {
    const Dims dims{3, 2, 4};
    const SampleMask mask = full_mask(dims);
    CHECK(mask.size() == dims_product(dims));
    for (std::int64_t linear = 0; linear < mask.size(); ++linear) {
        CHECK(mask.contains(linear));
    }
    CHECK_THROWS_AS(full_mask(Dims{4096, 4096, 4096}), MemoryBoundError);
}
