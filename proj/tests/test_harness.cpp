#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tr/harness.hpp"
#include "tr/ring.hpp"

using namespace tr;

namespace {

bool all_real(const DenseTensor& t) {
    for (const Complex& x : t.data())
        if (x.imag() != 0.0) return false;
    return true;
}

bool rings_identical(const RingDecomposition& a, const RingDecomposition& b) {
    if (a.order() != b.order() || a.rank() != b.rank()) return false;
    for (std::int64_t k = 0; k < a.order(); ++k)
        if (a.core(k).data() != b.core(k).data()) return false;
    return true;
}

}  // namespace

TEST_CASE("random_ring draws reproducibly and validates its arguments") {
    Rng a(7, "cores");
    Rng b(7, "cores");
    const RingDecomposition ra = random_ring({4, 3, 5}, 2, a, 10.0);
    const RingDecomposition rb = random_ring({4, 3, 5}, 2, b, 10.0);
    CHECK(rings_identical(ra, rb));
    for (std::int64_t k = 0; k < 3; ++k) CHECK(all_real(ra.core(k)));

    Rng c(7, "cores");
    const RingDecomposition rc = random_ring({4, 3, 5}, 2, c, 10.0, true);
    bool saw_imag = false;
    for (const Complex& x : rc.core(0).data()) saw_imag = saw_imag || x.imag() != 0.0;
    CHECK(saw_imag);

    Rng bad(0, "cores");
    CHECK_THROWS_AS(random_ring({}, 2, bad), ValidationError);
    CHECK_THROWS_AS(random_ring({4, 4}, 0, bad), ValidationError);
    CHECK_THROWS_AS(random_ring({4, 4}, kMaxRank + 1, bad), ValidationError);
    CHECK_THROWS_AS(random_ring({4, 0, 4}, 2, bad), ValidationError);
}

TEST_CASE("generate_instance is bit-exact reproducible and seed-sensitive") {
    TrialSpec spec;
    spec.dims = {5, 4, 6};
    spec.rank = 2;
    spec.seed = 11;
    spec.sigma_noise = 0.5;

    const Instance one = generate_instance(spec);
    const Instance two = generate_instance(spec);
    CHECK(tensor_hash(one.tensor) == tensor_hash(two.tensor));
    CHECK(rings_identical(one.truth, two.truth));
    CHECK(one.clean_norm == two.clean_norm);

    TrialSpec other = spec;
    other.seed = 12;
    CHECK(tensor_hash(generate_instance(other).tensor) != tensor_hash(one.tensor));
}

TEST_CASE("instances separate signal from noise") {
    TrialSpec spec;
    spec.dims = {4, 4, 4};
    spec.rank = 2;
    spec.seed = 3;

    const Instance clean = generate_instance(spec);
    const DenseTensor reference = ring_reconstruct(clean.truth);
    CHECK(clean.clean_norm == doctest::Approx(reference.frobenius_norm()).epsilon(1e-12));
    CHECK(tensor_hash(clean.tensor) == tensor_hash(reference));
    CHECK(all_real(clean.tensor));

    TrialSpec noisy_spec = spec;
    noisy_spec.sigma_noise = 1.0;
    const Instance noisy = generate_instance(noisy_spec);
    // Same truth stream, different tensor; noise on real instances stays real.
    CHECK(rings_identical(noisy.truth, clean.truth));
    CHECK(noisy.clean_norm == clean.clean_norm);
    CHECK(tensor_hash(noisy.tensor) != tensor_hash(clean.tensor));
    CHECK(all_real(noisy.tensor));

    TrialSpec complex_spec = noisy_spec;
    complex_spec.complex_entries = true;
    CHECK_FALSE(all_real(generate_instance(complex_spec).tensor));
}

TEST_CASE("tensor_hash reacts to single-entry changes") {
    DenseTensor t(Dims{3, 3});
    for (std::int64_t e = 0; e < t.size(); ++e) t[e] = Complex(static_cast<double>(e), 0.0);
    const std::uint64_t base = tensor_hash(t);
    t[4] += Complex(0.0, 1e-300);
    CHECK(tensor_hash(t) != base);
}

TEST_CASE("format_dims uses the x-separated CLI form") {
    CHECK(format_dims({12, 5, 6, 7, 10}) == "12x5x6x7x10");
    CHECK(format_dims({7}) == "7");
}

TEST_CASE("the default accuracy study covers both routes") {
    const std::vector<AccuracyRow> rows = default_accuracy_rows();
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].dims == Dims{12, 5, 6, 7, 10});
    CHECK(rows[0].rank == 3);
    bool has_rank4 = false;
    for (const AccuracyRow& row : rows) {
        CHECK(row.seeds == 20);
        // Every non-contracted row keeps all modes workable at its rank.
        if (row.rank == 4) {
            has_rank4 = true;
            CHECK(row.dims == Dims{20, 20, 20, 20, 20});
        }
    }
    CHECK(has_rank4);
}

TEST_CASE("accuracy rows report per-seed errors and medians") {
    AccuracyRow row;
    row.dims = {5, 5, 5};
    row.rank = 2;
    row.seeds = 3;
    const AccuracyResult res = run_accuracy_row(row);
    REQUIRE(res.rel_errors.size() == 3);
    REQUIRE(res.abs_errors.size() == 3);
    CHECK(res.failures == 0);
    CHECK(res.median_rel < 1e-8);
    CHECK(res.max_rel >= res.median_rel);
    CHECK(res.median_abs >= 0.0);
    CHECK(res.seconds > 0.0);
    for (double e : res.rel_errors) CHECK(std::isfinite(e));
}

TEST_CASE("the paired comparison runs both arms on the identical tensor") {
    ComparisonConfig cfg;
    cfg.dims = {6, 6, 6};
    cfg.ranks = {2};
    cfg.seeds = 2;
    cfg.sweeps = 2;
    cfg.sigma_noise = 0.5;

    const std::vector<ComparisonTrial> trials = run_comparison(cfg);
    REQUIRE(trials.size() == 2);
    for (std::size_t s = 0; s < trials.size(); ++s) {
        const ComparisonTrial& t = trials[s];
        CHECK(t.rank == 2);
        CHECK(t.seed == s);
        CHECK(t.hash != 0);
        CHECK(t.monotone);
        CHECK(std::isfinite(t.spectral_rel));
        CHECK(std::isfinite(t.random_rel));
        CHECK(t.spectral_wins == (t.spectral_rel < t.random_rel));
        // The hash pins the arms to one instance: regenerating from the same
        // spec reproduces it.
        TrialSpec spec;
        spec.dims = cfg.dims;
        spec.rank = t.rank;
        spec.seed = t.seed;
        spec.sigma_signal = cfg.sigma_signal;
        spec.sigma_noise = cfg.sigma_noise;
        CHECK(tensor_hash(generate_instance(spec).tensor) == t.hash);
    }

    // The study itself is deterministic, down to the CSV bytes.
    const std::vector<ComparisonTrial> again = run_comparison(cfg);
    REQUIRE(again.size() == trials.size());
    std::ostringstream csv_a, csv_b;
    write_comparison_csv(csv_a, trials, {{"dims", format_dims(cfg.dims)}});
    write_comparison_csv(csv_b, again, {{"dims", format_dims(cfg.dims)}});
    CHECK(csv_a.str() == csv_b.str());
    CHECK(csv_a.str().rfind("# dims=6x6x6\n", 0) == 0);

    CHECK_THROWS_AS(run_comparison(ComparisonConfig{{4, 4, 4}, {2}, 0}), ValidationError);
}

TEST_CASE("the success grid saturates without noise and collapses under it") {
    SuccessGridConfig cfg;
    cfg.dims = {5, 5, 5};
    cfg.rank = 2;
    cfg.noise_levels = {0.0, 1e3};
    cfg.trials = 2;
    cfg.sweeps = 2;

    const std::vector<SuccessCell> cells = run_success_grid(cfg);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].sigma_noise == 0.0);
    CHECK(cells[0].trials == 2);
    CHECK(cells[0].successes == 2);
    CHECK(cells[0].fraction == 1.0);
    CHECK(cells[1].sigma_noise == 1e3);
    CHECK(cells[1].successes == 0);
    CHECK(cells[1].fraction == 0.0);

    std::ostringstream csv;
    write_success_csv(csv, cells);
    CHECK(csv.str().rfind("sigma_noise,trials,successes,fraction\n", 0) == 0);
}

TEST_CASE("write_csv emits metadata, header, and validated rows") {
    std::ostringstream out;
    write_csv(out, {{"kind", "demo"}, {"n", "2"}}, {"a", "b"}, {{"1", "2"}, {"3", "4"}});
    CHECK(out.str() == "# kind=demo\n# n=2\na,b\n1,2\n3,4\n");

    std::ostringstream bad;
    CHECK_THROWS_AS(write_csv(bad, {}, {"a", "b"}, {{"only one"}}), ValidationError);
}

TEST_CASE("the study CSV headers stay pinned") {
    std::ostringstream acc;
    write_accuracy_csv(acc, {});
    CHECK(acc.str() ==
          "dims,rank,seeds,failures,median_rel,max_rel,median_abs,max_abs,seconds\n");

    std::ostringstream cmp;
    write_comparison_csv(cmp, {});
    CHECK(cmp.str() ==
          "rank,seed,tensor_hash,spectral_rel,random_rel,spectral_clean,random_clean,"
          "spectral_wins,monotone\n");

    std::ostringstream suc;
    write_success_csv(suc, {});
    CHECK(suc.str() == "sigma_noise,trials,successes,fraction\n");
}
