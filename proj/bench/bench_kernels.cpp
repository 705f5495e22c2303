// Serial-vs-parallel comparison of the data-parallel kernels. The serial
// variants are the reference implementations the tests pin the parallel ones
// against; this target measures what the OpenMP paths actually buy.
#include <benchmark/benchmark.h>

#include "tr/harness.hpp"
#include "tr/mps.hpp"
#include "tr/ring.hpp"
#include "tr/robust.hpp"

using namespace tr;

namespace {

RingDecomposition make_ring(const Dims& dims, std::int64_t r, std::uint64_t seed) {
    Rng rng(seed, "cores");
    return random_ring(dims, r, rng, 1.0, false);
}

const RingDecomposition& reconstruct_fixture() {
    static const RingDecomposition ring = make_ring({20, 20, 20, 20}, 3, 1);
    return ring;
}

struct ErrorFixture {
    RingDecomposition ring = make_ring({20, 20, 20, 20}, 3, 2);
    DenseTensor tensor = ring_reconstruct(ring);
};

const ErrorFixture& error_fixture() {
    static const ErrorFixture f;
    return f;
}

struct SweepFixture {
    Dims dims{20, 20, 20};
    RingDecomposition truth = make_ring(dims, 3, 3);
    DenseTensor tensor = ring_reconstruct(truth);
    SampleMask mask = full_mask(dims);
    RingDecomposition init = make_ring(dims, 3, 4);
};

const SweepFixture& sweep_fixture() {
    static const SweepFixture f;
    return f;
}

const RingDecomposition& marginal_fixture() {
    static const RingDecomposition state = [] {
        Rng rng(5, "cores");
        return random_ring({9, 9, 9, 9}, 2, rng, 1.0, true);
    }();
    return state;
}

void bench_reconstruct(benchmark::State& state, Exec exec) {
    const RingDecomposition& ring = reconstruct_fixture();
    std::int64_t entries = 0;
    for (auto _ : state) {
        DenseTensor t = ring_reconstruct(ring, exec);
        benchmark::DoNotOptimize(t.data().data());
        entries += t.size();
    }
    state.SetItemsProcessed(entries);
}

void bench_relative_error(benchmark::State& state, Exec exec) {
    const ErrorFixture& f = error_fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ring_relative_error(f.tensor, f.ring, exec));
    }
    state.SetItemsProcessed(state.iterations() * f.tensor.size());
}

void bench_als_sweep(benchmark::State& state, Exec exec) {
    const SweepFixture& f = sweep_fixture();
    for (auto _ : state) {
        state.PauseTiming();
        RingDecomposition ring = f.init;
        state.ResumeTiming();
        masked_als_sweep(f.tensor, f.mask, ring, exec);
        benchmark::DoNotOptimize(ring.core(0).data().data());
    }
    state.SetItemsProcessed(state.iterations() * f.mask.size());
}

void bench_marginal(benchmark::State& state, Exec exec) {
    const RingDecomposition& ring = marginal_fixture();
    for (auto _ : state) {
        MarginalTensor m = simulate_marginal(ring, {0, 1, 3}, exec);
        benchmark::DoNotOptimize(m.rho.data());
    }
}

void BM_reconstruct_serial(benchmark::State& s) { bench_reconstruct(s, Exec::serial); }
void BM_reconstruct_parallel(benchmark::State& s) { bench_reconstruct(s, Exec::parallel); }
void BM_relative_error_serial(benchmark::State& s) { bench_relative_error(s, Exec::serial); }
void BM_relative_error_parallel(benchmark::State& s) { bench_relative_error(s, Exec::parallel); }
void BM_als_sweep_serial(benchmark::State& s) { bench_als_sweep(s, Exec::serial); }
void BM_als_sweep_parallel(benchmark::State& s) { bench_als_sweep(s, Exec::parallel); }
void BM_marginal_serial(benchmark::State& s) { bench_marginal(s, Exec::serial); }
void BM_marginal_parallel(benchmark::State& s) { bench_marginal(s, Exec::parallel); }

BENCHMARK(BM_reconstruct_serial);
BENCHMARK(BM_reconstruct_parallel);
BENCHMARK(BM_relative_error_serial);
BENCHMARK(BM_relative_error_parallel);
BENCHMARK(BM_als_sweep_serial);
BENCHMARK(BM_als_sweep_parallel);
BENCHMARK(BM_marginal_serial);
BENCHMARK(BM_marginal_parallel);

}  // namespace

BENCHMARK_MAIN();
