#include "tr/robust.hpp"

#include <atomic>
#include <exception>
#include <limits>
#include <string>
#include <utility>

namespace tr {

SampleMask full_mask(const Dims& dims) {
    const std::int64_t total = dims_product(dims);
    const std::int64_t budget = std::int64_t(1) << 24;
    if (total > budget)
        throw MemoryBoundError("full_mask: " + std::to_string(total) +
                               " entries exceed the mask budget of " + std::to_string(budget));
    SampleMask mask(dims);
    const std::uint32_t family = mask.add_family("full");
    for (std::int64_t linear = 0; linear < total; ++linear) mask.add(linear, family);
    return mask;
}

DecomposeResult robust_initialize(const TensorAccessor& t, const RobustConfig& cfg) {
    DecomposeConfig inner;
    inner.rank = cfg.rank;
    inner.seed = cfg.seed;
    inner.retry_budget = cfg.retry_budget;
    inner.cluster_method = ClusterMethod::balanced;
    inner.kmeans_restarts = cfg.kmeans_restarts;
    inner.truncated_probes = true;
    inner.verify = false;
    inner.probes = cfg.probes;
    inner.tolerances = cfg.tolerances;
    return decompose_auto(t, inner);
}

void masked_als_sweep(const TensorAccessor& t, const SampleMask& mask, RingDecomposition& ring,
                      Exec exec) {
    const Dims& dims = t.dims();
    if (mask.dims() != dims)
        throw DimensionError("masked_als_sweep: mask and tensor shapes differ");
    if (ring.mode_dims() != dims)
        throw DimensionError("masked_als_sweep: decomposition and tensor shapes differ");
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    const std::int64_t r = ring.rank();
    const std::int64_t rr = r * r;
    const std::int64_t slots = mask.size();

    // Entry coordinates and values are read once up front so the sweep's hot
    // loops never pay for virtual accessor dispatch or mask lookups.
    std::vector<MultiIndex> entries(static_cast<std::size_t>(slots));
    Vector values(slots);
    for (std::int64_t slot = 0; slot < slots; ++slot) {
        entries[static_cast<std::size_t>(slot)] = unravel_index(dims, mask.entry_at(slot));
        values(slot) = t.at(entries[static_cast<std::size_t>(slot)]);
    }

    for (std::int64_t m = 0; m < d; ++m) {
        const std::int64_t n = dims[static_cast<std::size_t>(m)];
        std::vector<std::vector<std::int64_t>> rows(static_cast<std::size_t>(n));
        for (std::int64_t slot = 0; slot < slots; ++slot)
            rows[static_cast<std::size_t>(
                     entries[static_cast<std::size_t>(slot)][static_cast<std::size_t>(m)])]
                .push_back(slot);

        // Snapshot of the current slices; updates land in `ring` and are
        // picked up when the next mode rebuilds the snapshot (mode updates
        // are sequential, row updates within a mode are independent).
        std::vector<std::vector<Matrix>> slices(static_cast<std::size_t>(d));
        for (std::int64_t k = 0; k < d; ++k) {
            slices[static_cast<std::size_t>(k)].resize(
                static_cast<std::size_t>(dims[static_cast<std::size_t>(k)]));
            for (std::int64_t a = 0; a < dims[static_cast<std::size_t>(k)]; ++a)
                slices[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] =
                    ring.slice(k, a);
        }

        const auto solve_row = [&](std::int64_t a) {
            const std::vector<std::int64_t>& list = rows[static_cast<std::size_t>(a)];
            if (list.empty()) return;
            const std::int64_t count = static_cast<std::int64_t>(list.size());
            Matrix lhs(count, rr);
            Vector rhs(count);
            for (std::int64_t e = 0; e < count; ++e) {
                const MultiIndex& idx = entries[static_cast<std::size_t>(
                    list[static_cast<std::size_t>(e)])];
                // Product of the other slices in ring order; the entry value
                // is tr(Q_m^(a) * P), linear in Q_m^(a).
                Matrix p = Matrix::Identity(r, r);
                for (std::int64_t off = 1; off < d; ++off) {
                    const std::int64_t q = (m + off) % d;
                    p = p * slices[static_cast<std::size_t>(q)][static_cast<std::size_t>(
                            idx[static_cast<std::size_t>(q)])];
                }
                for (std::int64_t j = 0; j < r; ++j)
                    for (std::int64_t i = 0; i < r; ++i) lhs(e, i + j * r) = p(j, i);
                rhs(e) = values(list[static_cast<std::size_t>(e)]);
            }
            const Matrix x = solve_least_squares(lhs, rhs);
            Matrix s(r, r);
            for (std::int64_t j = 0; j < r; ++j)
                for (std::int64_t i = 0; i < r; ++i) s(i, j) = x(i + j * r, 0);
            ring.set_slice(m, a, s);
        };

        bool ran_parallel = false;
        if (exec == Exec::parallel) {
#ifdef _OPENMP
            // Rows write disjoint slices, so the only shared state is the
            // exception capture.
            std::atomic<bool> failed{false};
            std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
            for (std::int64_t a = 0; a < n; ++a) {
                if (failed.load(std::memory_order_relaxed)) continue;
                try {
                    solve_row(a);
                } catch (...) {
#pragma omp critical(tr_masked_als_sweep)
                    {
                        if (!failed.load(std::memory_order_relaxed)) {
                            error = std::current_exception();
                            failed.store(true, std::memory_order_relaxed);
                        }
                    }
                }
            }
            if (failed.load()) std::rethrow_exception(error);
            ran_parallel = true;
#endif
        }
        if (!ran_parallel)
            for (std::int64_t a = 0; a < n; ++a) solve_row(a);
    }
}

RobustResult decompose_robust(const TensorAccessor& t, const SampleMask& mask,
                              const RobustConfig& cfg, std::optional<RingDecomposition> init) {
    const Dims& dims = t.dims();
    if (mask.dims() != dims)
        throw DimensionError("decompose_robust: mask and tensor shapes differ");
    if (mask.size() == 0)
        throw ValidationError("decompose_robust: the mask is empty; nothing to fit");
    if (cfg.max_sweeps < 0)
        throw ValidationError("decompose_robust: max_sweeps must be nonnegative");
    if (!(cfg.epsilon_rel >= 0.0))
        throw ValidationError("decompose_robust: epsilon_rel must be nonnegative");

    RobustResult out;
    RingDecomposition ring;
    if (init.has_value()) {
        if (init->mode_dims() != dims)
            throw DimensionError("decompose_robust: init decomposition shape differs from the "
                                 "tensor");
        if (init->rank() != cfg.rank)
            throw ValidationError("decompose_robust: init bond dimension " +
                                  std::to_string(init->rank()) + " differs from cfg.rank " +
                                  std::to_string(cfg.rank));
        ring = std::move(*init);
    } else {
        // Honest masked operation: the initialization reads through the mask,
        // so a plan touching unobserved entries fails loudly.
        const MaskedTensorView view(t, mask);
        DecomposeResult spectral = robust_initialize(view, cfg);
        out.init_retries = spectral.retries;
        ring = std::move(spectral.ring);
    }

    const double norm = masked_norm(t, mask);
    double res = masked_residual(t, mask, ring);
    out.residual_history.push_back(res);
    for (int sweep = 1; sweep <= cfg.max_sweeps && res > cfg.epsilon_rel * norm; ++sweep) {
        masked_als_sweep(t, mask, ring, cfg.exec);
        res = masked_residual(t, mask, ring);
        out.residual_history.push_back(res);
        out.sweeps = sweep;
    }
    out.ring = std::move(ring);
    out.residual = out.residual_history.back();
    if (norm > 0.0)
        out.relative_residual = out.residual / norm;
    else
        out.relative_residual =
            out.residual == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace tr
