#include "tr/ring.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <Eigen/Dense>

namespace tr {

namespace {

/** out = a * b for column-major r x r buffers; out must not alias inputs. */
inline void multiply_small(const Complex* a, const Complex* b, Complex* out, std::int64_t r) {
    for (std::int64_t j = 0; j < r; ++j) {
        for (std::int64_t i = 0; i < r; ++i) {
            Complex acc{0.0, 0.0};
            for (std::int64_t l = 0; l < r; ++l) {
                acc += a[i + l * r] * b[l + j * r];
            }
            out[i + j * r] = acc;
        }
    }
}

inline Complex trace_of_product_chain(const SliceCache& cache, const MultiIndex& idx) {
    const std::int64_t d = cache.order();
    const std::int64_t r = cache.rank();
    std::array<Complex, kMaxRank * kMaxRank> bufa;
    std::array<Complex, kMaxRank * kMaxRank> bufb;
    const Complex* first = cache.slice(0, idx[0]);
    if (d == 1) {
        Complex tr{0.0, 0.0};
        for (std::int64_t i = 0; i < r; ++i) tr += first[i + i * r];
        return tr;
    }
    const Complex* cur = first;
    Complex* next = bufa.data();
    Complex* spare = bufb.data();
    for (std::int64_t k = 1; k < d - 1; ++k) {
        multiply_small(cur, cache.slice(k, idx[static_cast<std::size_t>(k)]), next, r);
        cur = next;
        std::swap(next, spare);
    }
    // Last factor: accumulate the trace directly, tr(M * Q) = sum_{i,l} M(i,l) Q(l,i).
    const Complex* last = cache.slice(d - 1, idx[static_cast<std::size_t>(d - 1)]);
    Complex tr{0.0, 0.0};
    for (std::int64_t i = 0; i < r; ++i) {
        for (std::int64_t l = 0; l < r; ++l) {
            tr += cur[i + l * r] * last[l + i * r];
        }
    }
    return tr;
}

}  // namespace

SliceCache::SliceCache(const RingDecomposition& ring) : rank_(ring.rank()), dims_(ring.mode_dims()) {
    if (rank_ > kMaxRank) {
        throw DimensionError("SliceCache: bond dimension exceeds the supported maximum of " +
                             std::to_string(kMaxRank));
    }
    const std::int64_t d = ring.order();
    data_.resize(static_cast<std::size_t>(d));
    for (std::int64_t k = 0; k < d; ++k) {
        const DenseTensor& core = ring.core(k);
        const std::int64_t n = core.dims()[0];
        std::vector<Complex>& buf = data_[static_cast<std::size_t>(k)];
        buf.resize(static_cast<std::size_t>(n * rank_ * rank_));
        for (std::int64_t a = 0; a < n; ++a) {
            for (std::int64_t c = 0; c < rank_; ++c) {
                for (std::int64_t b = 0; b < rank_; ++b) {
                    buf[static_cast<std::size_t>(a * rank_ * rank_ + b + c * rank_)] =
                        core[a + b * n + c * n * rank_];
                }
            }
        }
    }
}

Complex ring_entry(const SliceCache& cache, const MultiIndex& idx) {
    if (static_cast<std::int64_t>(idx.size()) != cache.order()) {
        throw DimensionError("ring_entry: index order does not match the decomposition");
    }
    return trace_of_product_chain(cache, idx);
}

Complex ring_entry(const RingDecomposition& ring, const MultiIndex& idx) {
    SliceCache cache(ring);
    return ring_entry(cache, idx);
}

DenseTensor ring_reconstruct(const RingDecomposition& ring, Exec exec, std::int64_t max_entries) {
    const Dims dims = ring.mode_dims();
    const std::int64_t total = dims_product(dims);
    if (total > max_entries) {
        throw MemoryBoundError("ring_reconstruct: " + std::to_string(total) +
                               " entries exceed the budget of " + std::to_string(max_entries));
    }
    SliceCache cache(ring);
    DenseTensor out(dims);
    Complex* data = out.data().data();
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel
        {
            MultiIndex idx(static_cast<std::size_t>(d));
#pragma omp for schedule(static)
            for (std::int64_t linear = 0; linear < total; ++linear) {
                std::int64_t rem = linear;
                for (std::int64_t m = 0; m < d; ++m) {
                    idx[static_cast<std::size_t>(m)] = rem % dims[static_cast<std::size_t>(m)];
                    rem /= dims[static_cast<std::size_t>(m)];
                }
                data[linear] = trace_of_product_chain(cache, idx);
            }
        }
        return out;
#endif
    }
    MultiIndex idx(static_cast<std::size_t>(d));
    for (std::int64_t linear = 0; linear < total; ++linear) {
        std::int64_t rem = linear;
        for (std::int64_t m = 0; m < d; ++m) {
            idx[static_cast<std::size_t>(m)] = rem % dims[static_cast<std::size_t>(m)];
            rem /= dims[static_cast<std::size_t>(m)];
        }
        data[linear] = trace_of_product_chain(cache, idx);
    }
    return out;
}

namespace {

double relative_error_stream(const Dims& dims, const Complex* ref, const SliceCache* ref_cache,
                             const SliceCache& cache, Exec exec) {
    const std::int64_t total = dims_product(dims);
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    double num = 0.0;
    double den = 0.0;
    if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel reduction(+ : num, den)
        {
            MultiIndex idx(static_cast<std::size_t>(d));
#pragma omp for schedule(static)
            for (std::int64_t linear = 0; linear < total; ++linear) {
                std::int64_t rem = linear;
                for (std::int64_t m = 0; m < d; ++m) {
                    idx[static_cast<std::size_t>(m)] = rem % dims[static_cast<std::size_t>(m)];
                    rem /= dims[static_cast<std::size_t>(m)];
                }
                const Complex t = ref ? ref[linear] : trace_of_product_chain(*ref_cache, idx);
                const Complex e = trace_of_product_chain(cache, idx) - t;
                num += std::norm(e);
                den += std::norm(t);
            }
        }
        if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return std::sqrt(num / den);
#endif
    }
    MultiIndex idx(static_cast<std::size_t>(d));
    for (std::int64_t linear = 0; linear < total; ++linear) {
        std::int64_t rem = linear;
        for (std::int64_t m = 0; m < d; ++m) {
            idx[static_cast<std::size_t>(m)] = rem % dims[static_cast<std::size_t>(m)];
            rem /= dims[static_cast<std::size_t>(m)];
        }
        const Complex t = ref ? ref[linear] : trace_of_product_chain(*ref_cache, idx);
        const Complex e = trace_of_product_chain(cache, idx) - t;
        num += std::norm(e);
        den += std::norm(t);
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

}  // namespace

double ring_relative_error(const DenseTensor& t, const RingDecomposition& ring, Exec exec) {
    if (t.dims() != ring.mode_dims()) {
        throw DimensionError("ring_relative_error: tensor and decomposition shapes differ");
    }
    SliceCache cache(ring);
    return relative_error_stream(t.dims(), t.data().data(), nullptr, cache, exec);
}

double ring_relative_error(const RingDecomposition& reference, const RingDecomposition& ring,
                           Exec exec) {
    if (reference.mode_dims() != ring.mode_dims()) {
        throw DimensionError("ring_relative_error: decomposition shapes differ");
    }
    SliceCache ref_cache(reference);
    SliceCache cache(ring);
    return relative_error_stream(reference.mode_dims(), nullptr, &ref_cache, cache, exec);
}

double ring_relative_error(const TensorAccessor& t, const RingDecomposition& ring, Exec exec) {
    if (t.dims() != ring.mode_dims()) {
        throw DimensionError("ring_relative_error: tensor and decomposition shapes differ");
    }
    const Dims& dims = t.dims();
    const std::int64_t total = dims_product(dims);
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    SliceCache cache(ring);
    double num = 0.0;
    double den = 0.0;
    if (exec == Exec::parallel) {
#ifdef _OPENMP
        // Accessor reads may throw (masked views); exceptions must not escape
        // the parallel region, so the first one is captured and rethrown.
        std::atomic<bool> failed{false};
        std::exception_ptr error;
#pragma omp parallel reduction(+ : num, den)
        {
            MultiIndex idx(static_cast<std::size_t>(d));
#pragma omp for schedule(static)
            for (std::int64_t linear = 0; linear < total; ++linear) {
                if (failed.load(std::memory_order_relaxed)) continue;
                try {
                    std::int64_t rem = linear;
                    for (std::int64_t m = 0; m < d; ++m) {
                        idx[static_cast<std::size_t>(m)] = rem % dims[static_cast<std::size_t>(m)];
                        rem /= dims[static_cast<std::size_t>(m)];
                    }
                    const Complex ref = t.at(idx);
                    num += std::norm(trace_of_product_chain(cache, idx) - ref);
                    den += std::norm(ref);
                } catch (...) {
#pragma omp critical(tr_ring_relative_error_accessor)
                    {
                        if (!failed.load(std::memory_order_relaxed)) {
                            error = std::current_exception();
                            failed.store(true, std::memory_order_relaxed);
                        }
                    }
                }
            }
        }
        if (failed.load()) std::rethrow_exception(error);
        if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return std::sqrt(num / den);
#endif
    }
    MultiIndex idx(static_cast<std::size_t>(d));
    for (std::int64_t linear = 0; linear < total; ++linear) {
        std::int64_t rem = linear;
        for (std::int64_t m = 0; m < d; ++m) {
            idx[static_cast<std::size_t>(m)] = rem % dims[static_cast<std::size_t>(m)];
            rem /= dims[static_cast<std::size_t>(m)];
        }
        const Complex ref = t.at(idx);
        num += std::norm(trace_of_product_chain(cache, idx) - ref);
        den += std::norm(ref);
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

double masked_residual(const TensorAccessor& t, const SampleMask& mask,
                       const RingDecomposition& ring) {
    SliceCache cache(ring);
    double s = 0.0;
    for (std::int64_t slot = 0; slot < mask.size(); ++slot) {
        const MultiIndex idx = unravel_index(mask.dims(), mask.entry_at(slot));
        s += std::norm(t.at(idx) - trace_of_product_chain(cache, idx));
    }
    return std::sqrt(s);
}

double masked_norm(const TensorAccessor& t, const SampleMask& mask) {
    double s = 0.0;
    for (std::int64_t slot = 0; slot < mask.size(); ++slot) {
        s += std::norm(t.at(unravel_index(mask.dims(), mask.entry_at(slot))));
    }
    return std::sqrt(s);
}

RingDecomposition gauge_transform(const RingDecomposition& ring, const std::vector<Matrix>& l) {
    const std::int64_t d = ring.order();
    if (static_cast<std::int64_t>(l.size()) != d) {
        throw DimensionError("gauge_transform: need one matrix per mode");
    }
    std::vector<DenseTensor> cores;
    cores.reserve(static_cast<std::size_t>(d));
    for (std::int64_t k = 0; k < d; ++k) {
        const Matrix& lk = l[static_cast<std::size_t>(k)];
        const Matrix& lnext = l[static_cast<std::size_t>((k + 1) % d)];
        if (lk.rows() != ring.rank() || lk.cols() != ring.rank()) {
            throw DimensionError("gauge_transform: matrices must be r x r");
        }
        const Matrix lk_inv = lk.fullPivLu().inverse();
        const std::int64_t n = ring.core(k).dims()[0];
        std::vector<Matrix> slices;
        slices.reserve(static_cast<std::size_t>(n));
        for (std::int64_t a = 0; a < n; ++a) {
            slices.push_back(lk_inv * ring.slice(k, a) * lnext);
        }
        cores.push_back(core_from_slices(slices));
    }
    return RingDecomposition(std::move(cores));
}

}  // namespace tr
