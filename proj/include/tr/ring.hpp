#pragma once

#include "tr/tensor.hpp"

namespace tr {

/** Execution policy for the data-parallel kernels. The serial path is the
 *  reference implementation; the parallel path partitions entry ranges across
 *  OpenMP threads and must agree with it to floating-point roundoff. */
enum class Exec { serial, parallel };

/** Maximum bond dimension supported by the stack-allocated evaluation kernels. */
inline constexpr std::int64_t kMaxRank = 16;

/** Default cap on materialized tensor entries (2^28). */
inline constexpr std::int64_t kDefaultEntryBudget = std::int64_t{1} << 28;

/** Contiguous per-slice storage of a decomposition's bond slices, used by the
 *  entry-evaluation kernels to avoid strided reads. Slice (k, a) is stored as
 *  r*r column-major complex values. */
class SliceCache {
public:
    explicit SliceCache(const RingDecomposition& ring);

    std::int64_t order() const { return static_cast<std::int64_t>(dims_.size()); }
    std::int64_t rank() const { return rank_; }
    const Dims& mode_dims() const { return dims_; }

    const Complex* slice(std::int64_t k, std::int64_t a) const {
        return data_[static_cast<std::size_t>(k)].data() +
               static_cast<std::size_t>(a) * static_cast<std::size_t>(rank_ * rank_);
    }

private:
    std::int64_t rank_ = 0;
    Dims dims_;
    std::vector<std::vector<Complex>> data_;
};

/** Single entry of the represented tensor:
 *  T(a_1,...,a_d) = tr( Q_1^(a_1) ... Q_d^(a_d) ). Allocation-free. */
Complex ring_entry(const SliceCache& cache, const MultiIndex& idx);

/** Convenience overload; builds a cache per call (prefer SliceCache in loops). */
Complex ring_entry(const RingDecomposition& ring, const MultiIndex& idx);

/** Materializes the full represented tensor. Throws MemoryBoundError when the
 *  entry count exceeds max_entries. */
DenseTensor ring_reconstruct(const RingDecomposition& ring, Exec exec = Exec::parallel,
                             std::int64_t max_entries = kDefaultEntryBudget);

/** Streamed relative reconstruction error
 *  ||T - ring||_F / ||T||_F computed without materializing the reconstruction. */
double ring_relative_error(const DenseTensor& t, const RingDecomposition& ring,
                           Exec exec = Exec::parallel);

/** Relative error between two decompositions of the same shape, streamed. */
double ring_relative_error(const RingDecomposition& reference, const RingDecomposition& ring,
                           Exec exec = Exec::parallel);

/** Relative error with every reference entry read through the accessor (for
 *  lazy rotated/contracted views; masked views throw on unobserved entries). */
double ring_relative_error(const TensorAccessor& t, const RingDecomposition& ring,
                           Exec exec = Exec::parallel);

/** Frobenius norm of the represented tensor restricted to mask entries, and
 *  the masked residual ||(T - ring)|_mask||_F. Entries are read from `t`. */
double masked_residual(const TensorAccessor& t, const SampleMask& mask,
                       const RingDecomposition& ring);

/** Frobenius norm of `t` restricted to the mask. */
double masked_norm(const TensorAccessor& t, const SampleMask& mask);

/** Bond-basis change: replaces every slice Q_k^(a) by
 *  inverse(L_k) * Q_k^(a) * L_{k+1} (cyclically, L_{d+1} = L_1), which leaves
 *  the represented tensor unchanged. L must hold d invertible r x r matrices. */
RingDecomposition gauge_transform(const RingDecomposition& ring, const std::vector<Matrix>& l);

}  // namespace tr
