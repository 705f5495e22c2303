#pragma once

#include <memory>

#include "tr/tensor.hpp"

namespace tr {

/** Reorders tensor modes. perm[p] is the source mode that becomes mode p, so
 *  result dims are (dims[perm[0]], dims[perm[1]], ...) and
 *  result(i_0,...,i_{d-1}) = T(j_0,...,j_{d-1}) with j[perm[p]] = i[p]. */
DenseTensor permute_modes(const DenseTensor& t, const std::vector<std::int64_t>& perm);

/** Cyclic left rotation by s modes: result dims are
 *  (n_{s+1},...,n_d,n_1,...,n_s) and result(a_{s+1},...,a_s) = T(a_1,...,a_d).
 *  (1-based in the formula; s may be any non-negative integer, taken mod d.) */
DenseTensor cyclic_shift(const DenseTensor& t, std::int64_t s);

/** Mode-k unfolding with forward-cyclic column order: the result has n_k rows
 *  and its column for the remaining coordinates is the column-major packed
 *  index of (a_{k+1},...,a_d,a_1,...,a_{k-1}). k is 0-based. */
Matrix unfold_bracket(const DenseTensor& t, std::int64_t k);

/** Mode-k unfolding with reverse-cyclic column order: columns are packed from
 *  (a_{k-1},...,a_1,a_d,...,a_{k+1}). k is 0-based. */
Matrix unfold_angle(const DenseTensor& t, std::int64_t k);

/** Inverse of unfold_bracket: rebuilds the order-d tensor with the given mode
 *  sizes from its mode-k forward-cyclic unfolding. */
DenseTensor fold_bracket(const Matrix& m, const Dims& dims, std::int64_t k);

/** Inverse of unfold_angle. */
DenseTensor fold_angle(const Matrix& m, const Dims& dims, std::int64_t k);

/** Mode-k product: applies U to mode k, i.e. the result's bracket unfolding at
 *  k equals U * unfold_bracket(T, k). U must have dims[k] columns. */
DenseTensor mode_product(const DenseTensor& t, const Matrix& u, std::int64_t k);

/** Kronecker product with (A o B)(i_a*p + i_b, j_a*q + j_b) = A(i_a,j_a)B(i_b,j_b)
 *  for B of shape p x q (0-based; the left factor's indices vary slowly). */
Matrix kron(const Matrix& a, const Matrix& b);

/** Exchange of the two Kronecker slots of a square matrix on a product space:
 *  for X of size (r1*r2) x (r1*r2), with 0-based indices j1,k1 in [0,r1) and
 *  j2,k2 in [0,r2),
 *    result(j2*r1 + j1, k2*r1 + k1) = X(j1*r2 + j2, k1*r2 + k2),
 *  so that block_transpose(kron(A,B), r1, r2) == kron(B,A) for A of size r1,
 *  B of size r2, and the map is an involution against block_transpose(.,r2,r1). */
Matrix block_transpose(const Matrix& x, std::int64_t r1, std::int64_t r2);

/** Builds the block-diagonal matrix diag(blocks[0], ..., blocks[r-1]). */
Matrix block_diagonal(const std::vector<Matrix>& blocks);

/** Lateral fiber slice: rows sweep mode 1, columns sweep the subset `gamma`
 *  (0-based indices into the last mode), with the middle modes pinned at
 *  `mid` (length d-2). Entry (i, c) = T(i, mid..., gamma[c]). Reads go through
 *  the accessor, so masked views enforce and record them. */
Matrix fiber_slice(const TensorAccessor& t, const MultiIndex& mid,
                   const std::vector<std::int64_t>& gamma);

/** Fiber slice of the cyclically rotated tensor, read directly from the
 *  unrotated accessor: equals fiber_slice(cyclic_shift(T, s), mid, gamma)
 *  entrywise but performs no materialization. `mid` pins the rotated middle
 *  modes (length d-2) and `gamma` indexes the rotated last mode. */
Matrix shifted_fiber_slice(const TensorAccessor& t, std::int64_t s, const MultiIndex& mid,
                           const std::vector<std::int64_t>& gamma);

/** Lazy cyclic rotation of an accessor (same semantics as cyclic_shift). */
class RotatedAccessor : public TensorAccessor {
public:
    RotatedAccessor(const TensorAccessor& base, std::int64_t s);
    const Dims& dims() const override { return dims_; }
    Complex at(const MultiIndex& idx) const override;

private:
    const TensorAccessor* base_;
    std::int64_t s_;
    Dims dims_;
};

/** Lazy merge of the contiguous mode range [first, last] (0-based, inclusive)
 *  into one super-mode whose index packs the merged coordinates column-major
 *  (first merged coordinate fastest). */
class ContractedAccessor : public TensorAccessor {
public:
    ContractedAccessor(const TensorAccessor& base, std::int64_t first, std::int64_t last);
    const Dims& dims() const override { return dims_; }
    Complex at(const MultiIndex& idx) const override;

    std::int64_t first() const { return first_; }
    std::int64_t last() const { return last_; }

private:
    const TensorAccessor* base_;
    std::int64_t first_;
    std::int64_t last_;
    Dims dims_;
};

/** Lookup view for tensors invariant under cyclic index rotation (as ring
 *  tensors with a shared core are): a read probes all d rotations of the index
 *  against the masked base and returns the first observable one. Throws
 *  MaskViolationError only when no rotation is observable. */
class CyclicEquivalenceView : public TensorAccessor {
public:
    explicit CyclicEquivalenceView(const MaskedTensorView& base);
    const Dims& dims() const override { return base_->dims(); }
    Complex at(const MultiIndex& idx) const override;
    const MaskedTensorView& base() const { return *base_; }

private:
    const MaskedTensorView* base_;
};

}  // namespace tr
