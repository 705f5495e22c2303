#include "tr/index_ops.hpp"

#include <algorithm>
#include <numeric>

namespace tr {

namespace {

/** Column orders of the two unfoldings, as lists of 0-based source modes. */
std::vector<std::int64_t> bracket_column_modes(std::int64_t d, std::int64_t k) {
    std::vector<std::int64_t> modes;
    modes.reserve(static_cast<std::size_t>(d - 1));
    for (std::int64_t p = 1; p < d; ++p) modes.push_back((k + p) % d);
    return modes;
}

std::vector<std::int64_t> angle_column_modes(std::int64_t d, std::int64_t k) {
    std::vector<std::int64_t> modes;
    modes.reserve(static_cast<std::size_t>(d - 1));
    for (std::int64_t p = 1; p < d; ++p) modes.push_back(((k - p) % d + d) % d);
    return modes;
}

Matrix unfold_with_column_modes(const DenseTensor& t, std::int64_t k,
                                const std::vector<std::int64_t>& col_modes) {
    const Dims& dims = t.dims();
    const std::int64_t d = t.order();
    const std::int64_t rows = dims[static_cast<std::size_t>(k)];
    const std::int64_t cols = t.size() / rows;
    Matrix m(rows, cols);
    MultiIndex idx(static_cast<std::size_t>(d));
    for (std::int64_t c = 0; c < cols; ++c) {
        std::int64_t rem = c;
        for (std::int64_t p = 0; p < d - 1; ++p) {
            const std::int64_t mode = col_modes[static_cast<std::size_t>(p)];
            idx[static_cast<std::size_t>(mode)] = rem % dims[static_cast<std::size_t>(mode)];
            rem /= dims[static_cast<std::size_t>(mode)];
        }
        for (std::int64_t i = 0; i < rows; ++i) {
            idx[static_cast<std::size_t>(k)] = i;
            m(i, c) = t[linear_index(dims, idx)];
        }
    }
    return m;
}

DenseTensor fold_with_column_modes(const Matrix& m, const Dims& dims, std::int64_t k,
                                   const std::vector<std::int64_t>& col_modes) {
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    const std::int64_t rows = dims[static_cast<std::size_t>(k)];
    const std::int64_t cols = dims_product(dims) / rows;
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError("fold: matrix shape does not match the requested dims");
    }
    DenseTensor t(dims);
    MultiIndex idx(static_cast<std::size_t>(d));
    for (std::int64_t c = 0; c < cols; ++c) {
        std::int64_t rem = c;
        for (std::int64_t p = 0; p < d - 1; ++p) {
            const std::int64_t mode = col_modes[static_cast<std::size_t>(p)];
            idx[static_cast<std::size_t>(mode)] = rem % dims[static_cast<std::size_t>(mode)];
            rem /= dims[static_cast<std::size_t>(mode)];
        }
        for (std::int64_t i = 0; i < rows; ++i) {
            idx[static_cast<std::size_t>(k)] = i;
            t[linear_index(dims, idx)] = m(i, c);
        }
    }
    return t;
}

void check_mode(const DenseTensor& t, std::int64_t k, const char* who) {
    if (k < 0 || k >= t.order()) {
        throw DimensionError(std::string(who) + ": mode index out of range");
    }
}

}  // namespace

DenseTensor permute_modes(const DenseTensor& t, const std::vector<std::int64_t>& perm) {
    const std::int64_t d = t.order();
    if (static_cast<std::int64_t>(perm.size()) != d) {
        throw DimensionError("permute_modes: permutation length does not match order");
    }
    std::vector<bool> seen(static_cast<std::size_t>(d), false);
    for (std::int64_t p : perm) {
        if (p < 0 || p >= d || seen[static_cast<std::size_t>(p)]) {
            throw DimensionError("permute_modes: not a permutation");
        }
        seen[static_cast<std::size_t>(p)] = true;
    }
    const Dims& dims = t.dims();
    Dims new_dims(static_cast<std::size_t>(d));
    for (std::int64_t p = 0; p < d; ++p) {
        new_dims[static_cast<std::size_t>(p)] = dims[static_cast<std::size_t>(perm[static_cast<std::size_t>(p)])];
    }
    DenseTensor out(new_dims);
    const std::int64_t n = t.size();
    MultiIndex old_idx(static_cast<std::size_t>(d));
    MultiIndex new_idx(static_cast<std::size_t>(d));
    for (std::int64_t linear = 0; linear < n; ++linear) {
        std::int64_t rem = linear;
        for (std::int64_t m = 0; m < d; ++m) {
            old_idx[static_cast<std::size_t>(m)] = rem % dims[static_cast<std::size_t>(m)];
            rem /= dims[static_cast<std::size_t>(m)];
        }
        for (std::int64_t p = 0; p < d; ++p) {
            new_idx[static_cast<std::size_t>(p)] = old_idx[static_cast<std::size_t>(perm[static_cast<std::size_t>(p)])];
        }
        out[linear_index(new_dims, new_idx)] = t[linear];
    }
    return out;
}

DenseTensor cyclic_shift(const DenseTensor& t, std::int64_t s) {
    const std::int64_t d = t.order();
    std::vector<std::int64_t> perm(static_cast<std::size_t>(d));
    for (std::int64_t p = 0; p < d; ++p) perm[static_cast<std::size_t>(p)] = (p + s) % d;
    return permute_modes(t, perm);
}

Matrix unfold_bracket(const DenseTensor& t, std::int64_t k) {
    check_mode(t, k, "unfold_bracket");
    return unfold_with_column_modes(t, k, bracket_column_modes(t.order(), k));
}

Matrix unfold_angle(const DenseTensor& t, std::int64_t k) {
    check_mode(t, k, "unfold_angle");
    return unfold_with_column_modes(t, k, angle_column_modes(t.order(), k));
}

DenseTensor fold_bracket(const Matrix& m, const Dims& dims, std::int64_t k) {
    if (k < 0 || k >= static_cast<std::int64_t>(dims.size())) {
        throw DimensionError("fold_bracket: mode index out of range");
    }
    return fold_with_column_modes(m, dims, k, bracket_column_modes(static_cast<std::int64_t>(dims.size()), k));
}

DenseTensor fold_angle(const Matrix& m, const Dims& dims, std::int64_t k) {
    if (k < 0 || k >= static_cast<std::int64_t>(dims.size())) {
        throw DimensionError("fold_angle: mode index out of range");
    }
    return fold_with_column_modes(m, dims, k, angle_column_modes(static_cast<std::int64_t>(dims.size()), k));
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& u, std::int64_t k) {
    check_mode(t, k, "mode_product");
    if (u.cols() != t.dims()[static_cast<std::size_t>(k)]) {
        throw DimensionError("mode_product: matrix columns must match the mode size");
    }
    const Matrix unfolded = unfold_bracket(t, k);
    Dims new_dims = t.dims();
    new_dims[static_cast<std::size_t>(k)] = u.rows();
    return fold_bracket(u * unfolded, new_dims, k);
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index ja = 0; ja < a.cols(); ++ja) {
        for (Eigen::Index ia = 0; ia < a.rows(); ++ia) {
            out.block(ia * b.rows(), ja * b.cols(), b.rows(), b.cols()) = a(ia, ja) * b;
        }
    }
    return out;
}

Matrix block_transpose(const Matrix& x, std::int64_t r1, std::int64_t r2) {
    if (x.rows() != r1 * r2 || x.cols() != r1 * r2) {
        throw DimensionError("block_transpose: matrix must be (r1*r2) x (r1*r2)");
    }
    Matrix out(r1 * r2, r1 * r2);
    for (std::int64_t k2 = 0; k2 < r2; ++k2) {
        for (std::int64_t k1 = 0; k1 < r1; ++k1) {
            for (std::int64_t j2 = 0; j2 < r2; ++j2) {
                for (std::int64_t j1 = 0; j1 < r1; ++j1) {
                    out(j2 * r1 + j1, k2 * r1 + k1) = x(j1 * r2 + j2, k1 * r2 + k2);
                }
            }
        }
    }
    return out;
}

Matrix block_diagonal(const std::vector<Matrix>& blocks) {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    for (const Matrix& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Matrix out = Matrix::Zero(rows, cols);
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    for (const Matrix& b : blocks) {
        out.block(i, j, b.rows(), b.cols()) = b;
        i += b.rows();
        j += b.cols();
    }
    return out;
}

Matrix fiber_slice(const TensorAccessor& t, const MultiIndex& mid,
                   const std::vector<std::int64_t>& gamma) {
    return shifted_fiber_slice(t, 0, mid, gamma);
}

Matrix shifted_fiber_slice(const TensorAccessor& t, std::int64_t s, const MultiIndex& mid,
                           const std::vector<std::int64_t>& gamma) {
    const Dims& dims = t.dims();
    const std::int64_t d = t.order();
    if (d < 2) throw DimensionError("shifted_fiber_slice: tensor order must be at least 2");
    if (static_cast<std::int64_t>(mid.size()) != d - 2) {
        throw DimensionError("shifted_fiber_slice: middle index must have length d-2");
    }
    s = ((s % d) + d) % d;
    // Rotated position p holds source mode (p + s) mod d.
    const std::int64_t row_mode = s;
    const std::int64_t col_mode = (s + d - 1) % d;
    const std::int64_t rows = dims[static_cast<std::size_t>(row_mode)];
    MultiIndex idx(static_cast<std::size_t>(d));
    for (std::int64_t p = 1; p < d - 1; ++p) {
        const std::int64_t mode = (p + s) % d;
        const std::int64_t v = mid[static_cast<std::size_t>(p - 1)];
        if (v < 0 || v >= dims[static_cast<std::size_t>(mode)]) {
            throw DimensionError("shifted_fiber_slice: middle index out of range");
        }
        idx[static_cast<std::size_t>(mode)] = v;
    }
    Matrix m(rows, static_cast<Eigen::Index>(gamma.size()));
    for (std::size_t c = 0; c < gamma.size(); ++c) {
        if (gamma[c] < 0 || gamma[c] >= dims[static_cast<std::size_t>(col_mode)]) {
            throw DimensionError("shifted_fiber_slice: column subset index out of range");
        }
        idx[static_cast<std::size_t>(col_mode)] = gamma[c];
        for (std::int64_t i = 0; i < rows; ++i) {
            idx[static_cast<std::size_t>(row_mode)] = i;
            m(i, static_cast<Eigen::Index>(c)) = t.at(idx);
        }
    }
    return m;
}

RotatedAccessor::RotatedAccessor(const TensorAccessor& base, std::int64_t s) : base_(&base) {
    const std::int64_t d = base.order();
    s_ = ((s % d) + d) % d;
    dims_.resize(static_cast<std::size_t>(d));
    for (std::int64_t p = 0; p < d; ++p) {
        dims_[static_cast<std::size_t>(p)] = base.dims()[static_cast<std::size_t>((p + s_) % d)];
    }
}

Complex RotatedAccessor::at(const MultiIndex& idx) const {
    const std::int64_t d = static_cast<std::int64_t>(dims_.size());
    if (static_cast<std::int64_t>(idx.size()) != d) {
        throw DimensionError("RotatedAccessor: index order mismatch");
    }
    MultiIndex src(static_cast<std::size_t>(d));
    for (std::int64_t p = 0; p < d; ++p) {
        src[static_cast<std::size_t>((p + s_) % d)] = idx[static_cast<std::size_t>(p)];
    }
    return base_->at(src);
}

ContractedAccessor::ContractedAccessor(const TensorAccessor& base, std::int64_t first,
                                       std::int64_t last)
    : base_(&base), first_(first), last_(last) {
    const std::int64_t d = base.order();
    if (first < 0 || last >= d || first > last) {
        throw DimensionError("ContractedAccessor: invalid mode range");
    }
    const Dims& bd = base.dims();
    std::int64_t merged = 1;
    for (std::int64_t m = first; m <= last; ++m) merged *= bd[static_cast<std::size_t>(m)];
    for (std::int64_t m = 0; m < first; ++m) dims_.push_back(bd[static_cast<std::size_t>(m)]);
    dims_.push_back(merged);
    for (std::int64_t m = last + 1; m < d; ++m) dims_.push_back(bd[static_cast<std::size_t>(m)]);
}

Complex ContractedAccessor::at(const MultiIndex& idx) const {
    if (idx.size() != dims_.size()) {
        throw DimensionError("ContractedAccessor: index order mismatch");
    }
    const Dims& bd = base_->dims();
    MultiIndex src(bd.size());
    for (std::int64_t m = 0; m < first_; ++m) src[static_cast<std::size_t>(m)] = idx[static_cast<std::size_t>(m)];
    std::int64_t rem = idx[static_cast<std::size_t>(first_)];
    for (std::int64_t m = first_; m <= last_; ++m) {
        src[static_cast<std::size_t>(m)] = rem % bd[static_cast<std::size_t>(m)];
        rem /= bd[static_cast<std::size_t>(m)];
    }
    for (std::size_t p = static_cast<std::size_t>(first_) + 1; p < dims_.size(); ++p) {
        src[p + static_cast<std::size_t>(last_ - first_)] = idx[p];
    }
    return base_->at(src);
}

CyclicEquivalenceView::CyclicEquivalenceView(const MaskedTensorView& base) : base_(&base) {
    const Dims& d = base.dims();
    for (std::size_t k = 1; k < d.size(); ++k) {
        if (d[k] != d[0]) {
            throw DimensionError("CyclicEquivalenceView: all mode sizes must be equal");
        }
    }
}

Complex CyclicEquivalenceView::at(const MultiIndex& idx) const {
    const std::int64_t d = static_cast<std::int64_t>(idx.size());
    const SampleMask& mask = base_->mask();
    MultiIndex rotated(idx.size());
    for (std::int64_t s = 0; s < d; ++s) {
        for (std::int64_t p = 0; p < d; ++p) {
            rotated[static_cast<std::size_t>(p)] = idx[static_cast<std::size_t>((p + s) % d)];
        }
        if (mask.contains(linear_index(base_->dims(), rotated))) {
            return base_->at(rotated);
        }
    }
    // No rotation is observable: forward the original index so the masked
    // view raises its standard violation error.
    return base_->at(idx);
}

}  // namespace tr
