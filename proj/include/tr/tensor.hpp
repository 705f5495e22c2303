#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "tr/errors.hpp"

namespace tr {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

/** Mode sizes (n_1, ..., n_d). */
using Dims = std::vector<std::int64_t>;

/** A 0-based multi-index (alpha_1, ..., alpha_d). All public formulas in the
 *  documentation are written 1-based; code and storage are 0-based. */
using MultiIndex = std::vector<std::int64_t>;

/** Number of entries of a dense tensor with the given mode sizes. */
std::int64_t dims_product(const Dims& dims);

/** Column-major linear index: alpha_1 + alpha_2*n_1 + alpha_3*n_1*n_2 + ... */
std::int64_t linear_index(const Dims& dims, const MultiIndex& idx);

/** Inverse of linear_index. */
MultiIndex unravel_index(const Dims& dims, std::int64_t linear);

/** Read-only entrywise view of a tensor: dense storage, masked views and lazy
 *  rotated/contracted adapters all implement this interface so that the
 *  decomposition pipelines are agnostic to how entries are produced. */
class TensorAccessor {
public:
    virtual ~TensorAccessor() = default;
    virtual const Dims& dims() const = 0;
    /** Entry at a 0-based multi-index. Masked implementations throw
     *  MaskViolationError when the entry is not observable. */
    virtual Complex at(const MultiIndex& idx) const = 0;
    std::int64_t order() const { return static_cast<std::int64_t>(dims().size()); }
    std::int64_t size() const { return dims_product(dims()); }
};

/** Dense complex tensor in column-major order: the entry (alpha_1,...,alpha_d)
 *  lives at linear index alpha_1 + alpha_2*n_1 + alpha_3*n_1*n_2 + ... */
class DenseTensor : public TensorAccessor {
public:
    DenseTensor() = default;
    explicit DenseTensor(Dims dims);
    DenseTensor(Dims dims, std::vector<Complex> data);

    const Dims& dims() const override { return dims_; }
    Complex at(const MultiIndex& idx) const override;

    Complex& operator[](std::int64_t linear) { return data_[static_cast<std::size_t>(linear)]; }
    const Complex& operator[](std::int64_t linear) const {
        return data_[static_cast<std::size_t>(linear)];
    }
    Complex& at_ref(const MultiIndex& idx) { return data_[static_cast<std::size_t>(linear_index(dims_, idx))]; }

    std::vector<Complex>& data() { return data_; }
    const std::vector<Complex>& data() const { return data_; }

    /** Frobenius norm of the tensor viewed as a long vector. */
    double frobenius_norm() const;

private:
    Dims dims_;
    std::vector<Complex> data_;
};

/** Set of observable entries of a tensor, with a provenance label per entry
 *  recording which probe slice or fiber family contributed it. */
class SampleMask {
public:
    SampleMask() = default;
    explicit SampleMask(Dims dims) : dims_(std::move(dims)) {}

    const Dims& dims() const { return dims_; }
    std::int64_t size() const { return static_cast<std::int64_t>(entries_.size()); }

    /** Registers a linear index under the given family label. Duplicate
     *  inserts keep the first family. Returns the entry's slot. */
    std::int64_t add(std::int64_t linear, std::uint32_t family);
    std::int64_t add(const MultiIndex& idx, std::uint32_t family) {
        return add(linear_index(dims_, idx), family);
    }

    /** Declares a family label; returns its id. */
    std::uint32_t add_family(std::string name);

    bool contains(std::int64_t linear) const { return slot_.count(linear) != 0; }
    /** Slot of a linear index, or -1 when absent. */
    std::int64_t slot_of(std::int64_t linear) const;

    std::int64_t entry_at(std::int64_t slot) const { return entries_[static_cast<std::size_t>(slot)]; }
    std::uint32_t family_of_slot(std::int64_t slot) const { return family_[static_cast<std::size_t>(slot)]; }
    const std::string& family_name(std::uint32_t id) const { return family_names_[id]; }
    std::size_t family_count() const { return family_names_.size(); }

    /** Copy of the mask with one entry removed (for mask-enforcement tests). */
    SampleMask without(std::int64_t linear) const;

private:
    Dims dims_;
    std::vector<std::int64_t> entries_;
    std::vector<std::uint32_t> family_;
    std::vector<std::string> family_names_;
    std::unordered_map<std::int64_t, std::int64_t> slot_;
};

/** Masked view of a tensor: reads inside the mask are forwarded to the base
 *  accessor, reads outside raise MaskViolationError naming the index. The
 *  view records which mask slots were actually touched so tests can assert
 *  which entries a pipeline consumed. The mask is immutable after
 *  construction; concurrent reads are safe (telemetry stores are idempotent). */
class MaskedTensorView : public TensorAccessor {
public:
    MaskedTensorView(const TensorAccessor& base, SampleMask mask);

    const Dims& dims() const override { return base_->dims(); }
    Complex at(const MultiIndex& idx) const override;

    const SampleMask& mask() const { return mask_; }
    /** Number of distinct mask entries read so far. */
    std::int64_t touched_count() const;
    bool touched(std::int64_t linear) const;

private:
    const TensorAccessor* base_;
    SampleMask mask_;
    mutable std::vector<std::uint8_t> seen_;
};

/** Tensor-ring decomposition: d cores, core k of shape (n_k, r, r), where the
 *  represented tensor entry is the trace of the product of per-mode slices,
 *  T(a_1,...,a_d) = tr( Q_1^(a_1) Q_2^(a_2) ... Q_d^(a_d) ). */
class RingDecomposition {
public:
    RingDecomposition() = default;
    /** Validates that every core is order-3 with matching square bond size. */
    explicit RingDecomposition(std::vector<DenseTensor> cores);

    std::int64_t order() const { return static_cast<std::int64_t>(cores_.size()); }
    std::int64_t rank() const { return rank_; }
    Dims mode_dims() const;

    const DenseTensor& core(std::int64_t k) const { return cores_[static_cast<std::size_t>(k)]; }
    DenseTensor& core(std::int64_t k) { return cores_[static_cast<std::size_t>(k)]; }
    const std::vector<DenseTensor>& cores() const { return cores_; }

    /** Bond slice Q_k^(a) as an r x r matrix (rows: incoming bond, columns:
     *  outgoing bond). */
    Matrix slice(std::int64_t k, std::int64_t a) const;
    void set_slice(std::int64_t k, std::int64_t a, const Matrix& s);

private:
    std::int64_t rank_ = 0;
    std::vector<DenseTensor> cores_;
};

/** Builds an order-3 core of shape (n, r, r) from n bond slices. */
DenseTensor core_from_slices(const std::vector<Matrix>& slices);

}  // namespace tr
