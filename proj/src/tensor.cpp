#include "tr/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace tr {

namespace {

std::string format_index(const MultiIndex& idx) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < idx.size(); ++i) {
        os << idx[i] + 1 << (i + 1 < idx.size() ? "," : "");
    }
    os << ")";
    return os.str();
}

}  // namespace

std::int64_t dims_product(const Dims& dims) {
    std::int64_t n = 1;
    for (std::int64_t d : dims) n *= d;
    return n;
}

std::int64_t linear_index(const Dims& dims, const MultiIndex& idx) {
    if (idx.size() != dims.size()) {
        throw DimensionError("linear_index: index order " + std::to_string(idx.size()) +
                             " does not match tensor order " + std::to_string(dims.size()));
    }
    std::int64_t linear = 0;
    std::int64_t stride = 1;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= dims[k]) {
            throw DimensionError("linear_index: coordinate " + std::to_string(k + 1) +
                                 " of " + format_index(idx) + " is outside mode size " +
                                 std::to_string(dims[k]));
        }
        linear += idx[k] * stride;
        stride *= dims[k];
    }
    return linear;
}

MultiIndex unravel_index(const Dims& dims, std::int64_t linear) {
    if (linear < 0 || linear >= dims_product(dims)) {
        throw DimensionError("unravel_index: linear index " + std::to_string(linear) +
                             " is outside the " + std::to_string(dims_product(dims)) +
                             " entries");
    }
    MultiIndex idx(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
        idx[k] = linear % dims[k];
        linear /= dims[k];
    }
    return idx;
}

DenseTensor::DenseTensor(Dims dims)
    : dims_(std::move(dims)), data_(static_cast<std::size_t>(dims_product(dims_))) {
    for (std::int64_t n : dims_) {
        if (n <= 0) throw DimensionError("DenseTensor: mode sizes must be positive");
    }
}

DenseTensor::DenseTensor(Dims dims, std::vector<Complex> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != dims_product(dims_)) {
        throw DimensionError("DenseTensor: data size " + std::to_string(data_.size()) +
                             " does not match dims product " +
                             std::to_string(dims_product(dims_)));
    }
}

Complex DenseTensor::at(const MultiIndex& idx) const {
    return data_[static_cast<std::size_t>(linear_index(dims_, idx))];
}

double DenseTensor::frobenius_norm() const {
    double s = 0.0;
    for (const Complex& v : data_) s += std::norm(v);
    return std::sqrt(s);
}

std::int64_t SampleMask::add(std::int64_t linear, std::uint32_t family) {
    auto it = slot_.find(linear);
    if (it != slot_.end()) return it->second;
    const std::int64_t slot = static_cast<std::int64_t>(entries_.size());
    entries_.push_back(linear);
    family_.push_back(family);
    slot_.emplace(linear, slot);
    return slot;
}

std::uint32_t SampleMask::add_family(std::string name) {
    family_names_.push_back(std::move(name));
    return static_cast<std::uint32_t>(family_names_.size() - 1);
}

std::int64_t SampleMask::slot_of(std::int64_t linear) const {
    auto it = slot_.find(linear);
    return it == slot_.end() ? -1 : it->second;
}

SampleMask SampleMask::without(std::int64_t linear) const {
    SampleMask out(dims_);
    out.family_names_ = family_names_;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i] != linear) out.add(entries_[i], family_[i]);
    }
    return out;
}

MaskedTensorView::MaskedTensorView(const TensorAccessor& base, SampleMask mask)
    : base_(&base), mask_(std::move(mask)), seen_(static_cast<std::size_t>(mask_.size()), 0) {
    if (mask_.dims() != base.dims()) {
        throw DimensionError("MaskedTensorView: mask dims do not match tensor dims");
    }
}

Complex MaskedTensorView::at(const MultiIndex& idx) const {
    const std::int64_t linear = linear_index(dims(), idx);
    const std::int64_t slot = mask_.slot_of(linear);
    if (slot < 0) {
        throw MaskViolationError("MaskedTensorView: entry " + format_index(idx) +
                                 " is outside the observed sample set");
    }
    seen_[static_cast<std::size_t>(slot)] = 1;
    return base_->at(idx);
}

std::int64_t MaskedTensorView::touched_count() const {
    std::int64_t n = 0;
    for (std::uint8_t s : seen_) n += s;
    return n;
}

bool MaskedTensorView::touched(std::int64_t linear) const {
    const std::int64_t slot = mask_.slot_of(linear);
    return slot >= 0 && seen_[static_cast<std::size_t>(slot)] != 0;
}

RingDecomposition::RingDecomposition(std::vector<DenseTensor> cores) : cores_(std::move(cores)) {
    if (cores_.empty()) throw DimensionError("RingDecomposition: no cores");
    for (std::size_t k = 0; k < cores_.size(); ++k) {
        const Dims& cd = cores_[k].dims();
        if (cd.size() != 3) {
            throw DimensionError("RingDecomposition: core " + std::to_string(k + 1) +
                                 " must be order 3");
        }
        if (cd[1] != cd[2]) {
            throw DimensionError("RingDecomposition: core " + std::to_string(k + 1) +
                                 " has non-square bond dimensions");
        }
        if (k == 0) {
            rank_ = cd[1];
        } else if (cd[1] != rank_) {
            throw DimensionError("RingDecomposition: core " + std::to_string(k + 1) +
                                 " bond size differs from core 1");
        }
    }
}

Dims RingDecomposition::mode_dims() const {
    Dims d(cores_.size());
    for (std::size_t k = 0; k < cores_.size(); ++k) d[k] = cores_[k].dims()[0];
    return d;
}

Matrix RingDecomposition::slice(std::int64_t k, std::int64_t a) const {
    const DenseTensor& q = core(k);
    const std::int64_t n = q.dims()[0];
    const std::int64_t r = q.dims()[1];
    if (a < 0 || a >= n) {
        throw DimensionError("RingDecomposition::slice: index out of range");
    }
    Matrix s(r, r);
    for (std::int64_t c = 0; c < r; ++c) {
        for (std::int64_t b = 0; b < r; ++b) {
            s(b, c) = q[a + b * n + c * n * r];
        }
    }
    return s;
}

void RingDecomposition::set_slice(std::int64_t k, std::int64_t a, const Matrix& s) {
    DenseTensor& q = core(k);
    const std::int64_t n = q.dims()[0];
    const std::int64_t r = q.dims()[1];
    if (s.rows() != r || s.cols() != r) {
        throw DimensionError("RingDecomposition::set_slice: slice must be r x r");
    }
    for (std::int64_t c = 0; c < r; ++c) {
        for (std::int64_t b = 0; b < r; ++b) {
            q[a + b * n + c * n * r] = s(b, c);
        }
    }
}

DenseTensor core_from_slices(const std::vector<Matrix>& slices) {
    if (slices.empty()) throw DimensionError("core_from_slices: no slices");
    const std::int64_t n = static_cast<std::int64_t>(slices.size());
    const std::int64_t r = slices[0].rows();
    DenseTensor core({n, r, r});
    for (std::int64_t a = 0; a < n; ++a) {
        if (slices[static_cast<std::size_t>(a)].rows() != r ||
            slices[static_cast<std::size_t>(a)].cols() != r) {
            throw DimensionError("core_from_slices: inconsistent slice shapes");
        }
        for (std::int64_t c = 0; c < r; ++c) {
            for (std::int64_t b = 0; b < r; ++b) {
                core[a + b * n + c * n * r] = slices[static_cast<std::size_t>(a)](b, c);
            }
        }
    }
    return core;
}

}  // namespace tr
