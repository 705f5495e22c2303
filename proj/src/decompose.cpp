#include "tr/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>

#include "tr/index_ops.hpp"
#include "tr/rng.hpp"

namespace tr {

namespace {

std::string format_scalar(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

/** Verification residual appropriate to the input: masked views are checked
 *  over their mask, everything else entry by entry. */
double verification_residual(const TensorAccessor& t, const RingDecomposition& ring) {
    const MaskedTensorView* masked = dynamic_cast<const MaskedTensorView*>(&t);
    if (masked == nullptr) {
        if (const auto* cyclic = dynamic_cast<const CyclicEquivalenceView*>(&t))
            masked = &cyclic->base();
    }
    if (masked != nullptr) {
        const double denom = masked_norm(*masked, masked->mask());
        const double num = masked_residual(*masked, masked->mask(), ring);
        if (denom == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return num / denom;
    }
    if (const auto* dense = dynamic_cast<const DenseTensor*>(&t))
        return ring_relative_error(*dense, ring);
    return ring_relative_error(t, ring);
}

/** One pass of the exact pipeline under a fixed observation plan. */
RingDecomposition run_exact_once(const TensorAccessor& t, const DecomposeConfig& cfg,
                                 const ProbeConfig& probes) {
    const Dims& dims = t.dims();
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    const std::int64_t r = cfg.rank;
    const std::int64_t rr = r * r;

    const auto probe = [&](const ProbePair& pair) {
        return cfg.truncated_probes ? truncated_probe(t, pair, r, cfg.tolerances)
                                    : probe_matrix(t, pair, cfg.tolerances);
    };
    const EigenBlockBasis e =
        cluster_eigenbasis(probe(probes.pair_a), r, cfg.tolerances, cfg.cluster_tol,
                           cfg.cluster_method, cfg.seed, cfg.kmeans_restarts);
    const EigenBlockBasis e_prime =
        cluster_eigenbasis(probe(probes.pair_b), r, cfg.tolerances, cfg.cluster_tol,
                           cfg.cluster_method, cfg.seed + 1, cfg.kmeans_restarts);
    const GaugeFix fix = fix_gauge(e, e_prime, cfg.tolerances);

    std::vector<DenseTensor> cores(static_cast<std::size_t>(d));
    cores[0] = recover_first_core(e, fix, cfg.tolerances);

    Matrix companion_product = Matrix::Identity(r, r);
    const Matrix eye = Matrix::Identity(r, r);
    for (std::int64_t k = 1; k < d; ++k) {
        // Fiber slice with rows on mode k, columns on the subset of mode k-1,
        // all other modes pinned at the companion index.
        MultiIndex mid(static_cast<std::size_t>(d - 2));
        for (std::int64_t p = 1; p <= d - 2; ++p)
            mid[static_cast<std::size_t>(p - 1)] =
                probes.companion[static_cast<std::size_t>((p + k) % d)];
        const std::vector<std::int64_t>& gamma = probes.mode_gammas[static_cast<std::size_t>(k - 1)];
        const Matrix s = shifted_fiber_slice(t, k, mid, gamma);

        const Matrix bracket = unfold_bracket(cores[static_cast<std::size_t>(k - 1)], 0);
        Matrix selected(static_cast<std::int64_t>(gamma.size()), rr);
        for (std::size_t j = 0; j < gamma.size(); ++j)
            selected.row(static_cast<std::int64_t>(j)) = bracket.row(gamma[j]);
        const Matrix g = kron(eye, companion_product) * selected.transpose();
        if (numerical_rank(svd(g), cfg.tolerances.pinv_rel_tol) != rr)
            throw RankDeficientError(
                "decompose_exact: linear system for core " + std::to_string(k + 1) +
                " is rank-deficient; redraw the observation plan");
        cores[static_cast<std::size_t>(k)] =
            fold_angle(s * pinv(g, cfg.tolerances.pinv_rel_tol),
                       Dims{dims[static_cast<std::size_t>(k)], r, r}, 0);

        // Extend the companion-slice product with the core the step consumed:
        // it trails the loop by one mode.
        const DenseTensor& prev = cores[static_cast<std::size_t>(k - 1)];
        const std::int64_t n_prev = prev.dims()[0];
        const std::int64_t a_prev = probes.companion[static_cast<std::size_t>(k - 1)];
        Matrix slice_prev(r, r);
        for (std::int64_t c = 0; c < r; ++c)
            for (std::int64_t b = 0; b < r; ++b)
                slice_prev(b, c) = prev[a_prev + b * n_prev + c * n_prev * r];
        companion_product = companion_product * slice_prev;
    }
    return RingDecomposition(std::move(cores));
}

void check_exact_preconditions(const Dims& dims, const DecomposeConfig& cfg) {
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    if (d < 3)
        throw DimensionError("decompose_exact: tensor order must be at least 3, got " +
                             std::to_string(d));
    if (cfg.rank < 1)
        throw ValidationError("decompose_exact: bond dimension must be positive, got " +
                              std::to_string(cfg.rank));
    if (cfg.rank > kMaxRank)
        throw ValidationError("decompose_exact: bond dimension exceeds the supported maximum of " +
                              std::to_string(kMaxRank));
    const std::int64_t rr = cfg.rank * cfg.rank;
    for (std::int64_t m = 0; m < d; ++m)
        if (dims[static_cast<std::size_t>(m)] < rr)
            throw DimensionTooSmallError(
                "decompose_exact: mode " + std::to_string(m + 1) + " has size " +
                std::to_string(dims[static_cast<std::size_t>(m)]) + " < r*r = " +
                std::to_string(rr) + "; use the contracted route");
}

}  // namespace

RingDecomposition decompose_order2(const TensorAccessor& t, std::int64_t r,
                                   const ToleranceConfig& cfg) {
    const Dims& dims = t.dims();
    if (dims.size() != 2)
        throw DimensionError("decompose_order2: expected an order-2 tensor, got order " +
                             std::to_string(dims.size()));
    if (r < 1)
        throw ValidationError("decompose_order2: bond dimension must be positive, got " +
                              std::to_string(r));
    const std::int64_t n1 = dims[0];
    const std::int64_t n2 = dims[1];
    const std::int64_t rr = r * r;
    Matrix m(n1, n2);
    MultiIndex idx(2);
    for (std::int64_t j = 0; j < n2; ++j) {
        idx[1] = j;
        for (std::int64_t i = 0; i < n1; ++i) {
            idx[0] = i;
            m(i, j) = t.at(idx);
        }
    }
    const SvdResult dec = svd(m);
    const std::int64_t rank = numerical_rank(dec, cfg.pinv_rel_tol);
    if (rank > rr) {
        const double spill = dec.singular_values(rr) / dec.singular_values(0);
        throw RankDeficientError("decompose_order2: matrix rank " + std::to_string(rank) +
                                 " exceeds r*r = " + std::to_string(rr) + "; no exact bond-" +
                                 std::to_string(r) + " ring exists (relative residual beyond the "
                                 "kept spectrum: " + format_scalar(spill) + ")");
    }
    // T = A B^T with A = U (zero-padded to r*r columns) and
    // B = conj(V) Sigma (zero-padded), so that A B^T = U Sigma V^H = T.
    const std::int64_t keep = std::min(rr, static_cast<std::int64_t>(dec.singular_values.size()));
    Matrix a = Matrix::Zero(n1, rr);
    Matrix b = Matrix::Zero(n2, rr);
    a.leftCols(keep) = dec.u.leftCols(keep);
    b.leftCols(keep) = dec.v.leftCols(keep).conjugate() * dec.singular_values.head(keep).asDiagonal();
    std::vector<DenseTensor> cores(2);
    cores[0] = fold_angle(a, Dims{n1, r, r}, 0);
    cores[1] = fold_bracket(b, Dims{n2, r, r}, 0);
    return RingDecomposition(std::move(cores));
}

DecomposeResult decompose_exact(const TensorAccessor& t, const DecomposeConfig& cfg) {
    check_exact_preconditions(t.dims(), cfg);
    ProbeConfig probes;
    if (cfg.probes.has_value()) {
        probes = *cfg.probes;
        validate_probe_config(t.dims(), cfg.rank, probes);
    } else {
        probes = default_probe_config(t.dims(), cfg.rank);
    }
    const bool allow_redraw = !cfg.probes.has_value();
    const int attempts = allow_redraw ? std::max(cfg.retry_budget, 0) + 1 : 1;
    std::string last_failure;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        try {
            DecomposeResult result;
            result.ring = run_exact_once(t, cfg, probes);
            result.probes = probes;
            result.retries = attempt;
            result.residual = std::numeric_limits<double>::quiet_NaN();
            if (cfg.verify) {
                result.residual = verification_residual(t, result.ring);
                if (!(result.residual <= cfg.tol))
                    throw NumericalError("decompose_exact: verification residual " +
                                         format_scalar(result.residual) + " exceeds tol " +
                                         format_scalar(cfg.tol));
            }
            return result;
        } catch (const NumericalError& err) {
            last_failure = err.what();
            if (attempt + 1 >= attempts) {
                if (allow_redraw && attempts > 1)
                    throw RetriesExhaustedError("decompose_exact: no acceptable decomposition in " +
                                                std::to_string(attempts) +
                                                " attempts; last failure: " + last_failure);
                throw;
            }
            Rng rng(cfg.seed, "probe_redraw", static_cast<std::uint64_t>(attempt));
            probes = random_probe_config(t.dims(), cfg.rank, rng);
        }
    }
    throw RetriesExhaustedError("decompose_exact: unreachable retry state");  // not reached
}

ContractionPlan contraction_plan(const Dims& dims, std::int64_t r) {
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    if (d < 3)
        throw DimensionError("contraction_plan: tensor order must be at least 3, got " +
                             std::to_string(d));
    const std::int64_t rr = r * r;
    std::vector<bool> large(static_cast<std::size_t>(d));
    for (std::int64_t m = 0; m < d; ++m) large[static_cast<std::size_t>(m)] = dims[static_cast<std::size_t>(m)] >= rr;

    std::int64_t best_start = -1;
    std::int64_t best_len = 0;
    for (std::int64_t start = 0; start < d; ++start) {
        if (!large[static_cast<std::size_t>(start)]) continue;
        std::int64_t len = 0;
        while (len < d && large[static_cast<std::size_t>((start + len) % d)]) ++len;
        if (len > best_len) {
            best_len = len;
            best_start = start;
        }
    }
    ContractionPlan plan;
    if (best_len == d) {
        plan.rotation = 0;
        plan.kept = d;
        plan.contracted_dims = dims;
        return plan;
    }
    if (best_len < 2)
        throw NoValidStartError(
            "contraction_plan: no two cyclically adjacent modes of size >= r*r = " +
            std::to_string(rr) + "; the finite-step pipeline cannot start");
    plan.rotation = best_start;
    plan.kept = best_len;
    plan.contracted_dims.assign(static_cast<std::size_t>(best_len + 1), 0);
    std::int64_t super = 1;
    for (std::int64_t p = 0; p < d; ++p) {
        const std::int64_t orig = (p + best_start) % d;
        if (p < best_len) {
            plan.contracted_dims[static_cast<std::size_t>(p)] = dims[static_cast<std::size_t>(orig)];
        } else {
            super *= dims[static_cast<std::size_t>(orig)];
            plan.merged_modes.push_back(orig);
        }
    }
    plan.contracted_dims[static_cast<std::size_t>(best_len)] = super;
    if (super < rr)
        throw NoValidStartError("contraction_plan: merged modes hold only " +
                                std::to_string(super) + " indices < r*r = " + std::to_string(rr));
    return plan;
}

namespace {

/** Expands the contracted decomposition back to d per-mode cores and verifies
 *  against the original input. */
DecomposeResult expand_contracted(const TensorAccessor& t, const DecomposeConfig& cfg,
                                  const ContractionPlan& plan, const DecomposeResult& inner) {
    const Dims& dims = t.dims();
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    const std::int64_t merged_count = d - plan.kept;
    Dims merged_dims(static_cast<std::size_t>(merged_count));
    for (std::int64_t p = 0; p < merged_count; ++p)
        merged_dims[static_cast<std::size_t>(p)] =
            dims[static_cast<std::size_t>(plan.merged_modes[static_cast<std::size_t>(p)])];
    const std::int64_t super_companion =
        inner.probes.companion[static_cast<std::size_t>(plan.kept)];
    const MultiIndex gamma = unravel_index(merged_dims, super_companion);

    // Split the super-core along its merged coordinates. With D the
    // super-core's slice at the full companion index, the slice family with
    // coordinate p freed, right-normalized by inverse(D) on all but the last
    // merged mode, multiplies back to the super-core's slices exactly.
    const Matrix d_slice = inner.ring.slice(plan.kept, super_companion);
    Matrix d_inverse;
    try {
        d_inverse = strict_inverse(d_slice, 1e-12, "decompose_with_contraction");
    } catch (const RankDeficientError&) {
        throw SingularBlockError(
            "decompose_with_contraction: the super-core's companion slice is singular");
    }

    std::vector<DenseTensor> rotated_cores(static_cast<std::size_t>(d));
    for (std::int64_t p = 0; p < plan.kept; ++p)
        rotated_cores[static_cast<std::size_t>(p)] = inner.ring.core(p);
    for (std::int64_t p = 0; p < merged_count; ++p) {
        const std::int64_t n = merged_dims[static_cast<std::size_t>(p)];
        std::vector<Matrix> slices(static_cast<std::size_t>(n));
        MultiIndex sub = gamma;
        for (std::int64_t a = 0; a < n; ++a) {
            sub[static_cast<std::size_t>(p)] = a;
            const std::int64_t merged_linear = linear_index(merged_dims, sub);
            Matrix s = inner.ring.slice(plan.kept, merged_linear);
            if (p + 1 < merged_count) s = s * d_inverse;
            slices[static_cast<std::size_t>(a)] = std::move(s);
        }
        rotated_cores[static_cast<std::size_t>(plan.kept + p)] = core_from_slices(slices);
    }

    DecomposeResult result;
    std::vector<DenseTensor> cores(static_cast<std::size_t>(d));
    for (std::int64_t p = 0; p < d; ++p)
        cores[static_cast<std::size_t>((p + plan.rotation) % d)] =
            std::move(rotated_cores[static_cast<std::size_t>(p)]);
    result.ring = RingDecomposition(std::move(cores));
    result.probes = inner.probes;
    result.retries = inner.retries;
    result.rotation = plan.rotation;
    result.contracted_modes = plan.merged_modes;
    result.residual = std::numeric_limits<double>::quiet_NaN();
    if (cfg.verify) {
        result.residual = verification_residual(t, result.ring);
        if (!(result.residual <= cfg.tol))
            throw NumericalError("decompose_with_contraction: verification residual " +
                                 format_scalar(result.residual) + " exceeds tol " +
                                 format_scalar(cfg.tol));
    }
    return result;
}

}  // namespace

DecomposeResult decompose_with_contraction(const TensorAccessor& t, const DecomposeConfig& cfg) {
    const Dims dims = t.dims();
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    if (cfg.rank < 1)
        throw ValidationError("decompose_with_contraction: bond dimension must be positive");
    const ContractionPlan plan = contraction_plan(dims, cfg.rank);
    if (plan.kept == d) return decompose_exact(t, cfg);

    const RotatedAccessor rotated(t, plan.rotation);
    const ContractedAccessor contracted(rotated, plan.kept, d - 1);

    // The inner pass is verified here against the original input (a masked
    // original cannot be checked through the contracted view), so inner
    // verification is off and this loop owns the redraws.
    DecomposeConfig inner_cfg = cfg;
    inner_cfg.verify = false;
    const bool allow_redraw = !cfg.probes.has_value();
    const int attempts = allow_redraw ? std::max(cfg.retry_budget, 0) + 1 : 1;
    std::string last_failure;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            Rng rng(cfg.seed, "contracted_redraw", static_cast<std::uint64_t>(attempt - 1));
            inner_cfg.probes = random_probe_config(plan.contracted_dims, cfg.rank, rng);
            inner_cfg.retry_budget = 0;
        }
        try {
            const DecomposeResult inner = decompose_exact(contracted, inner_cfg);
            DecomposeResult result = expand_contracted(t, cfg, plan, inner);
            result.retries += attempt;
            return result;
        } catch (const NumericalError& err) {
            last_failure = err.what();
            if (attempt + 1 >= attempts) {
                if (allow_redraw && attempts > 1)
                    throw RetriesExhaustedError(
                        "decompose_with_contraction: no acceptable decomposition in " +
                        std::to_string(attempts) + " attempts; last failure: " + last_failure);
                throw;
            }
        }
    }
    throw RetriesExhaustedError("decompose_with_contraction: unreachable retry state");
}

SampleMask build_refined_sample_mask(const Dims& dims, std::int64_t r, const ProbeConfig& probes) {
    const ContractionPlan plan = contraction_plan(dims, r);
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    if (plan.kept == d) return build_sample_mask(dims, r, probes);
    const SampleMask contracted = build_sample_mask(plan.contracted_dims, r, probes);
    Dims merged_dims(plan.merged_modes.size());
    for (std::size_t p = 0; p < plan.merged_modes.size(); ++p)
        merged_dims[p] = dims[static_cast<std::size_t>(plan.merged_modes[p])];
    SampleMask mask(dims);
    std::vector<std::uint32_t> families(contracted.family_count());
    for (std::uint32_t f = 0; f < contracted.family_count(); ++f)
        families[f] = mask.add_family(contracted.family_name(f));
    MultiIndex original(static_cast<std::size_t>(d));
    for (std::int64_t slot = 0; slot < contracted.size(); ++slot) {
        const MultiIndex con = unravel_index(plan.contracted_dims, contracted.entry_at(slot));
        for (std::int64_t p = 0; p < plan.kept; ++p)
            original[static_cast<std::size_t>((p + plan.rotation) % d)] =
                con[static_cast<std::size_t>(p)];
        const MultiIndex merged =
            unravel_index(merged_dims, con[static_cast<std::size_t>(plan.kept)]);
        for (std::size_t p = 0; p < plan.merged_modes.size(); ++p)
            original[static_cast<std::size_t>(plan.merged_modes[p])] = merged[p];
        mask.add(original, families[contracted.family_of_slot(slot)]);
    }
    return mask;
}

DecomposeResult decompose_auto(const TensorAccessor& t, const DecomposeConfig& cfg) {
    const Dims& dims = t.dims();
    if (dims.size() < 2)
        throw DimensionError("decompose_auto: tensor order must be at least 2, got " +
                             std::to_string(dims.size()));
    if (dims.size() == 2) {
        DecomposeResult result;
        result.ring = decompose_order2(t, cfg.rank, cfg.tolerances);
        result.residual = std::numeric_limits<double>::quiet_NaN();
        if (cfg.verify) {
            result.residual = verification_residual(t, result.ring);
            if (!(result.residual <= cfg.tol))
                throw NumericalError("decompose_auto: verification residual " +
                                     format_scalar(result.residual) + " exceeds tol " +
                                     format_scalar(cfg.tol));
        }
        return result;
    }
    const std::int64_t rr = cfg.rank * cfg.rank;
    const bool all_large = std::all_of(dims.begin(), dims.end(),
                                       [rr](std::int64_t n) { return n >= rr; });
    return all_large ? decompose_exact(t, cfg) : decompose_with_contraction(t, cfg);
}

}  // namespace tr
