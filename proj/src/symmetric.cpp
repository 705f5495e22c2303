#include "tr/symmetric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "tr/index_ops.hpp"
#include "tr/rng.hpp"

namespace tr {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string format_scalar(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::vector<std::int64_t> random_subset(std::int64_t n, std::int64_t m, Rng& rng) {
    std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    for (std::int64_t i = 0; i < m; ++i) {
        const std::int64_t j = rng.uniform_int(i, n - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(m));
    std::sort(pool.begin(), pool.end());
    return pool;
}

/** Random observation plan compatible with the weight-sharing algebra: one
 *  companion value repeated on every mode and one shared column subset, as
 *  build_symmetric_sample_mask requires. */
ProbeConfig symmetric_random_probe_config(const Dims& dims, std::int64_t r, Rng& rng) {
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    const std::int64_t n = dims[0];
    const std::int64_t rr = r * r;
    ProbeConfig cfg;
    cfg.companion.assign(static_cast<std::size_t>(d), rng.uniform_int(0, n - 1));
    cfg.mode_gammas.assign(static_cast<std::size_t>(d), random_subset(n, rr, rng));
    cfg.pair_a.gamma = random_subset(n, rr, rng);
    cfg.pair_b.gamma = random_subset(n, rr, rng);
    const auto draw_mid = [&]() {
        MultiIndex mid(static_cast<std::size_t>(d - 2));
        for (std::int64_t p = 0; p < d - 2; ++p)
            mid[static_cast<std::size_t>(p)] = rng.uniform_int(0, n - 1);
        return mid;
    };
    const auto as_set = [](const ProbePair& pair) {
        std::pair<MultiIndex, MultiIndex> s(pair.first, pair.second);
        if (s.second < s.first) std::swap(s.first, s.second);
        return s;
    };
    for (int attempt = 0; attempt < 64; ++attempt) {
        cfg.pair_a.first = draw_mid();
        cfg.pair_a.second = draw_mid();
        cfg.pair_b.first = draw_mid();
        cfg.pair_b.second = draw_mid();
        if (cfg.pair_a.first == cfg.pair_a.second) continue;
        if (cfg.pair_b.first == cfg.pair_b.second) continue;
        if (as_set(cfg.pair_a) == as_set(cfg.pair_b)) continue;
        return cfg;
    }
    throw RetriesExhaustedError(
        "decompose_symmetric: could not draw two distinct probe slice pairs; the mode size is "
        "too small");
}

/** Eigenbasis of the companion slice product together with the principal d-th
 *  roots of its eigenvalues, in deterministic (Re, Im) eigenvalue order. */
struct RootBasis {
    Matrix e;
    Matrix e_inv;
    std::vector<Complex> roots;
};

RootBasis make_root_basis(const RingDecomposition& hatted, std::int64_t companion_value,
                          bool use_full_product, const ToleranceConfig& tolerances) {
    const std::int64_t d = hatted.order();
    const std::int64_t r = hatted.rank();
    // The sequential recovery pins every companion slice after the second to
    // the identity, so the first two factors already carry the whole cyclic
    // product; the full variant folds in the trailing slices' numerical error.
    Matrix p = hatted.slice(0, companion_value);
    if (use_full_product) {
        for (std::int64_t k = 1; k < d; ++k) p = p * hatted.slice(k, companion_value);
    } else {
        p = p * hatted.slice(1, companion_value);
    }
    const EigResult ed = eig(p, tolerances);
    std::vector<std::int64_t> order(static_cast<std::size_t>(r));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        if (ed.values(a).real() != ed.values(b).real())
            return ed.values(a).real() < ed.values(b).real();
        return ed.values(a).imag() < ed.values(b).imag();
    });
    RootBasis basis;
    basis.e.resize(r, r);
    basis.roots.resize(static_cast<std::size_t>(r));
    for (std::int64_t i = 0; i < r; ++i) {
        basis.e.col(i) = ed.vectors.col(order[static_cast<std::size_t>(i)]);
        basis.roots[static_cast<std::size_t>(i)] =
            std::pow(ed.values(order[static_cast<std::size_t>(i)]), 1.0 / static_cast<double>(d));
    }
    try {
        basis.e_inv = strict_inverse(basis.e, 1e-12, "decompose_symmetric");
    } catch (const RankDeficientError&) {
        throw SingularBlockError(
            "decompose_symmetric: the eigenbasis of the companion slice product is singular; "
            "redraw the observation plan");
    }
    return basis;
}

/** Candidate shared-core slices for one root assignment. The last recovered
 *  core satisfies Qhat_d^(a) = K (Q^(c))^{-1} Q^(a) K^{-1} in the gauge the
 *  sequential recovery produces, so left-multiplying it by the candidate
 *  companion slice E diag(omega_j) E^{-1} restores K Q^(a) K^{-1} when the
 *  branch offsets are correct. */
std::vector<Matrix> slices_from_basis(const RingDecomposition& hatted, const RootBasis& basis,
                                      const std::vector<std::int64_t>& offsets) {
    const std::int64_t d = hatted.order();
    const std::int64_t r = hatted.rank();
    const std::int64_t n = hatted.mode_dims()[0];
    Vector dw(r);
    for (std::int64_t j = 0; j < r; ++j) {
        const Complex omega =
            basis.roots[static_cast<std::size_t>(j)] *
            std::polar(1.0, kTwoPi * static_cast<double>(offsets[static_cast<std::size_t>(j)]) /
                                static_cast<double>(d));
        if (std::abs(omega) < 1e-300)
            throw SingularBlockError(
                "decompose_symmetric: the companion slice product has a vanishing eigenvalue; "
                "the shared core's companion slice is singular");
        dw(j) = omega;
    }
    const Matrix prefix = basis.e * dw.asDiagonal() * basis.e_inv;
    std::vector<Matrix> slices(static_cast<std::size_t>(n));
    for (std::int64_t a = 0; a < n; ++a)
        slices[static_cast<std::size_t>(a)] = prefix * hatted.slice(d - 1, a);
    return slices;
}

/** Applies `visit(hat_product, candidate_product)` to every tuple of the
 *  verification set (`tuples` empty means full enumeration in odometer order,
 *  reusing shared prefixes). Returns false as soon as visit does. With `bar`
 *  null the candidate argument aliases the reference product. */
template <typename Visit>
bool scan_slice_products(const std::vector<std::vector<Matrix>>& hat,
                         const std::vector<Matrix>* bar, const std::vector<MultiIndex>& tuples,
                         Visit&& visit) {
    const std::int64_t d = static_cast<std::int64_t>(hat.size());
    const std::int64_t n = static_cast<std::int64_t>(hat[0].size());
    if (!tuples.empty()) {
        for (const MultiIndex& idx : tuples) {
            Matrix hp = hat[0][static_cast<std::size_t>(idx[0])];
            for (std::int64_t k = 1; k < d; ++k)
                hp = hp * hat[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
            if (bar == nullptr) {
                if (!visit(hp, hp)) return false;
                continue;
            }
            Matrix bp = (*bar)[static_cast<std::size_t>(idx[0])];
            for (std::int64_t k = 1; k < d; ++k)
                bp = bp * (*bar)[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
            if (!visit(hp, bp)) return false;
        }
        return true;
    }
    MultiIndex idx(static_cast<std::size_t>(d), 0);
    std::vector<Matrix> hp(static_cast<std::size_t>(d));
    std::vector<Matrix> bp(bar == nullptr ? 0 : static_cast<std::size_t>(d));
    const auto refill = [&](std::int64_t from) {
        for (std::int64_t k = from; k < d; ++k) {
            const std::size_t ku = static_cast<std::size_t>(k);
            const std::size_t a = static_cast<std::size_t>(idx[ku]);
            hp[ku] = (k == 0) ? hat[ku][a] : Matrix(hp[ku - 1] * hat[ku][a]);
            if (bar != nullptr) bp[ku] = (k == 0) ? (*bar)[a] : Matrix(bp[ku - 1] * (*bar)[a]);
        }
    };
    refill(0);
    const std::size_t last = static_cast<std::size_t>(d - 1);
    while (true) {
        if (!visit(hp[last], bar == nullptr ? hp[last] : bp[last])) return false;
        std::int64_t p = d - 1;
        while (p >= 0 && idx[static_cast<std::size_t>(p)] == n - 1) {
            idx[static_cast<std::size_t>(p)] = 0;
            --p;
        }
        if (p < 0) return true;
        ++idx[static_cast<std::size_t>(p)];
        refill(p);
    }
}

SymmetricResult run_symmetric_once(const TensorAccessor& t, const SymmetricConfig& cfg,
                                   const ProbeConfig& probes) {
    const Dims& dims = t.dims();
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    const std::int64_t n = dims[0];
    const std::int64_t r = cfg.rank;

    DecomposeConfig inner;
    inner.rank = r;
    inner.tol = cfg.accept_tol;
    inner.cluster_tol = cfg.cluster_tol;
    inner.cluster_method = cfg.cluster_method;
    inner.retry_budget = 0;
    inner.seed = cfg.seed;
    inner.probes = probes;
    inner.verify = true;
    inner.tolerances = cfg.tolerances;
    const DecomposeResult exact = decompose_exact(t, inner);
    const std::int64_t companion_value = probes.companion[0];

    std::vector<std::vector<Matrix>> hat(static_cast<std::size_t>(d));
    for (std::int64_t k = 0; k < d; ++k) {
        hat[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(n));
        for (std::int64_t a = 0; a < n; ++a)
            hat[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] = exact.ring.slice(k, a);
    }

    // Verification tuple set: all of [0,n)^d when that stays within the
    // enumeration limit, otherwise seeded non-constant samples.
    std::vector<MultiIndex> tuples;
    double total = 1.0;
    bool full = true;
    for (std::int64_t k = 0; k < d; ++k) {
        total *= static_cast<double>(n);
        if (total > static_cast<double>(cfg.full_check_limit)) {
            full = false;
            break;
        }
    }
    if (!full) {
        if (n < 2)
            throw ValidationError(
                "decompose_symmetric: cannot sample non-constant verification tuples when the "
                "mode size is 1");
        Rng rng(cfg.seed, "verify_tuples");
        tuples.resize(static_cast<std::size_t>(cfg.sampled_tuples));
        for (auto& tuple : tuples) {
            tuple.resize(static_cast<std::size_t>(d));
            // Redraw constant tuples: they cannot separate root assignments.
            bool constant = true;
            while (constant) {
                for (auto& coord : tuple) coord = rng.uniform_int(0, n - 1);
                constant = std::all_of(tuple.begin(), tuple.end(),
                                       [&](std::int64_t c) { return c == tuple[0]; });
            }
        }
    }

    double scale = 0.0;
    scan_slice_products(hat, nullptr, tuples, [&](const Matrix& h, const Matrix&) {
        scale = std::max(scale, h.norm());
        return true;
    });
    if (!(scale > 0.0))
        throw NumericalError(
            "decompose_symmetric: slice products of the gauge representative vanish on every "
            "verification tuple");

    const RootBasis basis =
        make_root_basis(exact.ring, companion_value, cfg.use_full_product, cfg.tolerances);

    SymmetricResult result;
    result.hatted = exact.ring;
    result.probes = probes;
    result.exact_residual = exact.residual;

    std::vector<std::int64_t> offsets(static_cast<std::size_t>(r), 0);
    double best_sum = std::numeric_limits<double>::infinity();
    double best_max = std::numeric_limits<double>::infinity();
    std::int64_t best_index = -1;
    std::vector<Matrix> best_slices;
    std::int64_t evaluated = 0;
    bool accepted = false;
    while (true) {
        std::vector<Matrix> slices =
            slices_from_basis(exact.ring, basis, offsets);
        double max_rel = 0.0;
        double sum_sq = 0.0;
        const bool complete =
            scan_slice_products(hat, &slices, tuples, [&](const Matrix& h, const Matrix& b) {
                const double diff = (h - b).norm();
                max_rel = std::max(max_rel, diff / scale);
                sum_sq += diff * diff;
                if (cfg.select_best) return sum_sq < best_sum;
                return max_rel <= cfg.accept_tol;
            });
        ++evaluated;
        if (!cfg.select_best) {
            if (complete && max_rel <= cfg.accept_tol) {
                best_index = evaluated - 1;
                best_max = max_rel;
                best_slices = std::move(slices);
                accepted = true;
                break;
            }
        } else if (complete && sum_sq < best_sum) {
            best_sum = sum_sq;
            best_index = evaluated - 1;
            best_max = max_rel;
            best_slices = std::move(slices);
        }
        std::int64_t p = r - 1;
        while (p >= 1 && offsets[static_cast<std::size_t>(p)] == d - 1) {
            offsets[static_cast<std::size_t>(p)] = 0;
            --p;
        }
        if (p < 1) break;
        ++offsets[static_cast<std::size_t>(p)];
    }
    result.candidates_tested = evaluated;
    if (cfg.select_best) accepted = best_index >= 0 && best_max <= cfg.accept_tol;
    if (!accepted)
        throw NoRootMatchesError(
            "decompose_symmetric: none of the " + std::to_string(evaluated) +
            " root assignments matches the recovered decomposition within accept_tol = " +
            format_scalar(cfg.accept_tol));
    result.selected = best_index;
    result.residual = best_max;
    result.shared.order = d;
    result.shared.core = core_from_slices(best_slices);
    return result;
}

}  // namespace

std::vector<Matrix> symmetric_candidate_slices(const RingDecomposition& hatted,
                                               std::int64_t companion_value,
                                               const std::vector<std::int64_t>& root_offsets,
                                               bool use_full_product,
                                               const ToleranceConfig& tolerances) {
    const std::int64_t d = hatted.order();
    const std::int64_t r = hatted.rank();
    const Dims& dims = hatted.mode_dims();
    for (std::int64_t m = 1; m < d; ++m)
        if (dims[static_cast<std::size_t>(m)] != dims[0])
            throw DimensionError("symmetric_candidate_slices: all mode sizes must be equal");
    if (companion_value < 0 || companion_value >= dims[0])
        throw ValidationError("symmetric_candidate_slices: companion value out of range");
    if (static_cast<std::int64_t>(root_offsets.size()) != r)
        throw ValidationError("symmetric_candidate_slices: expected one root offset per bond "
                              "index, got " +
                              std::to_string(root_offsets.size()));
    for (const std::int64_t k : root_offsets)
        if (k < 0 || k >= d)
            throw ValidationError("symmetric_candidate_slices: root offset " + std::to_string(k) +
                                  " out of range [0, " + std::to_string(d) + ")");
    const RootBasis basis = make_root_basis(hatted, companion_value, use_full_product, tolerances);
    return slices_from_basis(hatted, basis, root_offsets);
}

SymmetricResult decompose_symmetric(const TensorAccessor& t, const SymmetricConfig& cfg) {
    const Dims dims = t.dims();
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    if (d < 3)
        throw DimensionError("decompose_symmetric: tensor order must be at least 3, got " +
                             std::to_string(d));
    for (std::int64_t m = 1; m < d; ++m)
        if (dims[static_cast<std::size_t>(m)] != dims[0])
            throw DimensionError("decompose_symmetric: all mode sizes must be equal, got " +
                                 std::to_string(dims[0]) + " and " +
                                 std::to_string(dims[static_cast<std::size_t>(m)]));
    if (cfg.rank < 1)
        throw ValidationError("decompose_symmetric: bond dimension must be positive, got " +
                              std::to_string(cfg.rank));
    if (cfg.rank > kMaxRank)
        throw ValidationError(
            "decompose_symmetric: bond dimension exceeds the supported maximum of " +
            std::to_string(kMaxRank));
    if (dims[0] < cfg.rank * cfg.rank)
        throw DimensionTooSmallError("decompose_symmetric: mode size " + std::to_string(dims[0]) +
                                     " < r*r = " + std::to_string(cfg.rank * cfg.rank));
    if (cfg.sampled_tuples < 1)
        throw ValidationError("decompose_symmetric: sampled_tuples must be positive");
    if (cfg.full_check_limit < 1)
        throw ValidationError("decompose_symmetric: full_check_limit must be positive");

    ProbeConfig probes =
        cfg.probes.has_value() ? *cfg.probes : default_probe_config(dims, cfg.rank);
    validate_probe_config(dims, cfg.rank, probes);
    for (std::int64_t m = 1; m < d; ++m)
        if (probes.companion[static_cast<std::size_t>(m)] != probes.companion[0])
            throw ValidationError(
                "decompose_symmetric: the observation plan must pin one companion value on "
                "every mode");

    const bool masked = dynamic_cast<const MaskedTensorView*>(&t) != nullptr ||
                        dynamic_cast<const CyclicEquivalenceView*>(&t) != nullptr;
    const bool allow_redraw = !cfg.probes.has_value() && !masked;
    const int attempts = allow_redraw ? std::max(cfg.retry_budget, 0) + 1 : 1;
    std::string last_failure;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        try {
            SymmetricResult result = run_symmetric_once(t, cfg, probes);
            result.retries = attempt;
            return result;
        } catch (const NumericalError& err) {
            last_failure = err.what();
            if (attempt + 1 >= attempts) {
                if (allow_redraw && attempts > 1)
                    throw RetriesExhaustedError(
                        "decompose_symmetric: no acceptable weight-sharing decomposition in " +
                        std::to_string(attempts) + " attempts; last failure: " + last_failure);
                throw;
            }
            Rng rng(cfg.seed, "symmetric_redraw", static_cast<std::uint64_t>(attempt));
            probes = symmetric_random_probe_config(dims, cfg.rank, rng);
        }
    }
    throw RetriesExhaustedError("decompose_symmetric: unreachable retry state");  // not reached
}

}  // namespace tr
