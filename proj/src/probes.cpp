#include "tr/probes.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "tr/cluster.hpp"
#include "tr/index_ops.hpp"

namespace tr {

namespace {

std::vector<std::int64_t> iota_subset(std::int64_t m) {
    std::vector<std::int64_t> g(static_cast<std::size_t>(m));
    std::iota(g.begin(), g.end(), 0);
    return g;
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

void require_order(const Dims& dims, const char* who) {
    if (static_cast<std::int64_t>(dims.size()) < 3)
        throw DimensionError(std::string(who) + ": tensor order must be at least 3, got " +
                             std::to_string(dims.size()));
}

void check_subset(const std::vector<std::int64_t>& gamma, std::int64_t rr, std::int64_t n,
                  const std::string& label) {
    if (static_cast<std::int64_t>(gamma.size()) < rr)
        throw ValidationError("validate_probe_config: " + label + " must select at least r*r = " +
                              std::to_string(rr) + " columns, got " +
                              std::to_string(gamma.size()));
    std::set<std::int64_t> seen;
    for (const std::int64_t g : gamma) {
        if (g < 0 || g >= n)
            throw ValidationError("validate_probe_config: " + label + " index " +
                                  std::to_string(g) + " out of range [0, " + std::to_string(n) +
                                  ")");
        if (!seen.insert(g).second)
            throw ValidationError("validate_probe_config: " + label + " has duplicate index " +
                                  std::to_string(g));
    }
}

void check_mid(const Dims& dims, const MultiIndex& mid, const std::string& label) {
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    if (static_cast<std::int64_t>(mid.size()) != d - 2)
        throw ValidationError("validate_probe_config: " + label + " must pin the " +
                              std::to_string(d - 2) + " middle modes, got " +
                              std::to_string(mid.size()) + " indices");
    for (std::int64_t p = 0; p < d - 2; ++p) {
        if (mid[static_cast<std::size_t>(p)] < 0 ||
            mid[static_cast<std::size_t>(p)] >= dims[static_cast<std::size_t>(p + 1)])
            throw ValidationError("validate_probe_config: " + label + " coordinate " +
                                  std::to_string(p + 1) + " out of range");
    }
}

}  // namespace

ProbeConfig default_probe_config(const Dims& dims, std::int64_t r) {
    require_order(dims, "default_probe_config");
    if (r < 1)
        throw ValidationError("default_probe_config: bond dimension must be positive, got " +
                              std::to_string(r));
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    const std::int64_t rr = r * r;
    for (std::int64_t m = 0; m < d; ++m)
        if (dims[static_cast<std::size_t>(m)] < rr)
            throw DimensionTooSmallError("default_probe_config: mode " + std::to_string(m + 1) +
                                         " has size " +
                                         std::to_string(dims[static_cast<std::size_t>(m)]) +
                                         " < r*r = " + std::to_string(rr));
    const std::int64_t bump_b = (d == 3) ? 2 : 1;
    if (dims[1] <= bump_b)
        throw DimensionTooSmallError(
            "default_probe_config: mode 2 is too small to form two distinct probe slice pairs");
    ProbeConfig cfg;
    cfg.companion = MultiIndex(static_cast<std::size_t>(d), 0);
    cfg.mode_gammas.resize(static_cast<std::size_t>(d));
    for (std::int64_t m = 0; m < d; ++m) cfg.mode_gammas[static_cast<std::size_t>(m)] = iota_subset(rr);
    cfg.pair_a.gamma = iota_subset(rr);
    cfg.pair_b.gamma = iota_subset(rr);
    cfg.pair_a.first = MultiIndex(static_cast<std::size_t>(d - 2), 0);
    cfg.pair_a.second = cfg.pair_a.first;
    cfg.pair_a.second[0] = 1;
    cfg.pair_b.first = cfg.pair_a.first;
    cfg.pair_b.second = cfg.pair_b.first;
    if (d == 3)
        cfg.pair_b.second[0] = 2;
    else
        cfg.pair_b.second[static_cast<std::size_t>(d - 3)] = 1;
    return cfg;
}

ProbeConfig random_probe_config(const Dims& dims, std::int64_t r, Rng& rng) {
    require_order(dims, "random_probe_config");
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    const std::int64_t rr = r * r;
    for (std::int64_t m = 0; m < d; ++m)
        if (dims[static_cast<std::size_t>(m)] < rr)
            throw DimensionTooSmallError("random_probe_config: mode " + std::to_string(m + 1) +
                                         " has size " +
                                         std::to_string(dims[static_cast<std::size_t>(m)]) +
                                         " < r*r = " + std::to_string(rr));
    ProbeConfig cfg;
    cfg.companion.resize(static_cast<std::size_t>(d));
    for (std::int64_t m = 0; m < d; ++m)
        cfg.companion[static_cast<std::size_t>(m)] =
            rng.uniform_int(0, dims[static_cast<std::size_t>(m)] - 1);
    cfg.mode_gammas.resize(static_cast<std::size_t>(d));
    for (std::int64_t m = 0; m < d; ++m)
        cfg.mode_gammas[static_cast<std::size_t>(m)] =
            random_subset(dims[static_cast<std::size_t>(m)], rr, rng);
    cfg.pair_a.gamma = random_subset(dims[static_cast<std::size_t>(d - 1)], rr, rng);
    cfg.pair_b.gamma = random_subset(dims[static_cast<std::size_t>(d - 1)], rr, rng);
    const auto draw_mid = [&]() {
        MultiIndex mid(static_cast<std::size_t>(d - 2));
        for (std::int64_t p = 0; p < d - 2; ++p)
            mid[static_cast<std::size_t>(p)] =
                rng.uniform_int(0, dims[static_cast<std::size_t>(p + 1)] - 1);
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
        "random_probe_config: could not draw two distinct probe slice pairs; middle modes are "
        "too small");
}

void validate_probe_config(const Dims& dims, std::int64_t r, const ProbeConfig& cfg) {
    require_order(dims, "validate_probe_config");
    if (r < 1)
        throw ValidationError("validate_probe_config: bond dimension must be positive, got " +
                              std::to_string(r));
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    const std::int64_t rr = r * r;
    if (static_cast<std::int64_t>(cfg.companion.size()) != d)
        throw ValidationError("validate_probe_config: companion index must have length " +
                              std::to_string(d) + ", got " + std::to_string(cfg.companion.size()));
    for (std::int64_t m = 0; m < d; ++m)
        if (cfg.companion[static_cast<std::size_t>(m)] < 0 ||
            cfg.companion[static_cast<std::size_t>(m)] >= dims[static_cast<std::size_t>(m)])
            throw ValidationError("validate_probe_config: companion coordinate " +
                                  std::to_string(m + 1) + " out of range");
    if (static_cast<std::int64_t>(cfg.mode_gammas.size()) != d)
        throw ValidationError(
            "validate_probe_config: expected one column subset per mode, got " +
            std::to_string(cfg.mode_gammas.size()));
    for (std::int64_t m = 0; m < d; ++m)
        check_subset(cfg.mode_gammas[static_cast<std::size_t>(m)], rr,
                     dims[static_cast<std::size_t>(m)],
                     "mode " + std::to_string(m + 1) + " column subset");
    check_mid(dims, cfg.pair_a.first, "probe pair A, first slice");
    check_mid(dims, cfg.pair_a.second, "probe pair A, second slice");
    check_mid(dims, cfg.pair_b.first, "probe pair B, first slice");
    check_mid(dims, cfg.pair_b.second, "probe pair B, second slice");
    check_subset(cfg.pair_a.gamma, rr, dims[static_cast<std::size_t>(d - 1)],
                 "probe pair A column subset");
    check_subset(cfg.pair_b.gamma, rr, dims[static_cast<std::size_t>(d - 1)],
                 "probe pair B column subset");
    if (cfg.pair_a.first == cfg.pair_a.second)
        throw ValidationError("validate_probe_config: probe pair A slices coincide");
    if (cfg.pair_b.first == cfg.pair_b.second)
        throw ValidationError("validate_probe_config: probe pair B slices coincide");
    const auto as_set = [](const ProbePair& pair) {
        std::pair<MultiIndex, MultiIndex> s(pair.first, pair.second);
        if (s.second < s.first) std::swap(s.first, s.second);
        return s;
    };
    if (as_set(cfg.pair_a) == as_set(cfg.pair_b))
        throw ValidationError("validate_probe_config: the two probe pairs must differ");
}

namespace {

void add_probe_slice(SampleMask& mask, const MultiIndex& mid,
                     const std::vector<std::int64_t>& gamma, std::uint32_t family) {
    const Dims& dims = mask.dims();
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    MultiIndex idx(static_cast<std::size_t>(d), 0);
    for (std::int64_t p = 1; p <= d - 2; ++p)
        idx[static_cast<std::size_t>(p)] = mid[static_cast<std::size_t>(p - 1)];
    for (std::int64_t i = 0; i < dims[0]; ++i) {
        idx[0] = i;
        for (const std::int64_t g : gamma) {
            idx[static_cast<std::size_t>(d - 1)] = g;
            mask.add(idx, family);
        }
    }
}

void add_fiber_family(SampleMask& mask, const ProbeConfig& cfg, std::int64_t m) {
    const Dims& dims = mask.dims();
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    const std::uint32_t family = mask.add_family("fibers:mode" + std::to_string(m + 1));
    const std::int64_t s = (m + 1) % d;
    MultiIndex idx = cfg.companion;
    for (std::int64_t a = 0; a < dims[static_cast<std::size_t>(s)]; ++a) {
        idx[static_cast<std::size_t>(s)] = a;
        for (const std::int64_t g : cfg.mode_gammas[static_cast<std::size_t>(m)]) {
            idx[static_cast<std::size_t>(m)] = g;
            mask.add(idx, family);
        }
    }
}

void add_probe_families(SampleMask& mask, const ProbeConfig& cfg) {
    add_probe_slice(mask, cfg.pair_a.first, cfg.pair_a.gamma, mask.add_family("probe:a:first"));
    add_probe_slice(mask, cfg.pair_a.second, cfg.pair_a.gamma, mask.add_family("probe:a:second"));
    add_probe_slice(mask, cfg.pair_b.first, cfg.pair_b.gamma, mask.add_family("probe:b:first"));
    add_probe_slice(mask, cfg.pair_b.second, cfg.pair_b.gamma, mask.add_family("probe:b:second"));
}

}  // namespace

SampleMask build_sample_mask(const Dims& dims, std::int64_t r, const ProbeConfig& cfg) {
    validate_probe_config(dims, r, cfg);
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    SampleMask mask(dims);
    add_probe_families(mask, cfg);
    for (std::int64_t m = 0; m < d; ++m) add_fiber_family(mask, cfg, m);
    return mask;
}

SampleMask build_symmetric_sample_mask(const Dims& dims, std::int64_t r, const ProbeConfig& cfg) {
    validate_probe_config(dims, r, cfg);
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    for (std::int64_t m = 1; m < d; ++m)
        if (dims[static_cast<std::size_t>(m)] != dims[0])
            throw DimensionError(
                "build_symmetric_sample_mask: all mode sizes must be equal, got " +
                std::to_string(dims[0]) + " and " +
                std::to_string(dims[static_cast<std::size_t>(m)]));
    for (std::int64_t m = 1; m < d; ++m)
        if (cfg.companion[static_cast<std::size_t>(m)] != cfg.companion[0])
            throw ValidationError(
                "build_symmetric_sample_mask: the companion index must be constant so rotated "
                "reads land on stored entries");
    for (std::int64_t m = 0; m < d - 1; ++m)
        if (cfg.mode_gammas[static_cast<std::size_t>(m)] !=
            cfg.mode_gammas[static_cast<std::size_t>(d - 1)])
            throw ValidationError(
                "build_symmetric_sample_mask: all modes must share one column subset so rotated "
                "reads land on stored entries");
    SampleMask mask(dims);
    add_probe_families(mask, cfg);
    add_fiber_family(mask, cfg, d - 1);
    return mask;
}

EigenBlockBasis cluster_eigenbasis(const Matrix& m, std::int64_t r, const ToleranceConfig& cfg,
                                   double cluster_tol, ClusterMethod method,
                                   std::uint64_t kmeans_seed, int kmeans_restarts) {
    if (m.rows() != m.cols())
        throw DimensionError("cluster_eigenbasis: matrix must be square, got " +
                             std::to_string(m.rows()) + " x " + std::to_string(m.cols()));
    const std::int64_t n = m.rows();
    const std::int64_t rr = r * r;
    if (n < rr)
        throw DimensionTooSmallError("cluster_eigenbasis: need r*r = " + std::to_string(rr) +
                                     " significant eigenvalues, matrix has only " +
                                     std::to_string(n));
    const EigResult ed = eig(m, cfg);

    // Signal part: the r*r largest-modulus eigenvalues, deterministically ordered.
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        const double ma = std::abs(ed.values(a));
        const double mb = std::abs(ed.values(b));
        if (ma != mb) return ma > mb;
        if (ed.values(a).real() != ed.values(b).real())
            return ed.values(a).real() < ed.values(b).real();
        return ed.values(a).imag() < ed.values(b).imag();
    });
    std::vector<Complex> points(static_cast<std::size_t>(rr));
    for (std::int64_t i = 0; i < rr; ++i)
        points[static_cast<std::size_t>(i)] = ed.values(order[static_cast<std::size_t>(i)]);
    double radius = 0.0;
    for (const Complex p : points) radius = std::max(radius, std::abs(p));
    if (radius <= 0.0)
        throw ClusterToleranceError(
            "cluster_eigenbasis: all leading eigenvalues vanish; probe matrix has collapsed "
            "rank");

    // Group the signal eigenvalues into r clusters of r.
    std::vector<std::int64_t> assignment(static_cast<std::size_t>(rr), -1);
    if (method == ClusterMethod::greedy) {
        // Single-linkage closure at threshold cluster_tol * radius.
        std::vector<std::int64_t> parent(static_cast<std::size_t>(rr));
        std::iota(parent.begin(), parent.end(), 0);
        const auto find = [&](std::int64_t x) {
            while (parent[static_cast<std::size_t>(x)] != x) {
                parent[static_cast<std::size_t>(x)] =
                    parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
                x = parent[static_cast<std::size_t>(x)];
            }
            return x;
        };
        const double threshold = cluster_tol * radius;
        for (std::int64_t i = 0; i < rr; ++i)
            for (std::int64_t j = i + 1; j < rr; ++j)
                if (std::abs(points[static_cast<std::size_t>(i)] -
                             points[static_cast<std::size_t>(j)]) <= threshold) {
                    const std::int64_t ri = find(i);
                    const std::int64_t rj = find(j);
                    if (ri != rj) parent[static_cast<std::size_t>(rj)] = ri;
                }
        std::vector<std::int64_t> roots;
        for (std::int64_t i = 0; i < rr; ++i) {
            const std::int64_t root = find(i);
            auto it = std::find(roots.begin(), roots.end(), root);
            if (it == roots.end()) {
                assignment[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(roots.size());
                roots.push_back(root);
            } else {
                assignment[static_cast<std::size_t>(i)] =
                    static_cast<std::int64_t>(it - roots.begin());
            }
        }
        if (static_cast<std::int64_t>(roots.size()) != r)
            throw ClusterToleranceError("cluster_eigenbasis: expected " + std::to_string(r) +
                                        " eigenvalue clusters, found " +
                                        std::to_string(roots.size()));
        std::vector<std::int64_t> sizes(static_cast<std::size_t>(r), 0);
        for (const std::int64_t a : assignment) ++sizes[static_cast<std::size_t>(a)];
        for (std::int64_t c = 0; c < r; ++c)
            if (sizes[static_cast<std::size_t>(c)] != r)
                throw ClusterToleranceError(
                    "cluster_eigenbasis: eigenvalue cluster has multiplicity " +
                    std::to_string(sizes[static_cast<std::size_t>(c)]) + ", expected " +
                    std::to_string(r));
    } else {
        const BalancedKmeansResult km =
            balanced_kmeans(points, r, kmeans_seed, kmeans_restarts);
        assignment = km.assignment;
    }

    // Cluster representatives (centroids) and deterministic cluster order.
    std::vector<Complex> reps(static_cast<std::size_t>(r), Complex(0.0, 0.0));
    for (std::int64_t i = 0; i < rr; ++i)
        reps[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])] +=
            points[static_cast<std::size_t>(i)];
    for (auto& rep : reps) rep /= static_cast<double>(r);
    std::vector<std::int64_t> cluster_order(static_cast<std::size_t>(r));
    std::iota(cluster_order.begin(), cluster_order.end(), 0);
    std::stable_sort(cluster_order.begin(), cluster_order.end(),
                     [&](std::int64_t a, std::int64_t b) {
                         const Complex ra = reps[static_cast<std::size_t>(a)];
                         const Complex rb = reps[static_cast<std::size_t>(b)];
                         if (ra.real() != rb.real()) return ra.real() < rb.real();
                         return ra.imag() < rb.imag();
                     });
    std::vector<std::int64_t> relabel(static_cast<std::size_t>(r));
    for (std::int64_t c = 0; c < r; ++c)
        relabel[static_cast<std::size_t>(cluster_order[static_cast<std::size_t>(c)])] = c;

    EigenBlockBasis out;
    out.basis.resize(n, rr);
    out.eigenvalues.resize(rr);
    out.representatives.resize(static_cast<std::size_t>(r));
    for (std::int64_t c = 0; c < r; ++c)
        out.representatives[static_cast<std::size_t>(c)] =
            reps[static_cast<std::size_t>(cluster_order[static_cast<std::size_t>(c)])];

    double min_gap = std::numeric_limits<double>::infinity();
    for (std::int64_t a = 0; a < r; ++a)
        for (std::int64_t b = a + 1; b < r; ++b)
            min_gap = std::min(min_gap, std::abs(out.representatives[static_cast<std::size_t>(a)] -
                                                 out.representatives[static_cast<std::size_t>(b)]));
    out.min_relative_gap = (r == 1) ? 1.0 : min_gap / radius;
    if (out.min_relative_gap < cfg.spectral_gap_min)
        throw ClusterToleranceError(
            "cluster_eigenbasis: eigenvalue clusters are not separated (relative gap " +
            std::to_string(out.min_relative_gap) + ")");

    // Column (member j)*r + (cluster c); members keep modulus-sorted order.
    std::vector<std::int64_t> member_count(static_cast<std::size_t>(r), 0);
    for (std::int64_t i = 0; i < rr; ++i) {
        const std::int64_t c =
            relabel[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])];
        const std::int64_t j = member_count[static_cast<std::size_t>(c)]++;
        out.basis.col(j * r + c) = ed.vectors.col(order[static_cast<std::size_t>(i)]);
        out.eigenvalues(j * r + c) = points[static_cast<std::size_t>(i)];
    }

    const SvdResult basis_svd = svd(out.basis);
    if (numerical_rank(basis_svd, cfg.pinv_rel_tol) != rr)
        throw RankDeficientError(
            "cluster_eigenbasis: arranged eigenbasis lost column rank; probe eigenvectors are "
            "not independent");
    return out;
}

Matrix probe_matrix(const TensorAccessor& t, const ProbePair& pair, const ToleranceConfig& cfg) {
    const Matrix first = fiber_slice(t, pair.first, pair.gamma);
    const Matrix second = fiber_slice(t, pair.second, pair.gamma);
    return first * pinv(second, cfg.pinv_rel_tol);
}

Matrix truncated_probe(const TensorAccessor& t, const ProbePair& pair, std::int64_t r,
                       const ToleranceConfig& cfg) {
    const std::int64_t rr = r * r;
    const Matrix first = fiber_slice(t, pair.first, pair.gamma);
    const Matrix second = fiber_slice(t, pair.second, pair.gamma);
    if (first.rows() < rr || first.cols() < rr)
        throw DimensionTooSmallError("truncated_probe: probe slices of shape " +
                                     std::to_string(first.rows()) + " x " +
                                     std::to_string(first.cols()) +
                                     " cannot carry rank r*r = " + std::to_string(rr));
    const SvdResult sa = svd(first);
    const SvdResult sb = svd(second);
    if (sb.singular_values(rr - 1) <= cfg.pinv_rel_tol * sb.singular_values(0))
        throw RankDeficientError(
            "truncated_probe: second probe slice has numerical rank below r*r");
    const Matrix ua = sa.u.leftCols(rr);
    const Matrix va = sa.v.leftCols(rr);
    const Matrix ub = sb.u.leftCols(rr);
    const Matrix vb = sb.v.leftCols(rr);
    const Eigen::VectorXd da = sa.singular_values.head(rr);
    const Eigen::VectorXd db = sb.singular_values.head(rr);
    return ua * da.asDiagonal() * (va.adjoint() * vb) * db.cwiseInverse().asDiagonal() *
           ub.adjoint();
}

EigenBlockBasis probe_eigenbasis(const TensorAccessor& t, const ProbePair& pair, std::int64_t r,
                                 const ToleranceConfig& cfg, double cluster_tol,
                                 ClusterMethod method, std::uint64_t kmeans_seed) {
    return cluster_eigenbasis(probe_matrix(t, pair, cfg), r, cfg, cluster_tol, method,
                              kmeans_seed);
}

GaugeFix fix_gauge(const EigenBlockBasis& e, const EigenBlockBasis& e_prime,
                   const ToleranceConfig& cfg) {
    if (e.basis.rows() != e_prime.basis.rows() || e.basis.cols() != e_prime.basis.cols())
        throw DimensionError("fix_gauge: eigenbases have mismatched shapes");
    const std::int64_t r = static_cast<std::int64_t>(e.representatives.size());
    const std::int64_t rr = e.basis.cols();
    if (rr != r * r) throw DimensionError("fix_gauge: eigenbasis is not arranged as r clusters of r");
    const Matrix f = pinv(e.basis, cfg.pinv_rel_tol) * e_prime.basis;
    const auto block = [&](std::int64_t j, std::int64_t k) {
        Matrix b(r, r);
        for (std::int64_t m = 0; m < r; ++m)
            for (std::int64_t mp = 0; mp < r; ++mp) b(m, mp) = f(m * r + j, mp * r + k);
        return b;
    };
    GaugeFix fix;
    fix.blocks.resize(static_cast<std::size_t>(r));
    fix.blocks[0] = Matrix::Identity(r, r);
    const Matrix f00 = block(0, 0);
    for (std::int64_t l = 1; l < r; ++l) {
        Matrix fl0 = block(l, 0);
        try {
            fix.blocks[static_cast<std::size_t>(l)] =
                f00 * strict_inverse(fl0, 1e-12, "fix_gauge");
        } catch (const RankDeficientError&) {
            throw SingularBlockError("fix_gauge: correction block " + std::to_string(l) +
                                     " is singular; probes are degenerate");
        }
    }
    fix.permuted = block_transpose(block_diagonal(fix.blocks), r, r);
    return fix;
}

DenseTensor recover_first_core(const EigenBlockBasis& e, const GaugeFix& fix,
                               const ToleranceConfig& /*cfg*/) {
    const std::int64_t r = static_cast<std::int64_t>(fix.blocks.size());
    const Matrix slices = e.basis * strict_inverse(fix.permuted, 1e-12, "recover_first_core");
    return fold_angle(slices, Dims{e.basis.rows(), r, r}, 0);
}

}  // namespace tr
