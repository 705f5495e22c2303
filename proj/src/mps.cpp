#include "tr/mps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "tr/index_ops.hpp"
#include "tr/rng.hpp"

namespace tr {

namespace {

/** Transfer matrix of one site: sum over the physical index of
 *  slice (x) conj(slice). */
Matrix transfer_matrix(const RingDecomposition& ring, std::int64_t m) {
    const std::int64_t r = ring.rank();
    const std::int64_t n = ring.mode_dims()[static_cast<std::size_t>(m)];
    Matrix e = Matrix::Zero(r * r, r * r);
    for (std::int64_t a = 0; a < n; ++a) {
        const Matrix s = ring.slice(m, a);
        e += kron(s, s.conjugate());
    }
    return e;
}

void check_sites(const Dims& dims, const std::array<std::int64_t, 3>& sites, const char* who) {
    const std::int64_t d = static_cast<std::int64_t>(dims.size());
    if (d < 3)
        throw DimensionError(std::string(who) + ": the state must have at least 3 sites, got " +
                             std::to_string(d));
    for (const std::int64_t s : sites)
        if (s < 0 || s >= d)
            throw ValidationError(std::string(who) + ": site " + std::to_string(s) +
                                  " out of range [0, " + std::to_string(d) + ")");
    if (sites[0] == sites[1] || sites[0] == sites[2] || sites[1] == sites[2])
        throw ValidationError(std::string(who) + ": the three sites must be distinct");
}

}  // namespace

double state_norm_squared(const RingDecomposition& ring) {
    const std::int64_t d = ring.order();
    Matrix acc = transfer_matrix(ring, 0);
    for (std::int64_t m = 1; m < d; ++m) acc = acc * transfer_matrix(ring, m);
    return acc.trace().real();
}

Complex MarginalTensor::trace() const { return rho.trace(); }

MarginalTensor simulate_marginal(const RingDecomposition& ring,
                                 std::array<std::int64_t, 3> sites, Exec exec) {
    const Dims dims = ring.mode_dims();
    check_sites(dims, sites, "simulate_marginal");
    std::sort(sites.begin(), sites.end());
    const std::int64_t d = ring.order();
    const std::int64_t r = ring.rank();
    const std::int64_t rr = r * r;

    MarginalTensor out;
    out.sites = sites;
    out.site_dims = {dims[static_cast<std::size_t>(sites[0])],
                     dims[static_cast<std::size_t>(sites[1])],
                     dims[static_cast<std::size_t>(sites[2])]};
    const std::int64_t n0 = out.site_dims[0];
    const std::int64_t n1 = out.site_dims[1];
    const std::int64_t n2 = out.site_dims[2];

    // Transfer products over the three arcs between the sites (identity for
    // adjacent sites); the arc after sites[2] wraps around the ring.
    const auto segment = [&](std::int64_t from, std::int64_t to) {  // product over [from, to)
        Matrix g = Matrix::Identity(rr, rr);
        for (std::int64_t m = from; m < to; ++m) g = g * transfer_matrix(ring, m);
        return g;
    };
    const Matrix g01 = segment(sites[0] + 1, sites[1]);
    const Matrix g12 = segment(sites[1] + 1, sites[2]);
    const Matrix g20 = segment(sites[2] + 1, d) * segment(0, sites[0]);

    // Per-site tables of slice (x) conj(slice), indexed by (a, a').
    const auto site_table = [&](std::int64_t s, std::int64_t n) {
        std::vector<Matrix> f(static_cast<std::size_t>(n * n));
        for (std::int64_t a = 0; a < n; ++a) {
            const Matrix sa = ring.slice(s, a);
            for (std::int64_t ap = 0; ap < n; ++ap)
                f[static_cast<std::size_t>(a + ap * n)] =
                    kron(sa, Matrix(ring.slice(s, ap).conjugate()));
        }
        return f;
    };
    const std::vector<Matrix> f0 = site_table(sites[0], n0);
    const std::vector<Matrix> f1 = site_table(sites[1], n1);
    std::vector<Matrix> f2 = site_table(sites[2], n2);
    // Fold the wrap-around arc into the last site's table so the innermost
    // loop reduces to trace accumulation.
    for (auto& f : f2) f = Matrix(f * g20);

    const std::int64_t total = n0 * n1 * n2;
    out.rho.resize(total, total);

    const auto fill_block = [&](std::int64_t pair0) {
        const std::int64_t a0 = pair0 % n0;
        const std::int64_t a0p = pair0 / n0;
        const Matrix x0 = f0[static_cast<std::size_t>(a0 + a0p * n0)] * g01;
        for (std::int64_t a1p = 0; a1p < n1; ++a1p) {
            for (std::int64_t a1 = 0; a1 < n1; ++a1) {
                const Matrix x1 =
                    Matrix(x0 * f1[static_cast<std::size_t>(a1 + a1p * n1)]) * g12;
                for (std::int64_t a2p = 0; a2p < n2; ++a2p) {
                    for (std::int64_t a2 = 0; a2 < n2; ++a2) {
                        const Matrix& t2 = f2[static_cast<std::size_t>(a2 + a2p * n2)];
                        Complex acc{0.0, 0.0};
                        for (std::int64_t u = 0; u < rr; ++u)
                            for (std::int64_t v = 0; v < rr; ++v) acc += x1(u, v) * t2(v, u);
                        const std::int64_t row = a0 + a1 * n0 + a2 * n0 * n1;
                        const std::int64_t col = a0p + a1p * n0 + a2p * n0 * n1;
                        out.rho(row, col) = acc;
                    }
                }
            }
        }
    };

    bool ran_parallel = false;
    if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t pair0 = 0; pair0 < n0 * n0; ++pair0) fill_block(pair0);
        ran_parallel = true;
#endif
    }
    if (!ran_parallel)
        for (std::int64_t pair0 = 0; pair0 < n0 * n0; ++pair0) fill_block(pair0);
    return out;
}

MarginalTensor dense_marginal(const DenseTensor& psi, std::array<std::int64_t, 3> sites) {
    const Dims& dims = psi.dims();
    check_sites(dims, sites, "dense_marginal");
    std::sort(sites.begin(), sites.end());
    const std::int64_t d = static_cast<std::int64_t>(dims.size());

    MarginalTensor out;
    out.sites = sites;
    out.site_dims = {dims[static_cast<std::size_t>(sites[0])],
                     dims[static_cast<std::size_t>(sites[1])],
                     dims[static_cast<std::size_t>(sites[2])]};
    const std::int64_t n_s = out.site_dims[0] * out.site_dims[1] * out.site_dims[2];
    const std::int64_t total = psi.size();
    const std::int64_t n_env = total / n_s;

    Matrix unfolded(n_s, n_env);
    MultiIndex idx(static_cast<std::size_t>(d));
    for (std::int64_t linear = 0; linear < total; ++linear) {
        std::int64_t rem = linear;
        for (std::int64_t m = 0; m < d; ++m) {
            idx[static_cast<std::size_t>(m)] = rem % dims[static_cast<std::size_t>(m)];
            rem /= dims[static_cast<std::size_t>(m)];
        }
        const std::int64_t row = idx[static_cast<std::size_t>(sites[0])] +
                                 idx[static_cast<std::size_t>(sites[1])] * out.site_dims[0] +
                                 idx[static_cast<std::size_t>(sites[2])] * out.site_dims[0] *
                                     out.site_dims[1];
        std::int64_t col = 0;
        std::int64_t stride = 1;
        for (std::int64_t m = 0; m < d; ++m) {
            if (m == sites[0] || m == sites[1] || m == sites[2]) continue;
            col += idx[static_cast<std::size_t>(m)] * stride;
            stride *= dims[static_cast<std::size_t>(m)];
        }
        unfolded(row, col) = psi[linear];
    }
    out.rho = unfolded * unfolded.adjoint();
    return out;
}

Matrix extract_probe_matrix(const MarginalTensor& marginal, std::int64_t j, std::int64_t k,
                            std::int64_t h, const Vector& v, double scale) {
    if (j == k || j == h || k == h)
        throw ValidationError("extract_probe_matrix: sites j, k, h must be distinct");
    std::array<std::int64_t, 3> pos{-1, -1, -1};  // positions of h, j, k within marginal.sites
    for (std::int64_t p = 0; p < 3; ++p) {
        if (marginal.sites[static_cast<std::size_t>(p)] == h) pos[0] = p;
        if (marginal.sites[static_cast<std::size_t>(p)] == j) pos[1] = p;
        if (marginal.sites[static_cast<std::size_t>(p)] == k) pos[2] = p;
    }
    if (pos[0] < 0 || pos[1] < 0 || pos[2] < 0)
        throw ValidationError("extract_probe_matrix: the marginal does not cover sites {" +
                              std::to_string(h) + ", " + std::to_string(j) + ", " +
                              std::to_string(k) + "}");
    const std::int64_t n_h = marginal.site_dims[static_cast<std::size_t>(pos[0])];
    const std::int64_t n_j = marginal.site_dims[static_cast<std::size_t>(pos[1])];
    const std::int64_t n_k = marginal.site_dims[static_cast<std::size_t>(pos[2])];
    if (v.size() != n_h)
        throw DimensionError("extract_probe_matrix: selector length " + std::to_string(v.size()) +
                             " does not match the auxiliary site dimension " +
                             std::to_string(n_h));
    if (scale == 0.0) throw ValidationError("extract_probe_matrix: scale must be nonzero");

    std::array<std::int64_t, 3> stride_of_pos{1, marginal.site_dims[0],
                                              marginal.site_dims[0] * marginal.site_dims[1]};
    const std::int64_t stride_h = stride_of_pos[static_cast<std::size_t>(pos[0])];
    const std::int64_t stride_j = stride_of_pos[static_cast<std::size_t>(pos[1])];
    const std::int64_t stride_k = stride_of_pos[static_cast<std::size_t>(pos[2])];

    Matrix m = Matrix::Zero(n_k, n_j);
    for (std::int64_t aj = 0; aj < n_j; ++aj) {
        for (std::int64_t ak = 0; ak < n_k; ++ak) {
            Complex acc{0.0, 0.0};
            for (std::int64_t ah = 0; ah < n_h; ++ah) {
                const std::int64_t row = ah * stride_h + aj * stride_j + ak * stride_k;
                for (std::int64_t ahp = 0; ahp < n_h; ++ahp)
                    acc += v(ah) * std::conj(v(ahp)) * marginal.rho(row, ahp * stride_h);
            }
            m(ak, aj) = acc / scale;
        }
    }
    return m;
}

PairRecovery recover_pair(const Matrix& m1, const Matrix& m2, const Matrix& m3, const Matrix& m4,
                          std::int64_t r, const MpsConfig& cfg) {
    const std::int64_t n_k = m1.rows();
    const std::int64_t n_j = m1.cols();
    for (const Matrix* m : {&m2, &m3, &m4})
        if (m->rows() != n_k || m->cols() != n_j)
            throw DimensionError("recover_pair: the four probe matrices must share one shape");
    const std::int64_t rr = r * r;
    if (n_k < rr || n_j < rr)
        throw DimensionTooSmallError("recover_pair: probe matrices of shape " +
                                     std::to_string(n_k) + " x " + std::to_string(n_j) +
                                     " cannot carry bond dimension " + std::to_string(r) +
                                     " (need r*r on both sites)");

    const Matrix pa = m1 * pinv(m2, cfg.tolerances.pinv_rel_tol);
    const Matrix pb = m3 * pinv(m4, cfg.tolerances.pinv_rel_tol);
    const EigenBlockBasis e = cluster_eigenbasis(pa, r, cfg.tolerances, cfg.cluster_tol,
                                                 cfg.cluster_method, cfg.seed,
                                                 cfg.kmeans_restarts);
    const EigenBlockBasis e_prime = cluster_eigenbasis(pb, r, cfg.tolerances, cfg.cluster_tol,
                                                       cfg.cluster_method, cfg.seed + 1,
                                                       cfg.kmeans_restarts);
    const GaugeFix fix = fix_gauge(e, e_prime, cfg.tolerances);

    PairRecovery out;
    out.hat_k = recover_first_core(e, fix, cfg.tolerances);
    const Matrix angle = unfold_angle(out.hat_k, 0);
    if (numerical_rank(svd(angle), cfg.tolerances.pinv_rel_tol) != rr)
        throw RankDeficientError(
            "recover_pair: the recovered site-k factor lost column rank; redraw selectors");
    out.tilde_j = fold_bracket(Matrix((pinv(angle, cfg.tolerances.pinv_rel_tol) * m1).transpose()),
                               Dims{n_j, r, r}, 0);
    return out;
}

RingDecomposition stitch_gauges(const std::vector<PairRecovery>& pairs,
                                const ToleranceConfig& tolerances) {
    const std::int64_t d = static_cast<std::int64_t>(pairs.size());
    if (d < 3)
        throw DimensionError("stitch_gauges: need at least 3 pairs, got " + std::to_string(d));
    const std::int64_t r = pairs[0].hat_k.dims()[1];
    std::vector<DenseTensor> cores(static_cast<std::size_t>(d));
    for (std::int64_t m = 0; m < d; ++m) {
        // Site m is the tilde factor of pair m and the hat factor of the
        // preceding pair; their bracket unfoldings are related by the gauge
        // corrector read off the top-left block.
        const DenseTensor& tilde = pairs[static_cast<std::size_t>(m)].tilde_j;
        const DenseTensor& hat = pairs[static_cast<std::size_t>((m + d - 1) % d)].hat_k;
        if (tilde.dims() != hat.dims())
            throw DimensionError("stitch_gauges: pair factors disagree on the dimension of site " +
                                 std::to_string(m));
        if (tilde.dims()[1] != r || tilde.dims()[2] != r)
            throw DimensionError("stitch_gauges: pair factors disagree on the bond dimension");
        const Matrix bracket_tilde = unfold_bracket(tilde, 0);
        const Matrix bracket_hat = unfold_bracket(hat, 0);
        const Matrix g = pinv(bracket_tilde, tolerances.pinv_rel_tol) * bracket_hat;
        const Matrix corrector = g.topLeftCorner(r, r);
        if (!(corrector.norm() > 1e-10 * g.norm()))
            throw SingularBlockError(
                "stitch_gauges: the gauge corrector block for site " + std::to_string(m) +
                " carries no signal; redraw selectors");
        const Complex det = corrector.determinant();
        const SvdResult dec = svd(corrector);
        if (dec.singular_values(r - 1) <= 1e-12 * dec.singular_values(0))
            throw SingularBlockError("stitch_gauges: the gauge corrector for site " +
                                     std::to_string(m) +
                                     " is numerically singular; redraw selectors");
        const std::int64_t n = tilde.dims()[0];
        std::vector<Matrix> slices(static_cast<std::size_t>(n));
        for (std::int64_t a = 0; a < n; ++a) {
            Matrix s(r, r);
            for (std::int64_t c = 0; c < r; ++c)
                for (std::int64_t b = 0; b < r; ++b) s(b, c) = tilde[a + b * n + c * n * r];
            slices[static_cast<std::size_t>(a)] = corrector.transpose() * s / det;
        }
        cores[static_cast<std::size_t>(m)] = core_from_slices(slices);
    }
    return RingDecomposition(std::move(cores));
}

SimulatedMarginalSource::SimulatedMarginalSource(RingDecomposition state, Exec exec)
    : state_(std::move(state)), exec_(exec) {}

std::int64_t SimulatedMarginalSource::order() const { return state_.order(); }

Dims SimulatedMarginalSource::site_dims() const { return state_.mode_dims(); }

const MarginalTensor& SimulatedMarginalSource::marginal(std::array<std::int64_t, 3> sites) {
    std::sort(sites.begin(), sites.end());
    const auto it = cache_.find(sites);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(sites, simulate_marginal(state_, sites, exec_)).first->second;
}

MpsRecovery mps_recover(MarginalSource& source, const MpsConfig& cfg) {
    const std::int64_t d = source.order();
    const Dims dims = source.site_dims();
    if (d < 3)
        throw DimensionError("mps_recover: the state must have at least 3 sites, got " +
                             std::to_string(d));
    if (static_cast<std::int64_t>(dims.size()) != d)
        throw DimensionError("mps_recover: the source reports inconsistent site dimensions");
    if (cfg.rank < 1)
        throw ValidationError("mps_recover: bond dimension must be positive, got " +
                              std::to_string(cfg.rank));
    if (cfg.rank > kMaxRank)
        throw ValidationError("mps_recover: bond dimension exceeds the supported maximum of " +
                              std::to_string(kMaxRank));
    const std::int64_t rr = cfg.rank * cfg.rank;
    for (std::int64_t m = 0; m < d; ++m)
        if (dims[static_cast<std::size_t>(m)] < rr)
            throw DimensionTooSmallError(
                "mps_recover: site " + std::to_string(m + 1) + " has dimension " +
                std::to_string(dims[static_cast<std::size_t>(m)]) + " < r*r = " +
                std::to_string(rr));

    const int budget = std::max(cfg.retry_budget, 0);
    int total_redraws = 0;
    std::string last_failure;

    const auto recover_pair_at = [&](std::int64_t j, int restart) {
        const std::int64_t k = (j + 1) % d;
        for (int attempt = 0;; ++attempt) {
            try {
                const std::uint64_t counter = (static_cast<std::uint64_t>(restart) << 40) |
                                              (static_cast<std::uint64_t>(j) << 20) |
                                              static_cast<std::uint64_t>(attempt);
                Rng rng(cfg.seed, "mps_selector", counter);
                std::array<Matrix, 4> probes;
                for (int i = 0; i < 4; ++i) {
                    // Auxiliary site uniform over the other d-2 sites.
                    std::int64_t h = rng.uniform_int(0, d - 3);
                    for (const std::int64_t excluded : {std::min(j, k), std::max(j, k)})
                        if (h >= excluded) ++h;
                    const std::int64_t n_h = dims[static_cast<std::size_t>(h)];
                    Vector v(n_h);
                    double norm = 0.0;
                    while (norm < 1e-6) {
                        for (std::int64_t q = 0; q < n_h; ++q) v(q) = rng.normal_complex();
                        norm = v.norm();
                    }
                    v /= norm;
                    std::array<std::int64_t, 3> sites{h, j, k};
                    std::sort(sites.begin(), sites.end());
                    probes[static_cast<std::size_t>(i)] =
                        extract_probe_matrix(source.marginal(sites), j, k, h, v);
                }
                return recover_pair(probes[0], probes[1], probes[2], probes[3], cfg.rank, cfg);
            } catch (const NumericalError& err) {
                last_failure = err.what();
                if (attempt >= budget) throw;
                ++total_redraws;
            }
        }
    };

    for (int restart = 0;; ++restart) {
        try {
            std::vector<PairRecovery> pairs;
            pairs.reserve(static_cast<std::size_t>(d));
            for (std::int64_t j = 0; j < d; ++j) pairs.push_back(recover_pair_at(j, restart));
            MpsRecovery out;
            out.ring = stitch_gauges(pairs, cfg.tolerances);
            out.retries = total_redraws;
            return out;
        } catch (const NumericalError& err) {
            last_failure = err.what();
            if (restart >= budget) {
                if (budget > 0)
                    throw RetriesExhaustedError("mps_recover: no acceptable recovery in " +
                                                std::to_string(budget + 1) +
                                                " restarts; last failure: " + last_failure);
                throw;
            }
            ++total_redraws;
        }
    }
}

DispersionResult ratio_dispersion(const DenseTensor& reference, const DenseTensor& recovered,
                                  double support_rel_tol) {
    if (reference.dims() != recovered.dims())
        throw DimensionError("ratio_dispersion: the states have different shapes");
    const std::int64_t total = reference.size();
    Complex inner{0.0, 0.0};
    double norm_sq = 0.0;
    double max_abs = 0.0;
    for (std::int64_t e = 0; e < total; ++e) {
        inner += std::conj(reference[e]) * recovered[e];
        norm_sq += std::norm(reference[e]);
        max_abs = std::max(max_abs, std::abs(reference[e]));
    }
    if (norm_sq == 0.0)
        throw NumericalError("ratio_dispersion: the reference state is identically zero");
    DispersionResult out;
    out.scale = inner / norm_sq;
    if (std::abs(out.scale) == 0.0) {
        out.dispersion = std::numeric_limits<double>::infinity();
        return out;
    }
    const double threshold = support_rel_tol * max_abs;
    for (std::int64_t e = 0; e < total; ++e) {
        if (std::abs(reference[e]) < threshold) continue;
        out.dispersion = std::max(
            out.dispersion, std::abs(recovered[e] / reference[e] - out.scale) /
                                std::abs(out.scale));
    }
    return out;
}

}  // namespace tr
