#pragma once

#include <array>
#include <map>
#include <vector>

#include "tr/probes.hpp"
#include "tr/ring.hpp"

namespace tr {

/** Squared 2-norm of the state represented by the ring (sum of squared entry
 *  moduli), contracted through transfer matrices without materializing it. */
double state_norm_squared(const RingDecomposition& ring);

/** Three-site reduced density matrix of a ring state. */
struct MarginalTensor {
    /** The three sites, ascending. */
    std::array<std::int64_t, 3> sites{};
    /** Their physical dimensions, in `sites` order. */
    Dims site_dims;
    /** rho(alpha, alpha') with both index triples packed column-major over
     *  `sites` (first site fastest). */
    Matrix rho;
    /** tr(rho); equals the squared state norm for every site choice. */
    Complex trace() const;
};

/** Marginal over three distinct sites, contracted through per-site transfer
 *  matrices (cost scales with the product of the squared site dimensions and
 *  r^4, never with the full state). */
MarginalTensor simulate_marginal(const RingDecomposition& ring,
                                 std::array<std::int64_t, 3> sites, Exec exec = Exec::parallel);

/** Reference marginal computed densely from an explicit state tensor. */
MarginalTensor dense_marginal(const DenseTensor& psi, std::array<std::int64_t, 3> sites);

/** Probe matrix extracted from a three-site marginal: the auxiliary site h is
 *  contracted against the rank-one selector v v^H across the unprimed/primed
 *  pair, the primed indices of j and k are pinned to 0, and the result is
 *  laid out as M(alpha_k, alpha_j) and divided by `scale`. */
Matrix extract_probe_matrix(const MarginalTensor& marginal, std::int64_t j, std::int64_t k,
                            std::int64_t h, const Vector& v, double scale = 1.0);

/** Recovered factors of one adjacent pair (j, k = j+1 mod d): the site-k core
 *  in the pair's bond gauge and the site-j core in the complementary gauge. */
struct PairRecovery {
    DenseTensor hat_k;
    DenseTensor tilde_j;
};

/** Options for the marginal-driven recovery. */
struct MpsConfig {
    /** Target bond dimension r. */
    std::int64_t rank = 1;
    /** Relative coincidence threshold when grouping probe eigenvalues. */
    double cluster_tol = 1e-6;
    ClusterMethod cluster_method = ClusterMethod::greedy;
    int kmeans_restarts = 10;
    /** Selector redraws granted per pair, and full restarts granted when
     *  stitching hits a degenerate corrector. */
    int retry_budget = 16;
    std::uint64_t seed = 0;
    ToleranceConfig tolerances;
};

/** Recovers one pair from four probe matrices of that pair (four independent
 *  selectors). Numerical failures (cluster collisions, rank loss) propagate;
 *  callers respond by redrawing selectors. */
PairRecovery recover_pair(const Matrix& m1, const Matrix& m2, const Matrix& m3, const Matrix& m4,
                          std::int64_t r, const MpsConfig& cfg);

/** Aligns the per-pair gauges into one consistent ring; pairs[p] must hold
 *  the recovery of pair (p, p+1 mod d). The output reproduces the state up to
 *  one global scalar. */
RingDecomposition stitch_gauges(const std::vector<PairRecovery>& pairs,
                                const ToleranceConfig& tolerances = {});

/** Source of three-site marginals: the recovery's only input channel.
 *  Returned references stay valid until the source is destroyed. */
class MarginalSource {
public:
    virtual ~MarginalSource() = default;
    virtual std::int64_t order() const = 0;
    virtual Dims site_dims() const = 0;
    /** Marginal over three distinct ascending sites. */
    virtual const MarginalTensor& marginal(std::array<std::int64_t, 3> sites) = 0;
};

/** Marginals simulated from a reference ring state, cached per site triple. */
class SimulatedMarginalSource : public MarginalSource {
public:
    explicit SimulatedMarginalSource(RingDecomposition state, Exec exec = Exec::parallel);
    std::int64_t order() const override;
    Dims site_dims() const override;
    const MarginalTensor& marginal(std::array<std::int64_t, 3> sites) override;
    const RingDecomposition& state() const { return state_; }

private:
    RingDecomposition state_;
    Exec exec_;
    std::map<std::array<std::int64_t, 3>, MarginalTensor> cache_;
};

/** Recovered ring plus diagnostics. */
struct MpsRecovery {
    RingDecomposition ring;
    /** Selector redraws consumed (per-pair redraws and full restarts). */
    int retries = 0;
};

/** Recovers a ring decomposition of an order-d state (d >= 3, every site
 *  dimension >= r*r) from three-site marginals alone. The result matches the
 *  state up to one global scalar; compare with ratio_dispersion. */
MpsRecovery mps_recover(MarginalSource& source, const MpsConfig& cfg);

/** Proportionality diagnostics between a reference state and a recovered
 *  one: `scale` is the least-squares global factor <ref, rec> / <ref, ref>
 *  and `dispersion` the worst relative deviation of the entrywise ratios
 *  from it, over entries with |ref| >= support_rel_tol * max|ref|. */
struct DispersionResult {
    Complex scale{0.0, 0.0};
    double dispersion = 0.0;
};

DispersionResult ratio_dispersion(const DenseTensor& reference, const DenseTensor& recovered,
                                  double support_rel_tol = 1e-8);

}  // namespace tr
