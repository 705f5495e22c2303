#pragma once

#include <optional>

#include "tr/numerics.hpp"
#include "tr/rng.hpp"
#include "tr/tensor.hpp"

namespace tr {

/** A pair of lateral slices used as a spectral probe. `first` and `second`
 *  are 0-based middle-mode index tuples of length d-2 (the pinned values of
 *  modes 2..d-1), and `gamma` is the shared 0-based column subset of the last
 *  mode (r*r distinct indices). Both slices use the same subset: the probe's
 *  block spectral structure requires it. */
struct ProbePair {
    MultiIndex first;
    MultiIndex second;
    std::vector<std::int64_t> gamma;
};

/** Full probe/observation plan for the sequential recovery.
 *  - pair_a, pair_b: two probe pairs with {first,second} differing as sets.
 *  - companion: 0-based index tuple of length d whose entries pin the
 *    non-active modes during sequential core recovery (default all-zeros).
 *  - mode_gammas[m]: 0-based column subset of mode m (size r*r) used by the
 *    fiber family whose columns sweep mode m. Families for m = 0..d-2 feed
 *    the recovery of cores 1..d-1; the family for m = d-1 completes the
 *    observable set but is not consumed by the recovery. */
struct ProbeConfig {
    ProbePair pair_a;
    ProbePair pair_b;
    MultiIndex companion;
    std::vector<std::vector<std::int64_t>> mode_gammas;
};

/** Deterministic default plan: companion all-zeros, all column subsets
 *  {0..r*r-1}, probe mids all-zeros with single-coordinate bumps. */
ProbeConfig default_probe_config(const Dims& dims, std::int64_t r);

/** Seeded redraw of the probe mids and column subsets (used when a probe is
 *  rejected for spectral-gap or rank reasons). */
ProbeConfig random_probe_config(const Dims& dims, std::int64_t r, Rng& rng);

/** Validates shapes, ranges, distinctness and the set condition
 *  {pair_a} != {pair_b}; throws ValidationError on violation. */
void validate_probe_config(const Dims& dims, std::int64_t r, const ProbeConfig& cfg);

/** Observable entry set: the four probe slices plus the d fiber families.
 *  Every recovery read of `decompose_exact` under this plan lands inside. */
SampleMask build_sample_mask(const Dims& dims, std::int64_t r, const ProbeConfig& cfg);

/** Observable entry set for the cyclically-symmetric pipeline: the four probe
 *  slices plus the single unrotated fiber family (columns on the last mode).
 *  All mode sizes must be equal; rotated reads are answered through
 *  CyclicEquivalenceView. */
SampleMask build_symmetric_sample_mask(const Dims& dims, std::int64_t r, const ProbeConfig& cfg);

/** How probe eigenvalues are grouped into r clusters of r:
 *  - greedy: exact-arithmetic coincidence grouping within a relative
 *    tolerance; fails loudly when groups are not exactly r of r.
 *  - balanced: size-constrained k-means on (Re, Im) points (noise-tolerant). */
enum class ClusterMethod { greedy, balanced };

/** Eigenbasis of a probe matrix arranged by cluster: column j*r + k holds the
 *  j-th eigenvector of cluster k (clusters ordered lexicographically by the
 *  (Re, Im) of their representative value). */
struct EigenBlockBasis {
    Matrix basis;
    Vector eigenvalues;
    std::vector<Complex> representatives;
    double min_relative_gap = 0.0;
};

/** Groups the r*r largest-modulus eigenvalues of `m` into r clusters of r and
 *  returns the arranged eigenbasis. Throws ClusterToleranceError when the
 *  grouping fails or the between-cluster gap is below
 *  cfg.spectral_gap_min * spectral radius, RankDeficientError when the basis
 *  loses column rank. */
EigenBlockBasis cluster_eigenbasis(const Matrix& m, std::int64_t r, const ToleranceConfig& cfg,
                                   double cluster_tol, ClusterMethod method,
                                   std::uint64_t kmeans_seed = 0, int kmeans_restarts = 10);

/** Probe matrix slice(first) * pinv(slice(second)) for the pair. */
Matrix probe_matrix(const TensorAccessor& t, const ProbePair& pair, const ToleranceConfig& cfg);

/** Rank-(r*r) filtered probe: both slices are replaced by their thin SVD
 *  truncations before the product U1 S1 V1^H V2 S2^{-1} U2^H is formed
 *  (identical to probe_matrix on exact-rank data, better behaved under
 *  noise). Throws RankDeficientError when the second slice's r*r-th singular
 *  value falls below cfg.pinv_rel_tol times its largest. */
Matrix truncated_probe(const TensorAccessor& t, const ProbePair& pair, std::int64_t r,
                       const ToleranceConfig& cfg);

/** probe_eigenbasis = cluster_eigenbasis(probe_matrix(...)). */
EigenBlockBasis probe_eigenbasis(const TensorAccessor& t, const ProbePair& pair, std::int64_t r,
                                 const ToleranceConfig& cfg, double cluster_tol,
                                 ClusterMethod method, std::uint64_t kmeans_seed = 0);

/** Per-cluster change-of-basis correction computed from two arranged
 *  eigenbases: blocks[0] = I and blocks[l] = F^(0,0) * inverse(F^(l,0)) where
 *  F = pinv(E) * E' and F^(j,k) is the r x r sub-matrix of F with rows
 *  {m*r + j} and columns {m*r + k}. `permuted` is the slot-exchanged
 *  block-diagonal matrix actually applied to E. */
struct GaugeFix {
    std::vector<Matrix> blocks;
    Matrix permuted;
};

GaugeFix fix_gauge(const EigenBlockBasis& e, const EigenBlockBasis& e_prime,
                   const ToleranceConfig& cfg);

/** First core from an arranged eigenbasis and its gauge fix:
 *  core slices fold from E * inverse(permuted). */
DenseTensor recover_first_core(const EigenBlockBasis& e, const GaugeFix& fix,
                               const ToleranceConfig& cfg);

}  // namespace tr
