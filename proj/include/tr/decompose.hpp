#pragma once

#include <optional>

#include "tr/probes.hpp"
#include "tr/ring.hpp"

namespace tr {

/** Options for the finite-step decomposition pipelines. */
struct DecomposeConfig {
    /** Target bond dimension r. */
    std::int64_t rank = 1;
    /** Relative residual accepted during post-recovery verification. Full
     *  inputs are verified entrywise, masked inputs over their mask. */
    double tol = 1e-8;
    /** Relative coincidence threshold when grouping probe eigenvalues. */
    double cluster_tol = 1e-6;
    ClusterMethod cluster_method = ClusterMethod::greedy;
    /** Number of seeded probe redraws after a numerical failure. Redraws only
     *  happen when `probes` is not pinned; with an explicit plan the first
     *  numerical failure is reported as-is. */
    int retry_budget = 16;
    std::uint64_t seed = 0;
    /** Observation plan; the deterministic default plan when absent. */
    std::optional<ProbeConfig> probes;
    /** Verify the recovered decomposition and fail (or retry) above `tol`. */
    bool verify = true;
    /** Assemble probe matrices from rank-truncated factorizations instead of
     *  exact fiber-slice products. Identical results on noiseless data; on
     *  noisy data this suppresses the out-of-subspace noise components. */
    bool truncated_probes = false;
    /** Restarts handed to balanced k-means when it falls back to its seeded
     *  heuristic (large instances only; small instances are exhaustive). */
    int kmeans_restarts = 10;
    ToleranceConfig tolerances;
};

/** Decomposition plus diagnostics about how it was obtained. */
struct DecomposeResult {
    RingDecomposition ring;
    /** The observation plan actually used (after any redraws). */
    ProbeConfig probes;
    /** Probe redraws consumed. */
    int retries = 0;
    /** Relative residual measured during verification (NaN when disabled). */
    double residual = 0.0;
    /** Cyclic rotation applied by the contracted route (0 otherwise). */
    std::int64_t rotation = 0;
    /** Original modes that were merged into a super-mode (empty otherwise). */
    std::vector<std::int64_t> contracted_modes;
};

/** Exact decomposition of an order-2 tensor: T = A * B^T with A the mode-1
 *  reverse-cyclic unfolding of the first core and B the mode-1 forward-cyclic
 *  unfolding of the second. The matrix rank of T must not exceed r*r; when it
 *  is smaller, the spare columns are zero-padded. */
RingDecomposition decompose_order2(const TensorAccessor& t, std::int64_t r,
                                   const ToleranceConfig& cfg = {});

/** Exact finite-step decomposition of an order-d (d >= 3) tensor with every
 *  mode size at least r*r. Two spectral probes fix the first core's bond
 *  basis; the remaining cores follow from fiber slices by linear solves. All
 *  entry reads stay inside build_sample_mask(dims, r, probes), so a masked
 *  view carrying that mask decomposes without touching other entries.
 *  Numerical failures trigger seeded probe redraws (full inputs only, see
 *  DecomposeConfig::retry_budget); RetriesExhaustedError after the budget. */
DecomposeResult decompose_exact(const TensorAccessor& t, const DecomposeConfig& cfg);

/** How the contracted route reshapes a tensor whose small modes prevent the
 *  direct pipeline: the longest cyclic run of modes of size >= r*r is rotated
 *  to the front and all remaining modes are merged into one trailing
 *  super-mode. */
struct ContractionPlan {
    /** Cyclic rotation applied before merging. */
    std::int64_t rotation = 0;
    /** Number of leading (unmerged) modes after rotation. */
    std::int64_t kept = 0;
    /** Shape of the contracted tensor (kept modes + super-mode). */
    Dims contracted_dims;
    /** Original mode ids merged into the super-mode, in merge order. */
    std::vector<std::int64_t> merged_modes;
};

/** Computes the contraction plan. Throws NoValidStartError when no cyclic run
 *  of at least two modes of size >= r*r exists or the merged modes' total size
 *  is below r*r; returns a no-op plan (kept == d) when every mode is large. */
ContractionPlan contraction_plan(const Dims& dims, std::int64_t r);

/** Decomposition via the contracted route: rotate, merge, run decompose_exact
 *  on the contracted tensor, then split the recovered super-core into per-mode
 *  cores using its companion slices. When cfg.probes is set it must refer to
 *  the contracted shape (contraction_plan(dims, r).contracted_dims). */
DecomposeResult decompose_with_contraction(const TensorAccessor& t, const DecomposeConfig& cfg);

/** Observable entry set of the contracted route, expressed in original-tensor
 *  coordinates. `probes` refers to the contracted shape. */
SampleMask build_refined_sample_mask(const Dims& dims, std::int64_t r, const ProbeConfig& probes);

/** Dispatcher: order-2 tensors use decompose_order2, tensors with all modes
 *  >= r*r use decompose_exact, everything else the contracted route. */
DecomposeResult decompose_auto(const TensorAccessor& t, const DecomposeConfig& cfg);

}  // namespace tr
