#pragma once

#include <optional>
#include <vector>

#include "tr/decompose.hpp"

namespace tr {

/** Options for the noise-robust pipeline (spectral initialization followed by
 *  masked alternating least squares). */
struct RobustConfig {
    /** Target bond dimension r. */
    std::int64_t rank = 1;
    std::uint64_t seed = 0;
    /** Probe redraws granted to the spectral initialization. */
    int retry_budget = 16;
    /** Cap on alternating least-squares sweeps. */
    int max_sweeps = 100;
    /** Stop sweeping once the masked residual drops below
     *  epsilon_rel * (masked norm of the input). */
    double epsilon_rel = 1e-10;
    /** Restarts for the balanced k-means grouping of probe eigenvalues. */
    int kmeans_restarts = 10;
    /** Observation plan for the initialization; deterministic default when
     *  absent. */
    std::optional<ProbeConfig> probes;
    Exec exec = Exec::parallel;
    /** Noise-ready tolerances: the pseudo-inverse cutoff is looser than the
     *  exact pipeline's default because noisy probes carry perturbed small
     *  singular values. */
    ToleranceConfig tolerances{1e-8, 1e-8, 1e-4};
};

/** Mask that marks every entry observed (single family "full"). Refuses
 *  tensors above an internal entry budget since the mask stores each entry. */
SampleMask full_mask(const Dims& dims);

/** Spectral initialization on noisy data: the exact pipeline with
 *  rank-truncated probe assembly and balanced eigenvalue grouping, without
 *  residual verification. On noiseless data this reproduces the exact
 *  decomposition; under noise it lands near the signal ring. */
DecomposeResult robust_initialize(const TensorAccessor& t, const RobustConfig& cfg);

/** One alternating least-squares sweep over all modes (in ring order). Each
 *  mode-k slice row solves its masked linear least-squares problem against
 *  the current remaining cores; rows untouched by the mask keep their slices.
 *  The masked objective is nonincreasing under every row update. */
void masked_als_sweep(const TensorAccessor& t, const SampleMask& mask, RingDecomposition& ring,
                      Exec exec = Exec::parallel);

/** Robust decomposition and its convergence trace. */
struct RobustResult {
    RingDecomposition ring;
    /** Absolute masked residuals; entry 0 is the initialization's, entry s
     *  the residual after sweep s. */
    std::vector<double> residual_history;
    /** Final absolute masked residual. */
    double residual = 0.0;
    /** Final masked residual relative to the masked input norm. */
    double relative_residual = 0.0;
    /** Sweeps performed. */
    int sweeps = 0;
    /** Probe redraws consumed by the initialization (0 with a caller init). */
    int init_retries = 0;
};

/** Noise-robust decomposition: spectral initialization (or the caller's
 *  `init`), then masked alternating least-squares sweeps until the masked
 *  residual falls below epsilon_rel * masked norm or max_sweeps is reached.
 *  Only entries inside `mask` are ever read. */
RobustResult decompose_robust(const TensorAccessor& t, const SampleMask& mask,
                              const RobustConfig& cfg,
                              std::optional<RingDecomposition> init = std::nullopt);

}  // namespace tr
