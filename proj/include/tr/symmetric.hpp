#pragma once

#include <optional>
#include <vector>

#include "tr/decompose.hpp"
#include "tr/io.hpp"

namespace tr {

/** Options for the weight-sharing (one core repeated on every mode) recovery. */
struct SymmetricConfig {
    /** Target bond dimension r. */
    std::int64_t rank = 1;
    /** Relative deviation accepted when a candidate's slice products are
     *  checked against the gauge representative's (and when the inner
     *  per-mode pipeline verifies its own reconstruction). */
    double accept_tol = 1e-7;
    /** Relative coincidence threshold when grouping probe eigenvalues. */
    double cluster_tol = 1e-6;
    ClusterMethod cluster_method = ClusterMethod::greedy;
    /** Seeded redraws of the observation plan after a numerical failure.
     *  Redraws only happen for full inputs without a pinned plan; masked
     *  inputs are bound to the plan their mask was built from. */
    int retry_budget = 16;
    std::uint64_t seed = 0;
    /** Observation plan; must have a constant companion index. Defaults to
     *  the deterministic plan, which is compatible with the reduced mask. */
    std::optional<ProbeConfig> probes;
    /** Candidate checks enumerate every index tuple while n^d stays at or
     *  below this limit and fall back to seeded sampling above it. */
    std::int64_t full_check_limit = 1'000'000;
    /** Tuples drawn (non-constant, seeded) when sampling is in effect. */
    std::int64_t sampled_tuples = 4096;
    /** Build the eigenvalue-extraction matrix from the product of all d
     *  companion slices instead of the first two only. The two coincide in
     *  exact arithmetic because the sequential recovery pins every companion
     *  slice after the second to the identity; the full product folds in the
     *  trailing slices' numerical error. */
    bool use_full_product = false;
    /** Evaluate every root assignment and keep the one with the smallest
     *  total squared deviation instead of accepting the first within
     *  accept_tol. Slower; intended for noisy inputs. */
    bool select_best = false;
    ToleranceConfig tolerances;
};

/** Weight-sharing decomposition plus diagnostics. */
struct SymmetricResult {
    /** The recovered shared core (the same core reproduces every mode). */
    SharedCoreRing shared;
    /** Per-mode gauge representative recovered by the exact pipeline. */
    RingDecomposition hatted;
    /** The observation plan actually used (after any redraws). */
    ProbeConfig probes;
    /** Root assignments evaluated before acceptance. */
    std::int64_t candidates_tested = 0;
    /** Lexicographic index of the accepted root assignment. */
    std::int64_t selected = 0;
    /** Worst relative deviation between the slice products of the shared and
     *  hatted decompositions over the verification tuple set. */
    double residual = 0.0;
    /** Verification residual of the inner per-mode pipeline. */
    double exact_residual = 0.0;
    /** Observation-plan redraws consumed. */
    int retries = 0;
};

/** Shared-core slices implied by the root assignment `root_offsets` (one
 *  entry per bond index; entry j selects the branch exp(2*pi*i*k_j/d) on top
 *  of the principal d-th root). Exposed so tests can inspect rejected
 *  candidates. `hatted` must come from decompose_exact on a weight-sharing
 *  tensor (its trailing companion slices are identities) and
 *  `companion_value` must be its constant companion. */
std::vector<Matrix> symmetric_candidate_slices(const RingDecomposition& hatted,
                                               std::int64_t companion_value,
                                               const std::vector<std::int64_t>& root_offsets,
                                               bool use_full_product = false,
                                               const ToleranceConfig& tolerances = {});

/** Recovers a weight-sharing decomposition of a tensor with equal mode sizes:
 *  a single core Q with T(a_1,...,a_d) = tr(Q^(a_1) ... Q^(a_d)). Runs the
 *  exact per-mode pipeline, extracts the shared core's companion slice as a
 *  d-th root of the recovered slice product, and resolves the root-branch
 *  ambiguity (at most d^(r-1) candidates; the overall d-th root of unity is
 *  unobservable and pinned to the principal branch) by checking slice
 *  products against the gauge representative. Throws NoRootMatchesError when
 *  no candidate passes. Masked inputs must wrap their reduced mask in
 *  CyclicEquivalenceView and pin the plan the mask was built from. */
SymmetricResult decompose_symmetric(const TensorAccessor& t, const SymmetricConfig& cfg);

}  // namespace tr
