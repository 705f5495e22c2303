#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "tr/rng.hpp"
#include "tr/robust.hpp"

namespace tr {

/** Random ring with i.i.d. core entries of standard deviation sigma: real
 *  normal by default, circularly-symmetric complex normal when
 *  complex_entries. Entries are drawn in storage order, so a given (rng
 *  state, shape) pair always yields the same ring. */
RingDecomposition random_ring(const Dims& dims, std::int64_t r, Rng& rng, double sigma = 1.0,
                              bool complex_entries = false);

/** One reproducible experiment instance. */
struct TrialSpec {
    Dims dims;
    std::int64_t rank = 1;
    std::uint64_t seed = 0;
    double sigma_signal = 10.0;
    double sigma_noise = 0.0;
    bool complex_entries = false;
};

struct Instance {
    RingDecomposition truth;
    /** Truth tensor plus noise (equal to the clean tensor when
     *  sigma_noise == 0). */
    DenseTensor tensor;
    /** Frobenius norm of the clean tensor. */
    double clean_norm = 0.0;
};

/** Deterministic instance: cores from random stream "cores", additive noise
 *  from stream "noise" (real on real instances, circularly-symmetric complex
 *  otherwise), both keyed by spec.seed. */
Instance generate_instance(const TrialSpec& spec);

/** FNV-1a hash of the tensor's raw bytes (pairing and determinism checks). */
std::uint64_t tensor_hash(const DenseTensor& t);

/** "12x5x6x7x10" (CSV and CLI form of a shape). */
std::string format_dims(const Dims& dims);

// --------------------------------------------------------------- accuracy study

/** One row of the accuracy study: noiseless instances of one shape/rank. */
struct AccuracyRow {
    Dims dims;
    std::int64_t rank = 1;
    int seeds = 20;
    double sigma_signal = 10.0;
};

/** The six default rows; the first exercises the contracted route (mixed
 *  mode sizes below r*r), the rest the direct pipeline at growing scale. */
std::vector<AccuracyRow> default_accuracy_rows();

struct AccuracyResult {
    AccuracyRow row;
    /** Per-seed relative/absolute reconstruction errors; +inf marks a run
     *  that failed outright (counted in `failures`). */
    std::vector<double> rel_errors;
    std::vector<double> abs_errors;
    int failures = 0;
    double median_rel = 0.0;
    double max_rel = 0.0;
    double median_abs = 0.0;
    double max_abs = 0.0;
    double seconds = 0.0;
};

AccuracyResult run_accuracy_row(const AccuracyRow& row);

/** Runs all rows; with `progress` non-null, prints one line per row. */
std::vector<AccuracyResult> run_accuracy_table(const std::vector<AccuracyRow>& rows,
                                               std::ostream* progress = nullptr);

// -------------------------------------------- spectral vs random initialization

/** Paired comparison of spectral against random initialization under noise:
 *  both arms fit the identical noisy tensor with the same sweep budget. */
struct ComparisonConfig {
    Dims dims{20, 20, 20};
    std::vector<std::int64_t> ranks{2, 3};
    int seeds = 100;
    double sigma_signal = 10.0;
    double sigma_noise = 1.0;
    int sweeps = 3;
    bool complex_entries = false;
};

struct ComparisonTrial {
    std::int64_t rank = 0;
    std::uint64_t seed = 0;
    /** Hash of the shared noisy tensor both arms consumed. */
    std::uint64_t hash = 0;
    /** Masked objective (relative to the noisy input) after the sweeps. */
    double spectral_rel = 0.0;
    double random_rel = 0.0;
    /** Relative error against the noiseless truth. */
    double spectral_clean = 0.0;
    double random_clean = 0.0;
    bool spectral_wins = false;
    /** Masked objective nonincreasing across sweeps in both arms. */
    bool monotone = true;
};

std::vector<ComparisonTrial> run_comparison(const ComparisonConfig& cfg,
                                            std::ostream* progress = nullptr);

// --------------------------------------------------------- success vs noise grid

struct SuccessGridConfig {
    Dims dims{10, 10, 10};
    std::int64_t rank = 2;
    double sigma_signal = 10.0;
    std::vector<double> noise_levels{1e-6, 1e-4, 1e-2, 1e-1, 1.0, 3.0};
    int trials = 20;
    /** A trial succeeds when the fitted ring's relative error against the
     *  clean tensor stays at or below this threshold. */
    double success_threshold = 1e-2;
    int sweeps = 10;
    bool complex_entries = false;
};

struct SuccessCell {
    double sigma_noise = 0.0;
    int trials = 0;
    int successes = 0;
    double fraction = 0.0;
};

std::vector<SuccessCell> run_success_grid(const SuccessGridConfig& cfg,
                                          std::ostream* progress = nullptr);

// ------------------------------------------------------------------- CSV output

/** Writes "# key=value" metadata lines, a comma-joined header, then rows. */
void write_csv(std::ostream& out,
               const std::vector<std::pair<std::string, std::string>>& metadata,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_accuracy_csv(std::ostream& out, const std::vector<AccuracyResult>& results,
                        const std::vector<std::pair<std::string, std::string>>& metadata = {});
void write_comparison_csv(std::ostream& out, const std::vector<ComparisonTrial>& trials,
                          const std::vector<std::pair<std::string, std::string>>& metadata = {});
void write_success_csv(std::ostream& out, const std::vector<SuccessCell>& cells,
                       const std::vector<std::pair<std::string, std::string>>& metadata = {});

}  // namespace tr
