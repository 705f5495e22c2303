#include "tr/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "tr/decompose.hpp"
#include "tr/errors.hpp"

namespace tr {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double max_of(const std::vector<double>& v) {
    double m = 0.0;
    for (const double x : v) m = std::max(m, x);
    return m;
}

std::string fmt(double v) {
    std::ostringstream oss;
    oss << std::setprecision(16) << v;
    return oss.str();
}

std::string fmt(std::int64_t v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "1" : "0"; }

/** Nonincreasing up to an absolute slack tied to the starting level. */
bool is_monotone(const std::vector<double>& history) {
    if (history.empty()) return true;
    const double slack = 1e-12 * std::max(1.0, history.front());
    for (std::size_t i = 0; i + 1 < history.size(); ++i) {
        if (history[i + 1] > history[i] + slack) return false;
    }
    return true;
}

}  // namespace

RingDecomposition random_ring(const Dims& dims, std::int64_t r, Rng& rng, double sigma,
                              bool complex_entries) {
    if (dims.empty()) throw ValidationError("random_ring: dims must be non-empty");
    if (r < 1 || r > kMaxRank) {
        throw ValidationError("random_ring: rank " + std::to_string(r) + " outside [1, " +
                              std::to_string(kMaxRank) + "]");
    }
    std::vector<DenseTensor> cores;
    cores.reserve(dims.size());
    for (const std::int64_t n : dims) {
        if (n < 1) throw ValidationError("random_ring: mode dimensions must be positive");
        DenseTensor core(Dims{n, r, r});
        for (Complex& x : core.data()) {
            x = complex_entries ? sigma * rng.normal_complex() : Complex(sigma * rng.normal(), 0.0);
        }
        cores.push_back(std::move(core));
    }
    return RingDecomposition(std::move(cores));
}

Instance generate_instance(const TrialSpec& spec) {
    Rng core_rng(spec.seed, "cores");
    Instance inst;
    inst.truth = random_ring(spec.dims, spec.rank, core_rng, spec.sigma_signal,
                             spec.complex_entries);
    inst.tensor = ring_reconstruct(inst.truth);
    inst.clean_norm = inst.tensor.frobenius_norm();
    if (spec.sigma_noise > 0.0) {
        Rng noise_rng(spec.seed, "noise");
        for (Complex& x : inst.tensor.data()) {
            x += spec.complex_entries ? spec.sigma_noise * noise_rng.normal_complex()
                                      : Complex(spec.sigma_noise * noise_rng.normal(), 0.0);
        }
    }
    return inst;
}

std::uint64_t tensor_hash(const DenseTensor& t) {
    return fnv1a(t.data().data(), t.data().size() * sizeof(Complex));
}

std::string format_dims(const Dims& dims) {
    std::string out;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i > 0) out += 'x';
        out += std::to_string(dims[i]);
    }
    return out;
}

std::vector<AccuracyRow> default_accuracy_rows() {
    return {
        {Dims{12, 5, 6, 7, 10}, 3, 20, 10.0},
        {Dims{10, 10, 10, 10, 10}, 2, 20, 10.0},
        {Dims{20, 20, 20, 20, 20}, 2, 20, 10.0},
        {Dims{20, 20, 20, 20, 20}, 4, 20, 10.0},
        {Dims{10, 10, 10, 10, 10, 10}, 2, 20, 10.0},
        {Dims{10, 10, 10, 10, 10, 10, 10}, 2, 20, 10.0},
    };
}

AccuracyResult run_accuracy_row(const AccuracyRow& row) {
    AccuracyResult result;
    result.row = row;
    const auto start = std::chrono::steady_clock::now();
    for (int s = 0; s < row.seeds; ++s) {
        TrialSpec spec;
        spec.dims = row.dims;
        spec.rank = row.rank;
        spec.seed = static_cast<std::uint64_t>(s);
        spec.sigma_signal = row.sigma_signal;
        const Instance inst = generate_instance(spec);
        double rel = kInf;
        try {
            DecomposeConfig cfg;
            cfg.rank = row.rank;
            cfg.seed = static_cast<std::uint64_t>(s);
            const DecomposeResult dr = decompose_auto(inst.tensor, cfg);
            rel = dr.residual;
        } catch (const NumericalError&) {
            ++result.failures;
        }
        result.rel_errors.push_back(rel);
        result.abs_errors.push_back(rel * inst.clean_norm);
    }
    const auto stop = std::chrono::steady_clock::now();
    result.seconds = std::chrono::duration<double>(stop - start).count();
    result.median_rel = median_of(result.rel_errors);
    result.max_rel = max_of(result.rel_errors);
    result.median_abs = median_of(result.abs_errors);
    result.max_abs = max_of(result.abs_errors);
    return result;
}

std::vector<AccuracyResult> run_accuracy_table(const std::vector<AccuracyRow>& rows,
                                               std::ostream* progress) {
    std::vector<AccuracyResult> results;
    results.reserve(rows.size());
    for (const AccuracyRow& row : rows) {
        results.push_back(run_accuracy_row(row));
        if (progress != nullptr) {
            const AccuracyResult& r = results.back();
            (*progress) << format_dims(row.dims) << " r=" << row.rank
                        << ": median_rel=" << fmt(r.median_rel) << " max_rel=" << fmt(r.max_rel)
                        << " failures=" << r.failures << " (" << fmt(r.seconds) << "s)"
                        << std::endl;
        }
    }
    return results;
}

std::vector<ComparisonTrial> run_comparison(const ComparisonConfig& cfg, std::ostream* progress) {
    if (cfg.seeds < 1) throw ValidationError("run_comparison: seeds must be positive");
    if (cfg.sweeps < 0) throw ValidationError("run_comparison: sweeps must be non-negative");
    std::vector<ComparisonTrial> trials;
    const SampleMask mask = full_mask(cfg.dims);
    for (const std::int64_t rank : cfg.ranks) {
        for (int s = 0; s < cfg.seeds; ++s) {
            TrialSpec spec;
            spec.dims = cfg.dims;
            spec.rank = rank;
            spec.seed = static_cast<std::uint64_t>(s);
            spec.sigma_signal = cfg.sigma_signal;
            spec.sigma_noise = cfg.sigma_noise;
            spec.complex_entries = cfg.complex_entries;
            const Instance inst = generate_instance(spec);

            ComparisonTrial trial;
            trial.rank = rank;
            trial.seed = spec.seed;
            trial.hash = tensor_hash(inst.tensor);

            RobustConfig rc;
            rc.rank = rank;
            rc.seed = spec.seed;
            rc.max_sweeps = cfg.sweeps;
            rc.epsilon_rel = 0.0;  // run the fixed sweep budget in both arms

            bool spectral_monotone = true;
            try {
                const RobustResult a = decompose_robust(inst.tensor, mask, rc);
                trial.spectral_rel = a.relative_residual;
                trial.spectral_clean = ring_relative_error(inst.truth, a.ring);
                spectral_monotone = is_monotone(a.residual_history);
            } catch (const NumericalError&) {
                trial.spectral_rel = kInf;
                trial.spectral_clean = kInf;
            }

            bool random_monotone = true;
            try {
                Rng init_rng(spec.seed, "random_init");
                const RingDecomposition init =
                    random_ring(cfg.dims, rank, init_rng, cfg.sigma_signal, cfg.complex_entries);
                const RobustResult b = decompose_robust(inst.tensor, mask, rc, init);
                trial.random_rel = b.relative_residual;
                trial.random_clean = ring_relative_error(inst.truth, b.ring);
                random_monotone = is_monotone(b.residual_history);
            } catch (const NumericalError&) {
                trial.random_rel = kInf;
                trial.random_clean = kInf;
            }

            trial.spectral_wins = trial.spectral_rel < trial.random_rel;
            trial.monotone = spectral_monotone && random_monotone;
            trials.push_back(trial);
            if (progress != nullptr && (s + 1) % 25 == 0) {
                (*progress) << "rank " << rank << ": " << (s + 1) << "/" << cfg.seeds
                            << " trials" << std::endl;
            }
        }
    }
    return trials;
}

std::vector<SuccessCell> run_success_grid(const SuccessGridConfig& cfg, std::ostream* progress) {
    if (cfg.trials < 1) throw ValidationError("run_success_grid: trials must be positive");
    std::vector<SuccessCell> cells;
    const SampleMask mask = full_mask(cfg.dims);
    for (const double sigma_noise : cfg.noise_levels) {
        SuccessCell cell;
        cell.sigma_noise = sigma_noise;
        cell.trials = cfg.trials;
        for (int s = 0; s < cfg.trials; ++s) {
            TrialSpec spec;
            spec.dims = cfg.dims;
            spec.rank = cfg.rank;
            spec.seed = static_cast<std::uint64_t>(s);
            spec.sigma_signal = cfg.sigma_signal;
            spec.sigma_noise = sigma_noise;
            spec.complex_entries = cfg.complex_entries;
            const Instance inst = generate_instance(spec);
            try {
                RobustConfig rc;
                rc.rank = cfg.rank;
                rc.seed = spec.seed;
                rc.max_sweeps = cfg.sweeps;
                const RobustResult fit = decompose_robust(inst.tensor, mask, rc);
                if (ring_relative_error(inst.truth, fit.ring) <= cfg.success_threshold) {
                    ++cell.successes;
                }
            } catch (const NumericalError&) {
                // counted as a failure
            }
        }
        cell.fraction = static_cast<double>(cell.successes) / static_cast<double>(cell.trials);
        cells.push_back(cell);
        if (progress != nullptr) {
            (*progress) << "sigma_noise=" << fmt(sigma_noise) << ": " << cell.successes << "/"
                        << cell.trials << " recovered" << std::endl;
        }
    }
    return cells;
}

void write_csv(std::ostream& out,
               const std::vector<std::pair<std::string, std::string>>& metadata,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    for (const auto& [key, value] : metadata) out << "# " << key << "=" << value << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i > 0) out << ',';
        out << header[i];
    }
    out << "\n";
    for (const auto& row : rows) {
        if (row.size() != header.size()) {
            throw ValidationError("write_csv: row width does not match the header");
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out << ',';
            out << row[i];
        }
        out << "\n";
    }
}

void write_accuracy_csv(std::ostream& out, const std::vector<AccuracyResult>& results,
                        const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(results.size());
    for (const AccuracyResult& r : results) {
        rows.push_back({format_dims(r.row.dims), fmt(r.row.rank), fmt(r.row.seeds),
                        fmt(r.failures), fmt(r.median_rel), fmt(r.max_rel), fmt(r.median_abs),
                        fmt(r.max_abs), fmt(r.seconds)});
    }
    write_csv(out, metadata,
              {"dims", "rank", "seeds", "failures", "median_rel", "max_rel", "median_abs",
               "max_abs", "seconds"},
              rows);
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonTrial>& trials,
                          const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(trials.size());
    for (const ComparisonTrial& t : trials) {
        rows.push_back({fmt(t.rank), fmt(t.seed), fmt(t.hash), fmt(t.spectral_rel),
                        fmt(t.random_rel), fmt(t.spectral_clean), fmt(t.random_clean),
                        fmt(t.spectral_wins), fmt(t.monotone)});
    }
    write_csv(out, metadata,
              {"rank", "seed", "tensor_hash", "spectral_rel", "random_rel", "spectral_clean",
               "random_clean", "spectral_wins", "monotone"},
              rows);
}

void write_success_csv(std::ostream& out, const std::vector<SuccessCell>& cells,
                       const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(cells.size());
    for (const SuccessCell& c : cells) {
        rows.push_back({fmt(c.sigma_noise), fmt(c.trials), fmt(c.successes), fmt(c.fraction)});
    }
    write_csv(out, metadata, {"sigma_noise", "trials", "successes", "fraction"}, rows);
}

}  // namespace tr
