#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tr/decompose.hpp"
#include "tr/harness.hpp"
#include "tr/io.hpp"
#include "tr/mps.hpp"
#include "tr/robust.hpp"
#include "tr/symmetric.hpp"

#ifndef TR_GIT_DESCRIBE
#define TR_GIT_DESCRIBE "unknown"
#endif

namespace {

using nlohmann::json;

tr::Dims parse_dims(const std::string& text) {
    tr::Dims dims;
    std::int64_t current = 0;
    bool have_digit = false;
    for (const char c : text) {
        if (c >= '0' && c <= '9') {
            current = current * 10 + (c - '0');
            have_digit = true;
        } else if (c == 'x' || c == 'X' || c == ',') {
            if (!have_digit) throw tr::ValidationError("parse_dims: empty mode in '" + text + "'");
            dims.push_back(current);
            current = 0;
            have_digit = false;
        } else {
            throw tr::ValidationError("parse_dims: unexpected character '" + std::string(1, c) +
                                      "' in '" + text + "'");
        }
    }
    if (!have_digit) throw tr::ValidationError("parse_dims: empty mode in '" + text + "'");
    dims.push_back(current);
    for (const std::int64_t n : dims) {
        if (n < 1) throw tr::ValidationError("parse_dims: mode sizes must be positive");
    }
    return dims;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

tr::DenseTensor load_tensor(const std::string& path) {
    if (ends_with(path, ".trt")) return tr::read_trt(path);
    if (ends_with(path, ".json")) return tr::read_tensor_json(path);
    throw tr::IoError("load_tensor: unsupported extension on " + path + " (expected .trt or .json)");
}

void save_tensor(const std::string& path, const tr::DenseTensor& t) {
    if (ends_with(path, ".trt")) {
        tr::write_trt(path, t);
    } else if (ends_with(path, ".json")) {
        tr::write_tensor_json(path, t);
    } else {
        throw tr::IoError("save_tensor: unsupported extension on " + path +
                          " (expected .trt or .json)");
    }
}

tr::StoredDecomposition load_cores(const std::string& path) {
    if (ends_with(path, ".trc")) return tr::read_trc(path);
    if (ends_with(path, ".json")) return tr::read_decomposition_json(path);
    throw tr::IoError("load_cores: unsupported extension on " + path + " (expected .trc or .json)");
}

void save_cores(const std::string& path, const tr::StoredDecomposition& d) {
    if (ends_with(path, ".trc")) {
        if (d.is_shared()) {
            tr::write_trc(path, *d.shared);
        } else if (d.ring) {
            tr::write_trc(path, *d.ring);
        } else {
            throw tr::ValidationError("save_cores: empty decomposition");
        }
    } else if (ends_with(path, ".json")) {
        tr::write_decomposition_json(path, d);
    } else {
        throw tr::IoError("save_cores: unsupported extension on " + path +
                          " (expected .trc or .json)");
    }
}

void write_report(const std::string& path, const json& j) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw tr::IoError("write_report: cannot open " + path);
    os << j.dump(2) << "\n";
    if (!os) throw tr::IoError("write_report: stream failure on " + path);
}

/** Streams CSV either to a file or to stdout when no path was given. */
class CsvSink {
public:
    explicit CsvSink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::trunc);
            if (!file_) throw tr::IoError("CsvSink: cannot open " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

json dims_json(const tr::Dims& dims) { return json(dims); }

// ----------------------------------------------------------------- generate

struct GenerateOpts {
    std::string dims_text;
    std::int64_t rank = 1;
    std::uint64_t seed = 0;
    double sigma_signal = 10.0;
    double sigma_noise = 0.0;
    bool complex_entries = false;
    std::string out;
    std::string truth_out;
};

void run_generate(const GenerateOpts& o) {
    tr::TrialSpec spec;
    spec.dims = parse_dims(o.dims_text);
    spec.rank = o.rank;
    spec.seed = o.seed;
    spec.sigma_signal = o.sigma_signal;
    spec.sigma_noise = o.sigma_noise;
    spec.complex_entries = o.complex_entries;
    const tr::Instance inst = tr::generate_instance(spec);
    save_tensor(o.out, inst.tensor);
    if (!o.truth_out.empty()) {
        tr::StoredDecomposition truth;
        truth.ring = inst.truth;
        save_cores(o.truth_out, truth);
    }
    std::cout << "generated " << tr::format_dims(spec.dims) << " rank " << o.rank << " seed "
              << o.seed << ": |clean|=" << inst.clean_norm
              << " hash=" << tr::tensor_hash(inst.tensor) << " -> " << o.out << "\n";
}

// ---------------------------------------------------------------- decompose

struct DecomposeOpts {
    std::string in;
    std::int64_t rank = 1;
    std::string mode = "auto";
    std::uint64_t seed = 0;
    double tol = 1e-8;
    bool tol_set = false;
    double cluster_tol = 1e-6;
    std::string cluster = "greedy";
    int retries = 16;
    std::string probes_path;
    std::string mask = "full";
    int sweeps = 100;
    double epsilon_rel = 1e-10;
    bool select_best = false;
    bool full_product = false;
    std::string out;
    std::string report;
};

tr::ClusterMethod cluster_method_of(const std::string& name) {
    return name == "balanced" ? tr::ClusterMethod::balanced : tr::ClusterMethod::greedy;
}

/** Observation plan + observable entry set for the mask-restricted modes.
 *  Small modes (below r*r) switch the plan to the contracted shape. */
struct ObservedPlan {
    tr::ProbeConfig probes;
    tr::SampleMask mask;
    bool contracted = false;
};

ObservedPlan observed_plan(const tr::Dims& dims, std::int64_t r,
                           const std::optional<tr::ProbeConfig>& pinned) {
    ObservedPlan plan;
    const std::int64_t rr = r * r;
    const bool all_large =
        std::all_of(dims.begin(), dims.end(), [&](std::int64_t n) { return n >= rr; });
    if (all_large) {
        plan.probes = pinned ? *pinned : tr::default_probe_config(dims, r);
        plan.mask = tr::build_sample_mask(dims, r, plan.probes);
        return plan;
    }
    plan.contracted = true;
    const tr::ContractionPlan route = tr::contraction_plan(dims, r);
    plan.probes = pinned ? *pinned : tr::default_probe_config(route.contracted_dims, r);
    plan.mask = tr::build_refined_sample_mask(dims, r, plan.probes);
    return plan;
}

void run_decompose(const DecomposeOpts& o) {
    const tr::DenseTensor t = load_tensor(o.in);
    std::optional<tr::ProbeConfig> pinned;
    if (!o.probes_path.empty()) pinned = tr::read_probe_config_json(o.probes_path);

    json report;
    report["tool"] = "trtool";
    report["version"] = TR_GIT_DESCRIBE;
    report["command"] = "decompose";
    report["mode"] = o.mode;
    report["input"] = o.in;
    report["dims"] = dims_json(t.dims());
    report["rank"] = o.rank;
    report["seed"] = o.seed;

    tr::StoredDecomposition cores;
    const auto start = std::chrono::steady_clock::now();

    if (o.mode == "exact" || o.mode == "auto") {
        tr::DecomposeConfig cfg;
        cfg.rank = o.rank;
        cfg.tol = o.tol;
        cfg.cluster_tol = o.cluster_tol;
        cfg.cluster_method = cluster_method_of(o.cluster);
        cfg.retry_budget = o.retries;
        cfg.seed = o.seed;
        cfg.probes = pinned;
        const tr::DecomposeResult res =
            o.mode == "exact" ? tr::decompose_exact(t, cfg) : tr::decompose_auto(t, cfg);
        cores.ring = res.ring;
        report["residual"] = res.residual;
        report["retries"] = res.retries;
        report["rotation"] = res.rotation;
        report["contracted_modes"] = res.contracted_modes;
        std::cout << "decomposed " << o.in << " (mode " << o.mode << "): residual "
                  << res.residual << ", retries " << res.retries << "\n";
    } else if (o.mode == "refined") {
        const ObservedPlan plan = observed_plan(t.dims(), o.rank, pinned);
        tr::MaskedTensorView view(t, plan.mask);
        tr::DecomposeConfig cfg;
        cfg.rank = o.rank;
        cfg.tol = o.tol;
        cfg.cluster_tol = o.cluster_tol;
        cfg.cluster_method = cluster_method_of(o.cluster);
        cfg.retry_budget = o.retries;
        cfg.seed = o.seed;
        cfg.probes = plan.probes;
        const tr::DecomposeResult res = plan.contracted
                                            ? tr::decompose_with_contraction(view, cfg)
                                            : tr::decompose_exact(view, cfg);
        cores.ring = res.ring;
        report["residual"] = res.residual;
        report["retries"] = res.retries;
        report["rotation"] = res.rotation;
        report["contracted_modes"] = res.contracted_modes;
        report["mask_entries"] = plan.mask.size();
        report["mask_touched"] = view.touched_count();
        report["tensor_entries"] = t.size();
        std::cout << "decomposed " << o.in << " (mode refined): residual " << res.residual
                  << ", observed " << view.touched_count() << "/" << t.size() << " entries\n";
    } else if (o.mode == "symmetric") {
        tr::SymmetricConfig cfg;
        cfg.rank = o.rank;
        if (o.tol_set) cfg.accept_tol = o.tol;
        cfg.cluster_tol = o.cluster_tol;
        cfg.cluster_method = cluster_method_of(o.cluster);
        cfg.retry_budget = o.retries;
        cfg.seed = o.seed;
        cfg.probes = pinned;
        cfg.select_best = o.select_best;
        cfg.use_full_product = o.full_product;
        const tr::SymmetricResult res = tr::decompose_symmetric(t, cfg);
        cores.shared = res.shared;
        report["residual"] = res.residual;
        report["exact_residual"] = res.exact_residual;
        report["candidates_tested"] = res.candidates_tested;
        report["selected_candidate"] = res.selected;
        report["retries"] = res.retries;
        std::cout << "decomposed " << o.in << " (mode symmetric): residual " << res.residual
                  << ", candidates tested " << res.candidates_tested << "\n";
    } else if (o.mode == "robust") {
        tr::SampleMask mask;
        if (o.mask == "full") {
            mask = tr::full_mask(t.dims());
        } else {
            mask = observed_plan(t.dims(), o.rank, pinned).mask;
        }
        tr::RobustConfig cfg;
        cfg.rank = o.rank;
        cfg.seed = o.seed;
        cfg.retry_budget = o.retries;
        cfg.max_sweeps = o.sweeps;
        cfg.epsilon_rel = o.epsilon_rel;
        cfg.probes = pinned;
        const tr::RobustResult res = tr::decompose_robust(t, mask, cfg);
        cores.ring = res.ring;
        report["relative_residual"] = res.relative_residual;
        report["residual"] = res.residual;
        report["sweeps"] = res.sweeps;
        report["init_retries"] = res.init_retries;
        report["residual_history"] = res.residual_history;
        report["mask"] = o.mask;
        report["mask_entries"] = mask.size();
        std::cout << "decomposed " << o.in << " (mode robust): relative residual "
                  << res.relative_residual << " after " << res.sweeps << " sweeps\n";
    } else {
        throw tr::ValidationError("decompose: unknown mode '" + o.mode + "'");
    }

    const auto stop = std::chrono::steady_clock::now();
    report["seconds"] = std::chrono::duration<double>(stop - start).count();

    if (!o.out.empty()) save_cores(o.out, cores);
    if (!o.report.empty()) write_report(o.report, report);
}

// -------------------------------------------------------------------- bench

struct BenchAccuracyOpts {
    bool full_scale = false;
    int seeds = 0;  // 0 keeps each row's default
    std::string out;
};

void run_bench_accuracy(const BenchAccuracyOpts& o) {
    std::vector<tr::AccuracyRow> rows;
    for (tr::AccuracyRow& row : tr::default_accuracy_rows()) {
        const bool slow_row = row.rank == 4;
        if (slow_row && !o.full_scale) continue;
        if (o.seeds > 0) row.seeds = o.seeds;
        rows.push_back(row);
    }
    CsvSink sink(o.out);
    const std::vector<tr::AccuracyResult> results = tr::run_accuracy_table(rows, &std::cerr);
    tr::write_accuracy_csv(sink.stream(), results,
                           {{"tool_version", TR_GIT_DESCRIBE},
                            {"full_scale", o.full_scale ? "1" : "0"}});
}

struct BenchCompareOpts {
    std::string dims_text = "20x20x20";
    std::vector<std::int64_t> ranks{2, 3};
    int seeds = 100;
    int sweeps = 3;
    double sigma_signal = 10.0;
    double sigma_noise = 1.0;
    bool complex_entries = false;
    std::string out;
};

void run_bench_compare(const BenchCompareOpts& o) {
    tr::ComparisonConfig cfg;
    cfg.dims = parse_dims(o.dims_text);
    cfg.ranks = o.ranks;
    cfg.seeds = o.seeds;
    cfg.sweeps = o.sweeps;
    cfg.sigma_signal = o.sigma_signal;
    cfg.sigma_noise = o.sigma_noise;
    cfg.complex_entries = o.complex_entries;
    const std::vector<tr::ComparisonTrial> trials = tr::run_comparison(cfg, &std::cerr);
    CsvSink sink(o.out);
    tr::write_comparison_csv(sink.stream(), trials,
                             {{"tool_version", TR_GIT_DESCRIBE},
                              {"dims", tr::format_dims(cfg.dims)},
                              {"sigma_signal", std::to_string(cfg.sigma_signal)},
                              {"sigma_noise", std::to_string(cfg.sigma_noise)},
                              {"sweeps", std::to_string(cfg.sweeps)}});
    int wins = 0;
    int monotone_violations = 0;
    for (const tr::ComparisonTrial& trial : trials) {
        wins += trial.spectral_wins ? 1 : 0;
        monotone_violations += trial.monotone ? 0 : 1;
    }
    std::cerr << "spectral initialization won " << wins << "/" << trials.size()
              << " paired trials; monotonicity violations: " << monotone_violations << "\n";
}

struct BenchSuccessOpts {
    std::string dims_text = "10x10x10";
    std::int64_t rank = 2;
    std::vector<double> noise_levels{1e-6, 1e-4, 1e-2, 1e-1, 1.0, 3.0};
    int trials = 20;
    int sweeps = 10;
    double sigma_signal = 10.0;
    double threshold = 1e-2;
    bool complex_entries = false;
    std::string out;
};

void run_bench_success(const BenchSuccessOpts& o) {
    tr::SuccessGridConfig cfg;
    cfg.dims = parse_dims(o.dims_text);
    cfg.rank = o.rank;
    cfg.noise_levels = o.noise_levels;
    cfg.trials = o.trials;
    cfg.sweeps = o.sweeps;
    cfg.sigma_signal = o.sigma_signal;
    cfg.success_threshold = o.threshold;
    cfg.complex_entries = o.complex_entries;
    const std::vector<tr::SuccessCell> cells = tr::run_success_grid(cfg, &std::cerr);
    CsvSink sink(o.out);
    tr::write_success_csv(sink.stream(), cells,
                          {{"tool_version", TR_GIT_DESCRIBE},
                           {"dims", tr::format_dims(cfg.dims)},
                           {"rank", std::to_string(cfg.rank)},
                           {"threshold", std::to_string(cfg.success_threshold)}});
}

// ----------------------------------------------------------------- mps-demo

struct MpsDemoOpts {
    std::string dims_text;
    std::int64_t rank = 2;
    std::uint64_t seed = 0;
    std::string out;
    std::string report;
};

void run_mps_demo(const MpsDemoOpts& o) {
    const tr::Dims dims = parse_dims(o.dims_text);
    tr::Rng rng(o.seed, "cores");
    const tr::RingDecomposition state = tr::random_ring(dims, o.rank, rng, 1.0, true);
    tr::SimulatedMarginalSource source(state);
    tr::MpsConfig cfg;
    cfg.rank = o.rank;
    cfg.seed = o.seed;
    const auto start = std::chrono::steady_clock::now();
    const tr::MpsRecovery rec = tr::mps_recover(source, cfg);
    const auto stop = std::chrono::steady_clock::now();
    const tr::DenseTensor reference = tr::ring_reconstruct(state);
    const tr::DenseTensor recovered = tr::ring_reconstruct(rec.ring);
    const tr::DispersionResult disp = tr::ratio_dispersion(reference, recovered);
    std::cout << "recovered " << tr::format_dims(dims) << " rank " << o.rank
              << " state from 3-site marginals: scale (" << disp.scale.real() << ", "
              << disp.scale.imag() << "), ratio dispersion " << disp.dispersion << ", retries "
              << rec.retries << "\n";
    if (!o.out.empty()) {
        tr::StoredDecomposition cores;
        cores.ring = rec.ring;
        save_cores(o.out, cores);
    }
    if (!o.report.empty()) {
        json report;
        report["tool"] = "trtool";
        report["version"] = TR_GIT_DESCRIBE;
        report["command"] = "mps-demo";
        report["dims"] = dims_json(dims);
        report["rank"] = o.rank;
        report["seed"] = o.seed;
        report["scale"] = {disp.scale.real(), disp.scale.imag()};
        report["dispersion"] = disp.dispersion;
        report["retries"] = rec.retries;
        report["seconds"] = std::chrono::duration<double>(stop - start).count();
        write_report(o.report, report);
    }
}

// ------------------------------------------------------------------ convert

struct ConvertOpts {
    std::string in;
    std::string out;
    std::string kind = "tensor";
};

void run_convert(const ConvertOpts& o) {
    if (o.kind == "tensor") {
        save_tensor(o.out, load_tensor(o.in));
    } else if (o.kind == "cores") {
        save_cores(o.out, load_cores(o.in));
    } else {
        throw tr::ValidationError("convert: unknown kind '" + o.kind + "'");
    }
    std::cout << "converted " << o.in << " -> " << o.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trtool: tensor-ring decomposition toolkit"};
    app.require_subcommand(1);

    auto gen = std::make_shared<GenerateOpts>();
    CLI::App* generate = app.add_subcommand(
        "generate", "Generate a random ring instance and write its (optionally noisy) tensor");
    generate->add_option("--dims", gen->dims_text, "Mode sizes, e.g. 10x10x10")->required();
    generate->add_option("--rank", gen->rank, "Bond dimension r")->required();
    generate->add_option("--seed", gen->seed, "Instance seed");
    generate->add_option("--sigma-signal", gen->sigma_signal, "Core entry std deviation");
    generate->add_option("--sigma-noise", gen->sigma_noise, "Additive entry noise std deviation");
    generate->add_flag("--complex", gen->complex_entries, "Complex cores (default real)");
    generate->add_option("--out", gen->out, "Output tensor (.trt or .json)")->required();
    generate->add_option("--truth", gen->truth_out, "Also write the truth cores (.trc or .json)");
    generate->callback([gen] { run_generate(*gen); });

    auto dec = std::make_shared<DecomposeOpts>();
    CLI::App* decompose = app.add_subcommand("decompose", "Decompose a tensor into ring cores");
    decompose->add_option("--in", dec->in, "Input tensor (.trt or .json)")->required();
    decompose->add_option("--rank", dec->rank, "Bond dimension r")->required();
    decompose
        ->add_option("--mode", dec->mode,
                     "exact | auto | refined (mask-restricted reads) | symmetric (shared core) | "
                     "robust (noisy input)")
        ->check(CLI::IsMember({"exact", "auto", "refined", "symmetric", "robust"}));
    decompose->add_option("--seed", dec->seed, "Seed for probe redraws");
    CLI::Option* tol_opt =
        decompose->add_option("--tol", dec->tol, "Verification tolerance (symmetric: accept_tol)");
    decompose->add_option("--cluster-tol", dec->cluster_tol, "Eigenvalue grouping tolerance");
    decompose->add_option("--cluster", dec->cluster, "Eigenvalue grouping method")
        ->check(CLI::IsMember({"greedy", "balanced"}));
    decompose->add_option("--retries", dec->retries, "Observation-plan redraw budget");
    decompose->add_option("--probes", dec->probes_path, "Pinned probe plan (JSON)");
    decompose->add_option("--mask", dec->mask, "robust: fit over all entries or the observed set")
        ->check(CLI::IsMember({"full", "observed"}));
    decompose->add_option("--sweeps", dec->sweeps, "robust: max ALS sweeps");
    decompose->add_option("--epsilon-rel", dec->epsilon_rel, "robust: relative stop threshold");
    decompose->add_flag("--select-best", dec->select_best,
                        "symmetric: scan all root candidates, keep the best");
    decompose->add_flag("--full-product", dec->full_product,
                        "symmetric: extract roots from the full companion slice product");
    decompose->add_option("--out", dec->out, "Output cores (.trc or .json)");
    decompose->add_option("--report", dec->report, "Write a JSON run report");
    decompose->callback([dec, tol_opt] {
        dec->tol_set = tol_opt->count() > 0;
        run_decompose(*dec);
    });

    CLI::App* bench = app.add_subcommand("bench", "Reproducibility studies (CSV output)");
    bench->require_subcommand(1);

    auto acc = std::make_shared<BenchAccuracyOpts>();
    CLI::App* accuracy = bench->add_subcommand(
        "accuracy", "Noiseless recovery accuracy across shapes and ranks (20 seeds per row)");
    accuracy->add_flag("--full-scale", acc->full_scale,
                       "Include the slowest row (20^5 at rank 4)");
    accuracy->add_option("--seeds", acc->seeds, "Override seeds per row");
    accuracy->add_option("--out", acc->out, "CSV path (default: stdout)");
    accuracy->callback([acc] { run_bench_accuracy(*acc); });

    auto cmp = std::make_shared<BenchCompareOpts>();
    CLI::App* compare = bench->add_subcommand(
        "compare", "Spectral vs random initialization for the noisy pipeline (paired seeds)");
    compare->add_option("--dims", cmp->dims_text, "Mode sizes");
    compare->add_option("--ranks", cmp->ranks, "Bond dimensions")->delimiter(',');
    compare->add_option("--seeds", cmp->seeds, "Paired trials per rank");
    compare->add_option("--sweeps", cmp->sweeps, "ALS sweeps in both arms");
    compare->add_option("--sigma-signal", cmp->sigma_signal, "Core entry std deviation");
    compare->add_option("--sigma-noise", cmp->sigma_noise, "Additive noise std deviation");
    compare->add_flag("--complex", cmp->complex_entries, "Complex cores (default real)");
    compare->add_option("--out", cmp->out, "CSV path (default: stdout)");
    compare->callback([cmp] { run_bench_compare(*cmp); });

    auto suc = std::make_shared<BenchSuccessOpts>();
    CLI::App* success = bench->add_subcommand(
        "success-grid", "Recovery success fraction as the noise level grows");
    success->add_option("--dims", suc->dims_text, "Mode sizes");
    success->add_option("--rank", suc->rank, "Bond dimension r");
    success->add_option("--noise-levels", suc->noise_levels, "Noise std deviations")
        ->delimiter(',');
    success->add_option("--trials", suc->trials, "Trials per noise level");
    success->add_option("--sweeps", suc->sweeps, "ALS sweeps per trial");
    success->add_option("--sigma-signal", suc->sigma_signal, "Core entry std deviation");
    success->add_option("--threshold", suc->threshold, "Relative-error success threshold");
    success->add_flag("--complex", suc->complex_entries, "Complex cores (default real)");
    success->add_option("--out", suc->out, "CSV path (default: stdout)");
    success->callback([suc] { run_bench_success(*suc); });

    auto mps = std::make_shared<MpsDemoOpts>();
    CLI::App* mps_demo = app.add_subcommand(
        "mps-demo", "Recover a random ring state from simulated 3-site marginals");
    mps_demo->add_option("--dims", mps->dims_text, "Site dimensions (each >= rank^2)")->required();
    mps_demo->add_option("--rank", mps->rank, "Bond dimension r");
    mps_demo->add_option("--seed", mps->seed, "State and selector seed");
    mps_demo->add_option("--out", mps->out, "Write the recovered cores (.trc or .json)");
    mps_demo->add_option("--report", mps->report, "Write a JSON run report");
    mps_demo->callback([mps] { run_mps_demo(*mps); });

    auto cnv = std::make_shared<ConvertOpts>();
    CLI::App* convert = app.add_subcommand("convert", "Convert between binary and JSON formats");
    convert->add_option("--in", cnv->in, "Input path")->required();
    convert->add_option("--out", cnv->out, "Output path")->required();
    convert->add_option("--kind", cnv->kind, "Payload kind")
        ->check(CLI::IsMember({"tensor", "cores"}));
    convert->callback([cnv] { run_convert(*cnv); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const tr::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const tr::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const tr::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
