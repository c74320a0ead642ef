// uqsup: command-line front end for quantification, threshold calibration,
// supervised evaluation, rank comparison, sample-size sweeps and grid
// sensitivity. Exit codes: 0 success, 2 usage or precondition failure,
// 1 internal error.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uqsup/uqsup.hpp"

namespace fs = std::filesystem;
using namespace uqsup;
using io::json;

namespace {

// Usage or precondition failure reported by a command (exit code 2).
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

QuantifierId quantifier_arg(const std::string& name) {
    const auto q = parse_quantifier(name);
    if (!q) throw usage_error("unknown quantifier '" + name + "'");
    return *q;
}

CalibrationMode mode_arg(const std::string& name) {
    const auto m = parse_mode(name);
    if (!m) throw usage_error("unknown mode '" + name + "' (expected above or at-most)");
    return *m;
}

// "2..50", "2,5,10" or a mix such as "2..10,20".
std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            if (const auto dots = part.find(".."); dots != std::string::npos) {
                const std::size_t lo = std::stoul(part.substr(0, dots));
                const std::size_t hi = std::stoul(part.substr(dots + 2));
                if (hi < lo) throw usage_error("empty size range '" + part + "'");
                for (std::size_t s = lo; s <= hi; ++s) out.push_back(s);
            } else {
                out.push_back(std::stoul(part));
            }
        } catch (const std::logic_error&) {
            throw usage_error("malformed size list '" + text + "'");
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) throw usage_error("empty size list");
    return out;
}

std::map<std::string, std::string> parse_meta(const std::vector<std::string>& pairs) {
    std::map<std::string, std::string> out;
    for (const auto& p : pairs) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) throw usage_error("--meta expects key=value, got '" + p + "'");
        out[p.substr(0, eq)] = p.substr(eq + 1);
    }
    return out;
}

struct ObjectiveArgs {
    std::string kind = "accuracy";
    double lower = 0.0;
    double upper = 1.0;

    ObjectiveSpec spec() const {
        if (kind == "accuracy") return ObjectiveSpec::accuracy();
        if (kind == "mse") return ObjectiveSpec::mean_squared_error(lower, upper);
        throw usage_error("unknown objective '" + kind + "' (expected accuracy or mse)");
    }

    void add_to(CLI::App* cmd) {
        cmd->add_option("--objective", kind, "accuracy or mse")->capture_default_str();
        cmd->add_option("--obj-lower", lower, "lower normalization bound (mse)")->capture_default_str();
        cmd->add_option("--obj-upper", upper, "upper normalization bound (mse)")->capture_default_str();
    }
};

std::string fmt_eps(double e) { return detail::fmt_g(e); }

json manifest(const std::string& command, const std::vector<std::string>& inputs,
              const std::map<std::string, json>& fields) {
    json m;
    m["command"] = command;
    m["inputs"] = inputs;
    for (const auto& [k, v] : fields) m[k] = v;
    return m;
}

// ---------------------------------------------------------------------------

struct QuantifyArgs {
    std::string records;
    std::string quantifier = "all";
    std::string out;
};

std::string quantify_table(const Dataset& d, QuantifierId q) {
    std::ostringstream ss;
    ss << "# quantifier=" << to_string(q) << " orientation=" << to_string(orientation_of(q)) << "\n";
    ss << "id\tpredicted\tscore\torientation\n";
    for (const auto& p : quantify_dataset(d, q, default_thread_count())) {
        ss << p.input_id << "\t";
        if (const auto c = p.predicted_class())
            ss << *c;
        else
            ss << json(*p.predicted_value()).dump();
        ss << "\t" << json(p.score).dump() << "\t" << to_string(p.orientation) << "\n";
    }
    return ss.str();
}

int cmd_quantify(const QuantifyArgs& a) {
    const Dataset d = io::read_records(a.records);
    std::string out;
    if (a.quantifier == "all") {
        const auto qs = applicable_quantifiers(d);
        if (qs.empty()) throw usage_error("no quantifier applies to every record of '" + a.records + "'");
        for (std::size_t i = 0; i < qs.size(); ++i) out += (i ? "\n" : "") + quantify_table(d, qs[i]);
    } else {
        out = quantify_table(d, quantifier_arg(a.quantifier));
    }
    if (a.out.empty())
        std::cout << out;
    else
        io::write_atomic(a.out, out);
    return 0;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
    std::string records;
    std::string quantifier;
    double epsilon = 0.1;
    std::string mode = "above";
    double imprecision = 0.5;
    bool allow_degenerate = false;
    std::string out;
};

int cmd_calibrate(const CalibrateArgs& a) {
    const Dataset d = io::read_records(a.records);
    if (d.empty()) throw usage_error("validation file '" + a.records + "' has no records");
    const QuantifierId q = quantifier_arg(a.quantifier);
    const SupervisorConfig cfg = calibrate_on(d, q, a.epsilon, mode_arg(a.mode), a.imprecision, default_thread_count());
    std::cout << "quantifier " << to_string(q) << " threshold " << io::encode_real(cfg.threshold).dump()
              << " achieved_fpr " << io::fixed(cfg.achieved_fpr) << " (epsilon " << fmt_eps(a.epsilon) << ", mode "
              << to_string(cfg.mode) << ", " << cfg.calibration_split_size << " benign)\n";
    if (cfg.fpr_warning)
        std::cerr << "warning: achieved FPR " << io::fixed(cfg.achieved_fpr) << " is far from epsilon "
                  << fmt_eps(a.epsilon) << " (few distinct scores)\n";
    if (cfg.degenerate && !a.allow_degenerate) {
        std::cerr << "error: degenerate calibration (no achievable FPR strictly between 0 and 1 near epsilon); "
                     "pass --allow-degenerate to keep it\n";
        return 2;
    }
    io::write_config(cfg, a.out);
    return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string records;
    std::string config;
    std::vector<double> betas{1.0};
    ObjectiveArgs objective;
    double imprecision = 0.5;
    bool two_decimals = false;
    std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
    const SupervisorConfig cfg = io::read_config(a.config);
    const Dataset d = io::read_records(a.records);
    EvaluateOptions opts;
    opts.objective = a.objective.spec();
    opts.betas = a.betas;
    opts.acceptable_imprecision = a.imprecision;
    const EvaluationReport rep = evaluate_on(cfg, d, opts, default_thread_count());

    json betas = a.betas;
    const json m = manifest("evaluate", {a.records, a.config},
                            {{"quantifier", to_string(cfg.quantifier)},
                             {"epsilon", io::encode_opt(cfg.epsilon)},
                             {"betas", betas},
                             {"objective", a.objective.kind},
                             {"objective_bounds", json::array({a.objective.lower, a.objective.upper})},
                             {"mode", to_string(cfg.mode)},
                             {"acceptable_imprecision", a.imprecision},
                             {"output", a.out},
                             {"seed", nullptr}});
    io::write_report(rep, a.out, m);
    std::cout << io::table_row(rep, a.two_decimals ? 2 : 4) << "\n";
    if (!rep.supervised_objective) std::cout << "note: supervised objective undefined, no accepted inputs\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct CompareArgs {
    std::string results_dir;
    std::string group_by = "subject,source,epsilon";
    std::string out;
};

int cmd_compare(const CompareArgs& a) {
    std::vector<std::string> keys;
    {
        std::stringstream ss(a.group_by);
        std::string k;
        while (std::getline(ss, k, ','))
            if (!k.empty()) keys.push_back(k);
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.results_dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::vector<RankEntry> entries;
    for (const auto& f : files) {
        EvaluationReport rep;
        try {
            rep = io::read_report(f);
        } catch (const format_error&) {
            continue; // not a report (configs, grids, ...)
        }
        const auto s1 = rep.s_at(1.0);
        if (!s1) {
            std::cerr << "skipping " << f.filename().string() << ": S_1 undefined\n";
            continue;
        }
        RankEntry e;
        e.row = rep.context.count("quantifier") ? rep.context.at("quantifier") : "?";
        if (rep.context.count("model")) e.row += "/" + rep.context.at("model");
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (i) e.group += "/";
            e.group += rep.context.count(keys[i]) ? rep.context.at(keys[i]) : "-";
        }
        e.s1 = *s1;
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw usage_error("no evaluation reports with a defined S_1 in '" + a.results_dir + "'");
    const RankTable table = rank_order(entries);
    io::write_atomic(a.out, io::rank_table_to_json(table).dump(2) + "\n");
    std::cout << io::rank_table_text(table);
    return 0;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string records;
    std::string quantifier;
    double epsilon = 0.1;
    std::string mode = "above";
    std::string sizes = "2..50";
    std::string metric = "supervised_objective";
    ObjectiveArgs objective;
    double imprecision = 0.5;
    std::string out;
};

std::optional<double> pick_metric(const EvaluationReport& r, const std::string& metric) {
    if (metric == "supervised_objective") return r.supervised_objective;
    if (metric == "acceptance_rate") return r.acceptance_rate;
    if (metric == "s1") return r.s_at(1.0);
    throw usage_error("unknown metric '" + metric + "' (supervised_objective, acceptance_rate or s1)");
}

int cmd_sweep(const SweepArgs& a) {
    const Dataset d = io::read_records(a.records);
    PipelineOptions opts;
    opts.quantifier = quantifier_arg(a.quantifier);
    opts.epsilon = a.epsilon;
    opts.mode = mode_arg(a.mode);
    opts.eval.objective = a.objective.spec();
    opts.eval.acceptable_imprecision = a.imprecision;
    opts.threads = default_thread_count();
    pick_metric(EvaluationReport{}, a.metric); // validate early
    const auto sizes = parse_sizes(a.sizes);
    const auto results = sample_size_sweep(d, opts, sizes);

    SweepGrid grid;
    long epoch = 0;
    if (auto it = d.metadata.find("epoch"); it != d.metadata.end()) {
        try {
            epoch = std::stol(it->second);
        } catch (const std::logic_error&) {
            throw usage_error("metadata epoch '" + it->second + "' is not an integer");
        }
    }
    grid.axis1 = {epoch};
    grid.metric = a.metric;
    grid.metadata = {{"quantifier", a.quantifier}, {"epsilon", fmt_eps(a.epsilon)}, {"mode", a.mode}};
    if (auto it = d.metadata.find("subject"); it != d.metadata.end()) grid.metadata["subject"] = it->second;
    grid.values = Grid(1, sizes.size());
    std::cout << "size\tACC_bar\tDelta_u\tS_1\n";
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const auto& rep = results.at(sizes[i]).report;
        grid.axis2.push_back(static_cast<long>(sizes[i]));
        grid.values.at(0, i) = pick_metric(rep, a.metric);
        std::cout << sizes[i] << "\t" << io::fixed(rep.supervised_objective) << "\t" << io::fixed(rep.acceptance_rate)
                  << "\t" << io::fixed(rep.s_at(1.0)) << "\n";
    }
    io::write_sweep_grid(grid, a.out);
    return 0;
}

// ---------------------------------------------------------------------------

struct SensitivityArgs {
    std::string grids;
    std::size_t window = 5;
    std::string pair = "mean";
    std::string pgm_prefix;
    std::string out;
};

int cmd_sensitivity(const SensitivityArgs& a) {
    std::vector<SweepGrid> parts;
    if (fs::is_directory(a.grids)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(a.grids))
            if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) parts.push_back(io::read_sweep_grid(f));
    } else {
        parts.push_back(io::read_sweep_grid(a.grids));
    }
    if (parts.empty()) throw usage_error("no grid files in '" + a.grids + "'");
    if (a.pair != "mean" && a.pair != "raw") throw usage_error("--pair expects mean or raw");
    const SweepGrid grid = merge_rows(parts);
    const NeighborhoodMaps maps = neighborhood_stats(grid.values, a.window);

    json out;
    out["axis1"] = grid.axis1;
    out["axis2"] = grid.axis2;
    out["metric"] = grid.metric;
    out["window"] = a.window;
    out["pair"] = a.pair;
    out["mean"] = io::grid_to_json(maps.mean);
    out["std"] = io::grid_to_json(maps.stddev);
    try {
        const Correlation c = sensitivity_correlation(a.pair == "mean" ? maps.mean : grid.values, maps.stddev);
        out["correlation"] = {{"r", c.r}, {"p_value", c.p_value}, {"n", c.n}};
        std::cout << "S-C r " << io::fixed(c.r) << " p " << io::fixed(c.p_value) << " n " << c.n << "\n";
    } catch (const undefined_metric_error& e) {
        out["correlation"] = nullptr;
        std::cout << "S-C r undefined (" << e.what() << ")\n";
    }
    io::write_atomic(a.out, out.dump(2) + "\n");
    if (!a.pgm_prefix.empty()) {
        io::write_atomic(a.pgm_prefix + "_mean.pgm", io::grid_to_pgm(maps.mean));
        io::write_atomic(a.pgm_prefix + "_std.pgm", io::grid_to_pgm(maps.stddev));
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    SynthOptions opts;
    std::string task = "classification";
    std::vector<std::string> meta;
    std::string out;
};

int cmd_synth(SynthArgs a) {
    const auto task = parse_task(a.task);
    if (!task) throw usage_error("unknown task '" + a.task + "'");
    a.opts.task = *task;
    Dataset d = synthesize(a.opts);
    for (auto& [k, v] : parse_meta(a.meta)) d.metadata[k] = v;
    io::write_records(d, a.out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"uqsup - uncertainty-based DNN supervision toolkit"};
    app.require_subcommand(1);

    QuantifyArgs qa;
    auto* quantify = app.add_subcommand("quantify", "per-input prediction and uncertainty/confidence score");
    quantify->add_option("records", qa.records, "record file")->required()->check(CLI::ExistingFile);
    quantify->add_option("-q,--quantifier", qa.quantifier, "quantifier id or 'all'")->capture_default_str();
    quantify->add_option("-o,--out", qa.out, "output table (stdout when omitted)");

    CalibrateArgs ca;
    auto* calibrate = app.add_subcommand("calibrate", "calibrate a threshold to a target FPR on validation records");
    calibrate->add_option("records", ca.records, "validation record file")->required()->check(CLI::ExistingFile);
    calibrate->add_option("-q,--quantifier", ca.quantifier, "quantifier id")->required();
    calibrate->add_option("-e,--epsilon", ca.epsilon, "target false positive rate")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    calibrate->add_option("--mode", ca.mode, "above or at-most")->capture_default_str();
    calibrate->add_option("--imprecision", ca.imprecision, "acceptable regression error")->capture_default_str();
    calibrate->add_flag("--allow-degenerate", ca.allow_degenerate, "write degenerate calibrations");
    calibrate->add_option("-o,--out", ca.out, "supervisor config file")->required();

    EvaluateArgs ea;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "evaluate a supervisor config on test records");
    evaluate_cmd->add_option("records", ea.records, "test record file")->required()->check(CLI::ExistingFile);
    evaluate_cmd->add_option("-c,--config", ea.config, "supervisor config")->required()->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--beta", ea.betas, "S-score beta (repeatable)")->capture_default_str();
    ea.objective.add_to(evaluate_cmd);
    evaluate_cmd->add_option("--imprecision", ea.imprecision, "acceptable regression error")->capture_default_str();
    evaluate_cmd->add_flag("--two-decimals", ea.two_decimals, "2 decimal places in the printed row");
    evaluate_cmd->add_option("-o,--out", ea.out, "report file")->required();

    CompareArgs cpa;
    auto* compare = app.add_subcommand("compare", "rank quantifiers by S_1 across evaluation reports");
    compare->add_option("results_dir", cpa.results_dir, "directory of report files")
        ->required()
        ->check(CLI::ExistingDirectory);
    compare->add_option("--group-by", cpa.group_by, "comma-separated context keys")->capture_default_str();
    compare->add_option("-o,--out", cpa.out, "rank table file")->required();

    SweepArgs sa;
    auto* sweep = app.add_subcommand("sweep", "supervised metrics as a function of the number of samples");
    sweep->add_option("records", sa.records, "record file with T_max samples")->required()->check(CLI::ExistingFile);
    sweep->add_option("-q,--quantifier", sa.quantifier, "quantifier id")->required();
    sweep->add_option("-e,--epsilon", sa.epsilon, "target false positive rate")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    sweep->add_option("--mode", sa.mode, "above or at-most")->capture_default_str();
    sweep->add_option("--sizes", sa.sizes, "sample counts, e.g. 2..50 or 2,5,10")->capture_default_str();
    sweep->add_option("--metric", sa.metric, "grid metric")->capture_default_str();
    sa.objective.add_to(sweep);
    sweep->add_option("--imprecision", sa.imprecision, "acceptable regression error")->capture_default_str();
    sweep->add_option("-o,--out", sa.out, "sweep grid file")->required();

    SensitivityArgs sna;
    auto* sensitivity = app.add_subcommand("sensitivity", "neighborhood mean/std maps and their correlation");
    sensitivity->add_option("grids", sna.grids, "grid file or directory of grid files")
        ->required()
        ->check(CLI::ExistingPath);
    sensitivity->add_option("--window", sna.window, "odd window size")->capture_default_str();
    sensitivity->add_option("--pair", sna.pair, "mean (neighborhood mean vs std) or raw (cell vs std)")
        ->capture_default_str();
    sensitivity->add_option("--pgm", sna.pgm_prefix, "also write <prefix>_mean.pgm and <prefix>_std.pgm");
    sensitivity->add_option("-o,--out", sna.out, "maps file")->required();

    SynthArgs ya;
    auto* synth = app.add_subcommand("synth", "generate synthetic record files");
    synth->add_option("--task", ya.task, "classification or regression")->capture_default_str();
    synth->add_option("--classes", ya.opts.num_classes, "number of classes")->capture_default_str();
    synth->add_option("--samples", ya.opts.samples, "samples per record (T)")->capture_default_str();
    synth->add_option("--n-val", ya.opts.n_validation, "validation records")->capture_default_str();
    synth->add_option("--n-test", ya.opts.n_test, "test records")->capture_default_str();
    synth->add_option("--margin", ya.opts.margin, "class separation")->capture_default_str();
    synth->add_option("--noise-max", ya.opts.noise_max, "largest per-input noise level")->capture_default_str();
    synth->add_option("--sample-noise", ya.opts.sample_noise, "per-sample noise relative to input noise")
        ->capture_default_str();
    synth->add_flag("--with-variance", ya.opts.with_variance, "regression samples carry a variance channel");
    synth->add_option("--source", ya.opts.source, "source tag")->capture_default_str();
    synth->add_option("--seed", ya.opts.seed, "random seed")->capture_default_str();
    synth->add_option("--meta", ya.meta, "metadata key=value (repeatable)");
    synth->add_option("-o,--out", ya.out, "record file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*quantify) return cmd_quantify(qa);
        if (*calibrate) return cmd_calibrate(ca);
        if (*evaluate_cmd) return cmd_evaluate(ea);
        if (*compare) return cmd_compare(cpa);
        if (*sweep) return cmd_sweep(sa);
        if (*sensitivity) return cmd_sensitivity(sna);
        if (*synth) return cmd_synth(ya);
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const precondition_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const undefined_metric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
