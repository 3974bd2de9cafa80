#include "surgflow/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <ostream>

#include "surgflow/csv_io.hpp"
#include "surgflow/evaluation.hpp"
#include "surgflow/metrics.hpp"
#include "surgflow/parallel.hpp"
#include "surgflow/postprocess.hpp"
#include "surgflow/report.hpp"
#include "surgflow/synth.hpp"

namespace surgflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSchemaHelp = R"(File formats (UTF-8 CSV, header row, '.' decimal separator):
  labels.csv      frame_index,task_id              (1 frame per second, task 0 = idle)
  annotation.csv  task_id,begin_s,end_s            (half-open [begin_s, end_s))
  kinematics.csv  t_s,manipulator,x,y,z,roll,pitch,yaw   (manipulator PSM1|PSM2)
  events.csv      t_s,kind
  metrics.csv     procedure_id,task_id,metric_name,value,missing,coverage_s
Exit codes: 0 success, 1 validation error, 2 I/O error.
Worker count: --jobs, falling back to the SURGFLOW_JOBS environment variable.)";

std::size_t default_jobs() {
    if (const char* env = std::getenv("SURGFLOW_JOBS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    return 1;
}

SegmentMode regime_or_throw(const std::string& name) {
    const auto mode = parse_regime(name);
    if (!mode) throw Error(ErrorKind::InvalidConfig, "regime must be 'longest' or 'all', got '" + name + "'");
    return *mode;
}

void write_manifest(const fs::path& path, json manifest) {
    write_text_file(path, manifest.dump(2) + "\n");
}

MetricRegistry registry_from_option(const std::string& path) {
    return path.empty() ? default_registry() : load_registry(path);
}

std::vector<LabelStream> load_predictions(const std::vector<ProcedureRecord>& records, const fs::path& pred_root,
                                          const std::string& file_name) {
    std::vector<LabelStream> preds;
    preds.reserve(records.size());
    for (const auto& rec : records) {
        preds.push_back(read_labels_csv(pred_root / rec.procedure_id / file_name));
    }
    return preds;
}

std::vector<ProcedureRecord> load_dataset(const fs::path& root, std::size_t jobs) {
    const auto dirs = procedure_dirs(root);
    if (dirs.empty()) throw Error(ErrorKind::Io, "no procedure directories found", root.string());
    std::vector<ProcedureRecord> records(dirs.size());
    parallel_for(dirs.size(), jobs, [&](std::size_t i) { records[i] = load_procedure_dir(dirs[i]); });
    return records;
}

std::vector<double> parse_thresholds(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = std::min(text.find(',', start), text.size());
        out.push_back(parse_double(std::string_view(text).substr(start, comma - start), "--thresholds", 0));
        start = comma + 1;
    }
    if (out.empty() || !std::is_sorted(out.begin(), out.end())) {
        throw Error(ErrorKind::InvalidConfig, "--thresholds must be an ascending comma-separated list");
    }
    return out;
}

// -----------------------------
// Subcommand options
// -----------------------------
struct GenerateOpts {
    std::uint64_t seed = 0;
    std::size_t n = 20;
    std::string out;
    SynthConfig synth;
    std::size_t jobs = 1;
};

struct PerturbOpts {
    std::string data;
    std::string out;
    std::string out_name = "labels_pred.csv";
    NoiseConfig noise;
    std::string spike_label = "uniform";
};

struct PostprocessOpts {
    std::string in;
    std::string in_name = "labels_pred.csv";
    std::string out;
    int window = kDefaultWindow;
    std::string regime = "longest";
};

struct MetricsOpts {
    std::string data;
    std::string pred;
    std::string pred_name = "labels.csv";
    std::string regime = "longest";
    std::string registry;
    std::string out;
    std::size_t jobs = 1;
};

struct EvaluateOpts {
    std::string data;
    std::string pred;
    std::string pred_b;
    std::string pred_name = "labels.csv";
    std::string regime = "longest";
    std::string registry;
    std::string thresholds = "60,120,240";
    std::string out;
    std::size_t jobs = 1;
};

struct CompareOpts {
    std::string data;
    std::string pred_a;
    std::string pred_b;
    std::string pred_name = "labels.csv";
    std::string out;
};

json synth_json(const SynthConfig& c) {
    json rates = json::object();
    for (EventKind k : all_event_kinds()) rates[std::string(event_kind_name(k))] = c.event_rates_per_min[static_cast<std::size_t>(k)];
    return json{{"n_tasks", c.n_tasks},
                {"task_duration_s", {c.task_duration_s.min, c.task_duration_s.max}},
                {"gap_duration_s", {c.gap_duration_s.min, c.gap_duration_s.max}},
                {"kinematics_rate_hz", c.kinematics_rate_hz},
                {"label_rate_hz", c.label_rate_hz},
                {"velocity_damping", c.velocity_damping},
                {"velocity_noise_m_s", c.velocity_noise_m_s},
                {"wrist_noise_rad", c.wrist_noise_rad},
                {"event_rates_per_min", rates},
                {"burstiness", c.burstiness},
                {"task_intensity_spread", c.task_intensity_spread},
                {"idle_intensity", c.idle_intensity}};
}

void run_generate(const GenerateOpts& o, std::ostream& out) {
    if (o.n == 0) throw Error(ErrorKind::InvalidConfig, "--n must be >= 1");
    SynthConfig base = o.synth;
    base.seed = o.seed;
    base.validate();
    const fs::path root(o.out);
    std::vector<std::string> ids(o.n);
    std::vector<std::uint64_t> seeds(o.n);
    parallel_for(o.n, o.jobs, [&](std::size_t i) {
        const SynthConfig cfg = dataset_member(base, i, o.n);
        ids[i] = cfg.procedure_id;
        seeds[i] = cfg.seed;
        write_procedure_dir(generate_procedure(cfg), root / cfg.procedure_id);
    });
    json procs = json::array();
    for (std::size_t i = 0; i < o.n; ++i) procs.push_back(json{{"procedure_id", ids[i]}, {"seed", seeds[i]}});
    write_manifest(root / "manifest.json", json{{"command", "generate"},
                                                 {"seed", o.seed},
                                                 {"n", o.n},
                                                 {"out", o.out},
                                                 {"config", synth_json(base)},
                                                 {"procedures", procs}});
    out << "generated " << o.n << " procedures in " << o.out << "\n";
}

void run_perturb(const PerturbOpts& o, std::ostream& out) {
    NoiseConfig noise = o.noise;
    if (o.spike_label == "uniform") {
        noise.spike_label = SpikeLabel::UniformRandomTask;
    } else if (o.spike_label == "adjacent") {
        noise.spike_label = SpikeLabel::AdjacentTask;
    } else {
        throw Error(ErrorKind::InvalidConfig, "--spike-label must be 'uniform' or 'adjacent'");
    }
    noise.validate();
    const fs::path data(o.data);
    const fs::path root = o.out.empty() ? data : fs::path(o.out);
    const auto dirs = procedure_dirs(data);
    if (dirs.empty()) throw Error(ErrorKind::Io, "no procedure directories found", o.data);
    json procs = json::array();
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        NoiseConfig member = noise;
        member.seed = splitmix64(noise.seed + 0x632BE59BD9B4E019ULL * (i + 1));
        const LabelStream gt = read_labels_csv(dirs[i] / "labels.csv");
        const std::string id = dirs[i].filename().string();
        write_text_file(root / id / o.out_name, labels_to_csv(perturb_predictions(gt, member)));
        procs.push_back(json{{"procedure_id", id}, {"seed", member.seed}});
    }
    write_manifest(root / "perturb_manifest.json",
                   json{{"command", "perturb"},
                        {"data", o.data},
                        {"out", root.string()},
                        {"out_name", o.out_name},
                        {"seed", noise.seed},
                        {"boundary_jitter_std_s", noise.boundary_jitter_std_s},
                        {"spike_rate_per_min", noise.spike_rate_per_min},
                        {"spike_duration_s", {noise.spike_duration_s.min, noise.spike_duration_s.max}},
                        {"spike_label", o.spike_label},
                        {"procedures", procs}});
    out << "perturbed " << dirs.size() << " procedures\n";
}

void postprocess_one(const fs::path& in, const fs::path& out_dir, const FilterConfig& cfg, SegmentMode regime) {
    const LabelStream filtered = median_filter(read_labels_csv(in), cfg);
    write_text_file(out_dir / "labels.csv", labels_to_csv(filtered));
    write_text_file(out_dir / "annotation.csv", annotation_to_csv(select_segments(filtered, regime)));
}

void run_postprocess(const PostprocessOpts& o, std::ostream& out) {
    FilterConfig cfg{o.window};
    cfg.validate();
    const SegmentMode regime = regime_or_throw(o.regime);
    const fs::path in(o.in);
    const fs::path root(o.out);
    json inputs = json::array();
    if (fs::is_directory(in)) {
        const auto dirs = procedure_dirs(in);
        if (dirs.empty()) throw Error(ErrorKind::Io, "no procedure directories found", o.in);
        for (const auto& dir : dirs) {
            postprocess_one(dir / o.in_name, root / dir.filename(), cfg, regime);
            inputs.push_back(dir.filename().string());
        }
    } else {
        postprocess_one(in, root, cfg, regime);
        inputs.push_back(in.filename().string());
    }
    write_manifest(root / "manifest.json", json{{"command", "postprocess"},
                                                 {"in", o.in},
                                                 {"in_name", o.in_name},
                                                 {"out", o.out},
                                                 {"window", o.window},
                                                 {"regime", o.regime},
                                                 {"inputs", inputs}});
    out << "postprocessed " << inputs.size() << " stream(s) into " << o.out << "\n";
}

void run_metrics(const MetricsOpts& o, std::ostream& out) {
    const SegmentMode regime = regime_or_throw(o.regime);
    const MetricRegistry registry = registry_from_option(o.registry);
    registry.validate();
    const auto records = load_dataset(o.data, o.jobs);
    std::vector<std::vector<MetricVector>> results(records.size());
    std::vector<LabelStream> preds;
    if (!o.pred.empty()) preds = load_predictions(records, o.pred, o.pred_name);
    parallel_for(records.size(), o.jobs, [&](std::size_t i) {
        const SegmentSet segs = o.pred.empty() ? records[i].ground_truth : select_segments(preds[i], regime);
        results[i] = compute_metrics(registry, records[i], segs);
    });
    std::vector<MetricVector> flat;
    for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(flat));
    const fs::path root(o.out);
    write_text_file(root / "metrics.csv", metrics_to_csv(flat));
    write_manifest(root / "manifest.json", json{{"command", "metrics"},
                                                 {"data", o.data},
                                                 {"pred", o.pred},
                                                 {"pred_name", o.pred_name},
                                                 {"segments", o.pred.empty() ? "ground_truth" : "prediction"},
                                                 {"regime", o.regime},
                                                 {"registry", json::parse(registry_to_json(registry))},
                                                 {"out", o.out},
                                                 {"procedures", records.size()}});
    out << "wrote metrics for " << records.size() << " procedures\n";
}

void run_evaluate(const EvaluateOpts& o, std::ostream& out) {
    EvaluationOptions opts;
    opts.scatter_regime = regime_or_throw(o.regime);
    opts.thresholds_s = parse_thresholds(o.thresholds);
    opts.jobs = o.jobs;
    const MetricRegistry registry = registry_from_option(o.registry);
    registry.validate();
    const auto records = load_dataset(o.data, o.jobs);
    const auto preds = load_predictions(records, o.pred, o.pred_name);

    EvaluationReport report = evaluate(records, preds, registry, opts);
    if (!o.pred_b.empty()) {
        const auto preds_b = load_predictions(records, o.pred_b, o.pred_name);
        std::vector<LabelStream> gt;
        for (const auto& r : records) gt.push_back(r.labels_gt);
        report.mcnemar = compare_models(gt, preds, preds_b, o.pred_name);
    }
    const fs::path root(o.out);
    write_text_file(root / "report.json", report_to_json(report));
    write_text_file(root / "scatter.csv", scatter_to_csv(opts.scatter_regime == SegmentMode::LongestOnly
                                                             ? report.correlations_longest
                                                             : report.correlations_all));
    write_manifest(root / "manifest.json", json{{"command", "evaluate"},
                                                 {"data", o.data},
                                                 {"pred", o.pred},
                                                 {"pred_b", o.pred_b},
                                                 {"pred_name", o.pred_name},
                                                 {"regime", o.regime},
                                                 {"thresholds_s", opts.thresholds_s},
                                                 {"registry", json::parse(registry_to_json(registry))},
                                                 {"out", o.out},
                                                 {"procedures", records.size()}});
    out << "jaccard mean " << (report.jaccard_mean ? format_number(*report.jaccard_mean) : "undefined") << " over "
        << report.jaccard_n << " procedures\n";
}

void run_compare(const CompareOpts& o, std::ostream& out) {
    const auto dirs = procedure_dirs(o.data);
    if (dirs.empty()) throw Error(ErrorKind::Io, "no procedure directories found", o.data);
    std::vector<LabelStream> gt;
    std::vector<LabelStream> a;
    std::vector<LabelStream> b;
    for (const auto& dir : dirs) {
        const std::string id = dir.filename().string();
        gt.push_back(read_labels_csv(dir / "labels.csv"));
        a.push_back(read_labels_csv(fs::path(o.pred_a) / id / o.pred_name));
        b.push_back(read_labels_csv(fs::path(o.pred_b) / id / o.pred_name));
    }
    const McNemarComparison cmp = compare_models(gt, a, b, o.pred_name);
    const fs::path root(o.out);
    write_text_file(root / "mcnemar.json", mcnemar_to_json(cmp));
    write_manifest(root / "manifest.json", json{{"command", "compare"},
                                                 {"data", o.data},
                                                 {"pred_a", o.pred_a},
                                                 {"pred_b", o.pred_b},
                                                 {"pred_name", o.pred_name},
                                                 {"out", o.out}});
    out << "McNemar chi2 " << format_number(cmp.result.chi2) << " p " << format_number(cmp.result.p_value) << "\n";
}

}  // namespace

std::vector<fs::path> procedure_dirs(const fs::path& root) {
    std::vector<fs::path> dirs;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw Error(ErrorKind::Io, "not a directory", root.string());
    for (const auto& entry : fs::directory_iterator(root, ec)) {
        if (entry.is_directory() && fs::exists(entry.path() / "labels.csv")) dirs.push_back(entry.path());
    }
    if (ec) throw Error(ErrorKind::Io, "cannot list directory: " + ec.message(), root.string());
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"surgflow: task segmentation post-processing, efficiency metrics, and evaluation"};
    app.footer(kSchemaHelp);
    app.require_subcommand(1);

    const std::size_t jobs_default = default_jobs();

    GenerateOpts gen;
    gen.jobs = jobs_default;
    auto* g = app.add_subcommand("generate", "Write synthetic procedures <out>/<id>/{labels,annotation,kinematics,events}.csv");
    g->add_option("--seed", gen.seed, "Base seed")->capture_default_str();
    g->add_option("--n", gen.n, "Number of procedures")->capture_default_str();
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_option("--n-tasks", gen.synth.n_tasks, "Tasks per procedure (1..12)")->capture_default_str();
    g->add_option("--task-min", gen.synth.task_duration_s.min, "Minimum task duration, s")->capture_default_str();
    g->add_option("--task-max", gen.synth.task_duration_s.max, "Maximum task duration, s")->capture_default_str();
    g->add_option("--gap-min", gen.synth.gap_duration_s.min, "Minimum idle gap, s")->capture_default_str();
    g->add_option("--gap-max", gen.synth.gap_duration_s.max, "Maximum idle gap, s")->capture_default_str();
    g->add_option("--kin-rate", gen.synth.kinematics_rate_hz, "Kinematics sampling rate, Hz")->capture_default_str();
    g->add_option("--burstiness", gen.synth.burstiness, "Mean clustered follow-up events")->capture_default_str();
    g->add_option("--jobs", gen.jobs, "Worker threads");

    PerturbOpts per;
    auto* p = app.add_subcommand("perturb", "Write noisy prediction labels next to each procedure's ground truth");
    p->add_option("--data", per.data, "Dataset directory")->required();
    p->add_option("--out", per.out, "Output root (default: the dataset directory)");
    p->add_option("--out-name", per.out_name, "Prediction file name")->capture_default_str();
    p->add_option("--seed", per.noise.seed, "Noise seed")->capture_default_str();
    p->add_option("--jitter", per.noise.boundary_jitter_std_s, "Boundary jitter std, s")->capture_default_str();
    p->add_option("--spike-rate", per.noise.spike_rate_per_min, "Spikes per minute")->capture_default_str();
    p->add_option("--spike-min", per.noise.spike_duration_s.min, "Minimum spike duration, s")->capture_default_str();
    p->add_option("--spike-max", per.noise.spike_duration_s.max, "Maximum spike duration, s")->capture_default_str();
    p->add_option("--spike-label", per.spike_label, "uniform | adjacent")->capture_default_str();

    PostprocessOpts post;
    auto* pp = app.add_subcommand("postprocess", "Median-filter predictions and select task segments");
    pp->add_option("--in", post.in, "labels.csv file or dataset directory")->required();
    pp->add_option("--in-name", post.in_name, "Prediction file name inside procedure directories")->capture_default_str();
    pp->add_option("--window", post.window, "Median window length (odd)")->capture_default_str();
    pp->add_option("--regime", post.regime, "longest | all")->capture_default_str();
    pp->add_option("--out", post.out, "Output directory")->required();

    MetricsOpts met;
    met.jobs = jobs_default;
    auto* m = app.add_subcommand("metrics", "Compute per-task metrics into metrics.csv");
    m->add_option("--data", met.data, "Dataset directory")->required();
    m->add_option("--pred", met.pred, "Prediction root; ground-truth segments when omitted");
    m->add_option("--pred-name", met.pred_name, "Prediction file name")->capture_default_str();
    m->add_option("--regime", met.regime, "longest | all")->capture_default_str();
    m->add_option("--registry", met.registry, "Metric registry JSON override");
    m->add_option("--out", met.out, "Output directory")->required();
    m->add_option("--jobs", met.jobs, "Worker threads");

    EvaluateOpts ev;
    ev.jobs = jobs_default;
    auto* e = app.add_subcommand("evaluate", "Write report.json and scatter.csv");
    e->add_option("--data", ev.data, "Dataset directory")->required();
    e->add_option("--pred", ev.pred, "Prediction root")->required();
    e->add_option("--pred-b", ev.pred_b, "Second prediction root for McNemar");
    e->add_option("--pred-name", ev.pred_name, "Prediction file name")->capture_default_str();
    e->add_option("--regime", ev.regime, "Regime for scatter.csv and quartile agreement")->capture_default_str();
    e->add_option("--registry", ev.registry, "Metric registry JSON override");
    e->add_option("--thresholds", ev.thresholds, "Boundary bucket edges, s")->capture_default_str();
    e->add_option("--out", ev.out, "Output directory")->required();
    e->add_option("--jobs", ev.jobs, "Worker threads");

    CompareOpts cmp;
    auto* c = app.add_subcommand("compare", "McNemar test between two prediction sets");
    c->add_option("--data", cmp.data, "Dataset directory")->required();
    c->add_option("--pred-a", cmp.pred_a, "First prediction root")->required();
    c->add_option("--pred-b", cmp.pred_b, "Second prediction root")->required();
    c->add_option("--pred-name", cmp.pred_name, "Prediction file name")->capture_default_str();
    c->add_option("--out", cmp.out, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& pe) {
        err << "error: " << pe.what() << "\n\n" << app.help();
        return kExitValidation;
    }

    try {
        if (g->parsed()) run_generate(gen, out);
        if (p->parsed()) run_perturb(per, out);
        if (pp->parsed()) run_postprocess(post, out);
        if (m->parsed()) run_metrics(met, out);
        if (e->parsed()) run_evaluate(ev, out);
        if (c->parsed()) run_compare(cmp, out);
    } catch (const Error& ex) {
        err << "error: " << ex.what() << "\n";
        return ex.kind() == ErrorKind::Io ? kExitIo : kExitValidation;
    } catch (const fs::filesystem_error& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}

}  // namespace surgflow
