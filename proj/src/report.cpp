#include "surgflow/report.hpp"

#include <json.hpp>

#include "surgflow/csv_io.hpp"

namespace surgflow {

using nlohmann::json;

namespace {

json number(double v) { return quantize(v); }

json number(const std::optional<double>& v) { return v ? json(quantize(*v)) : json(nullptr); }

json buckets_json(const BucketResult& b) {
    json within = json::array();
    for (std::size_t k = 0; k < b.thresholds_s.size(); ++k) {
        within.push_back(json{{"le_s", number(b.thresholds_s[k])}, {"fraction", number(b.within[k])}});
    }
    return json{{"n", b.n},
                {"within", within},
                {"above_s", number(b.thresholds_s.empty() ? 0.0 : b.thresholds_s.back())},
                {"above_fraction", number(b.above)}};
}

json study_json(const CorrelationStudy& study) {
    json entries = json::array();
    std::size_t n_defined = 0;
    for (const auto& e : study.entries) {
        json q = nullptr;
        if (e.quartile) {
            q = json{{"n", e.quartile->n}, {"n_same", e.quartile->n_same}, {"fraction", number(e.quartile->fraction)}};
        }
        const bool defined = e.pearson.defined();
        n_defined += defined ? 1 : 0;
        entries.push_back(json{{"task_id", e.task.value()},
                               {"metric", e.metric_name},
                               {"source", metric_source_name(e.source)},
                               {"rho", defined ? number(e.pearson.rho) : json(nullptr)},
                               {"p_value", defined ? number(e.pearson.p_value) : json(nullptr)},
                               {"undefined_reason", defined ? json(nullptr)
                                                            : json(undefined_reason_name(e.pearson.undefined))},
                               {"n_pairs", e.n_pairs},
                               {"excluded", e.excluded},
                               {"quartile", q}});
    }
    json summaries = json::array();
    for (const auto& s : study.summaries) {
        summaries.push_back(json{{"task_id", s.task.value()},
                                 {"source", s.source == MetricSource::Event ? "EVT" : "KIN"},
                                 {"n", s.n_defined},
                                 {"n_undefined", s.n_undefined},
                                 {"mean_rho", number(s.mean_rho)},
                                 {"std_rho", number(s.std_rho)},
                                 {"median_p", number(s.median_p)},
                                 {"significant", s.significant}});
    }
    return json{{"regime", regime_name(study.regime)},
                {"n_procedures", study.n_procedures},
                {"n", study.entries.size()},
                {"n_defined", n_defined},
                {"entries", entries},
                {"summaries", summaries}};
}

json quartile_json(const CorrelationStudy& study) {
    json bands = json::array();
    for (const auto& b : study.bands) {
        bands.push_back(json{{"rho_lo", number(b.lo)},
                             {"rho_hi", number(b.hi)},
                             {"source", b.source ? json(metric_source_name(*b.source)) : json("all")},
                             {"n", b.n},
                             {"mean_fraction", number(b.mean_quartile_fraction)}});
    }
    std::size_t n = 0;
    std::size_t same = 0;
    std::size_t total = 0;
    for (const auto& e : study.entries) {
        if (!e.quartile) continue;
        ++n;
        same += e.quartile->n_same;
        total += e.quartile->n;
    }
    return json{{"regime", regime_name(study.regime)},
                {"n", n},
                {"n_same", same},
                {"n_pairs", total},
                {"fraction", total > 0 ? number(static_cast<double>(same) / static_cast<double>(total)) : json(nullptr)},
                {"bands", bands}};
}

json mcnemar_json(const McNemarComparison& c) {
    return json{{"b", c.result.b},
                {"c", c.result.c},
                {"chi2", number(c.result.chi2)},
                {"p_value", number(c.result.p_value)},
                {"n_frames", c.n_frames},
                {"accuracy_a", number(c.accuracy_a)},
                {"accuracy_b", number(c.accuracy_b)},
                {"flags_source", c.flags_source}};
}

}  // namespace

std::string_view regime_name(SegmentMode mode) { return mode == SegmentMode::LongestOnly ? "longest" : "all"; }

std::optional<SegmentMode> parse_regime(std::string_view name) {
    if (name == "longest") return SegmentMode::LongestOnly;
    if (name == "all") return SegmentMode::AllSegments;
    return std::nullopt;
}

std::string report_to_json(const EvaluationReport& report) {
    json per_proc = json::array();
    for (const auto& [id, j] : report.jaccard_per_procedure) {
        json tasks = json::object();
        for (const auto& [task, v] : j.per_task) tasks[std::to_string(task.value())] = number(v);
        per_proc.push_back(json{{"procedure_id", id}, {"mean", number(j.mean)}, {"n_tasks", j.n_tasks}, {"per_task", tasks}});
    }
    json jaccard{{"mean", number(report.jaccard_mean)},
                 {"std", number(report.jaccard_std)},
                 {"n", report.jaccard_n},
                 {"per_procedure", per_proc}};

    json per_task = json::array();
    for (const auto& s : report.boundary_summary) {
        per_task.push_back(json{{"task_id", s.task.value()},
                                {"n", s.n},
                                {"n_missing", s.n_missing},
                                {"median_abs_begin_s", number(s.median_abs_begin_s)},
                                {"median_abs_end_s", number(s.median_abs_end_s)},
                                {"median_begin_s", number(s.median_begin_s)},
                                {"median_end_s", number(s.median_end_s)},
                                {"begin_buckets", buckets_json(s.begin_buckets)},
                                {"end_buckets", buckets_json(s.end_buckets)}});
    }
    json per_procedure = json::array();
    for (const auto& [id, errs] : report.boundary_per_procedure) {
        json rows = json::array();
        for (const auto& e : errs) {
            rows.push_back(json{{"task_id", e.task.value()},
                                {"begin_error_s", number(e.begin_error_s)},
                                {"end_error_s", number(e.end_error_s)},
                                {"missing", !e.begin_error_s.has_value()}});
        }
        per_procedure.push_back(json{{"procedure_id", id}, {"tasks", rows}});
    }

    json doc{{"jaccard", jaccard},
             {"boundary_errors", json{{"per_task", per_task}, {"per_procedure", per_procedure}}},
             {"buckets", json{{"begin", buckets_json(report.begin_buckets)}, {"end", buckets_json(report.end_buckets)}}},
             {"correlations_longest", study_json(report.correlations_longest)},
             {"correlations_all", study_json(report.correlations_all)},
             {"quartile_agreement", quartile_json(report.quartile_regime == SegmentMode::LongestOnly
                                                      ? report.correlations_longest
                                                      : report.correlations_all)}};
    if (report.mcnemar) doc["mcnemar"] = mcnemar_json(*report.mcnemar);
    return doc.dump(2) + "\n";
}

std::string scatter_to_csv(const CorrelationStudy& study) {
    std::string out = "task_id,metric_name,procedure_id,gt_value,pred_value\n";
    for (const auto& p : study.scatter) {
        out += std::to_string(p.task.value());
        out += ',';
        out += p.metric_name;
        out += ',';
        out += p.procedure_id;
        out += ',';
        if (p.gt_value) out += format_number(*p.gt_value);
        out += ',';
        if (p.pred_value) out += format_number(*p.pred_value);
        out += '\n';
    }
    return out;
}

std::string mcnemar_to_json(const McNemarComparison& comparison) { return mcnemar_json(comparison).dump(2) + "\n"; }

}  // namespace surgflow
