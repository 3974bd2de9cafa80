#include "surgflow/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "surgflow/parallel.hpp"
#include "surgflow/postprocess.hpp"

namespace surgflow {

JaccardResult jaccard_index(const LabelStream& pred, const LabelStream& gt) {
    if (pred.size() != gt.size() || pred.frame_rate_hz() != gt.frame_rate_hz()) {
        throw Error(ErrorKind::LengthMismatch, "prediction has " + std::to_string(pred.size()) +
                                                   " frames, ground truth " + std::to_string(gt.size()));
    }
    std::array<std::size_t, kNumTasks + 1> inter{};
    std::array<std::size_t, kNumTasks + 1> in_pred{};
    std::array<std::size_t, kNumTasks + 1> in_gt{};
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const auto p = static_cast<std::size_t>(pred[i].value());
        const auto g = static_cast<std::size_t>(gt[i].value());
        ++in_pred[p];
        ++in_gt[g];
        if (p == g) ++inter[g];
    }
    JaccardResult r;
    double sum = 0.0;
    for (int t = 1; t <= kNumTasks; ++t) {
        const auto k = static_cast<std::size_t>(t);
        const std::size_t uni = in_pred[k] + in_gt[k] - inter[k];
        if (uni == 0) continue;
        const double j = static_cast<double>(inter[k]) / static_cast<double>(uni);
        r.per_task[TaskId(t)] = j;
        if (in_gt[k] > 0) {
            sum += j;
            ++r.n_tasks;
        }
    }
    if (r.n_tasks > 0) r.mean = sum / static_cast<double>(r.n_tasks);
    return r;
}

std::vector<BoundaryError> boundary_errors(const SegmentSet& pred, const SegmentSet& gt) {
    std::vector<BoundaryError> out;
    for (const auto& [task, list] : gt.by_task()) {
        BoundaryError e{task, std::nullopt, std::nullopt};
        const auto p = pred.segments(task);
        if (!p.empty() && !list.empty()) {
            e.begin_error_s = p.front().begin_s - list.front().begin_s;
            e.end_error_s = p.front().end_s - list.front().end_s;
        }
        out.push_back(e);
    }
    return out;
}

BucketResult threshold_buckets(std::span<const double> abs_errors_s, std::span<const double> thresholds_s) {
    if (!std::is_sorted(thresholds_s.begin(), thresholds_s.end()) || thresholds_s.empty()) {
        throw Error(ErrorKind::InvalidConfig, "bucket thresholds must be non-empty and ascending");
    }
    BucketResult r;
    r.thresholds_s.assign(thresholds_s.begin(), thresholds_s.end());
    r.n = abs_errors_s.size();
    r.within.assign(thresholds_s.size(), std::nullopt);
    if (r.n == 0) return r;
    for (double e : abs_errors_s) {
        if (!(e >= 0.0)) throw Error(ErrorKind::InvalidConfig, "absolute errors must be non-negative");
    }
    const double n = static_cast<double>(r.n);
    for (std::size_t k = 0; k < thresholds_s.size(); ++k) {
        const auto count = std::count_if(abs_errors_s.begin(), abs_errors_s.end(),
                                         [&](double e) { return e <= thresholds_s[k]; });
        r.within[k] = static_cast<double>(count) / n;
    }
    const auto over = std::count_if(abs_errors_s.begin(), abs_errors_s.end(),
                                    [&](double e) { return e > thresholds_s.back(); });
    r.above = static_cast<double>(over) / n;
    return r;
}

std::vector<int> quartiles(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<int> q(n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t rank = r + 1;
        q[order[r]] = static_cast<int>((4 * rank + n - 1) / n);
    }
    return q;
}

QuartileResult quartile_agreement(std::span<const double> pred, std::span<const double> gt) {
    if (pred.size() != gt.size()) throw Error(ErrorKind::LengthMismatch, "quartile series differ in length");
    if (pred.size() < 4) throw Error(ErrorKind::TooFewPairs, "quartile agreement needs at least 4 pairs");
    const auto qp = quartiles(pred);
    const auto qg = quartiles(gt);
    QuartileResult r;
    r.n = pred.size();
    for (std::size_t i = 0; i < r.n; ++i) r.n_same += qp[i] == qg[i] ? 1 : 0;
    r.fraction = static_cast<double>(r.n_same) / static_cast<double>(r.n);
    return r;
}

QuartileResult quartile_agreement(std::span<const MetricValue> pred, std::span<const MetricValue> gt) {
    if (pred.size() != gt.size()) throw Error(ErrorKind::LengthMismatch, "quartile series differ in length");
    std::vector<double> p;
    std::vector<double> g;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] && gt[i]) {
            p.push_back(*pred[i]);
            g.push_back(*gt[i]);
        }
    }
    QuartileResult r = quartile_agreement(std::span<const double>(p), std::span<const double>(g));
    r.excluded = pred.size() - p.size();
    return r;
}

ProcedureMetrics procedure_metrics(const MetricRegistry& registry, const ProcedureRecord& record,
                                   const LabelStream& prediction, SegmentMode regime) {
    ProcedureMetrics pm;
    pm.procedure_id = record.procedure_id;
    pm.gt = compute_metrics(registry, record, record.ground_truth);
    pm.pred = compute_metrics(registry, record, select_segments(prediction, regime));
    return pm;
}

namespace {

const MetricVector* find_task(const std::vector<MetricVector>& vectors, TaskId task) {
    for (const auto& mv : vectors) {
        if (mv.task == task) return &mv;
    }
    return nullptr;
}

void summarize(CorrelationStudy& study) {
    for (int t = 1; t <= kNumTasks; ++t) {
        for (MetricSource source : {MetricSource::Event, MetricSource::Kinematic}) {
            TaskCorrelationSummary s;
            s.task = TaskId(t);
            s.source = source;
            std::vector<double> rhos;
            std::vector<double> ps;
            bool any = false;
            for (const auto& e : study.entries) {
                if (e.task != s.task || e.source != source) continue;
                any = true;
                if (e.pearson.defined()) {
                    rhos.push_back(e.pearson.rho);
                    ps.push_back(e.pearson.p_value);
                } else {
                    ++s.n_undefined;
                }
            }
            if (!any) continue;
            s.n_defined = rhos.size();
            if (!rhos.empty()) {
                s.mean_rho = mean(rhos);
                s.std_rho = sample_std(rhos);
                s.median_p = median(ps);
                s.significant = *s.median_p < kSignificanceLevel;
            }
            study.summaries.push_back(s);
        }
    }

    std::vector<std::optional<MetricSource>> sources = {std::nullopt, MetricSource::Event, MetricSource::Kinematic};
    for (const auto& source : sources) {
        for (std::size_t b = 0; b + 1 < kRhoBandEdges.size(); ++b) {
            RhoBand band;
            band.lo = kRhoBandEdges[b];
            band.hi = kRhoBandEdges[b + 1];
            band.source = source;
            const bool top = b + 2 == kRhoBandEdges.size();
            double sum = 0.0;
            for (const auto& e : study.entries) {
                if (source && e.source != *source) continue;
                if (!e.pearson.defined() || !e.quartile) continue;
                const double rho = e.pearson.rho;
                if (rho < band.lo || (top ? rho > band.hi : rho >= band.hi)) continue;
                ++band.n;
                sum += e.quartile->fraction;
            }
            if (band.n > 0) band.mean_quartile_fraction = sum / static_cast<double>(band.n);
            study.bands.push_back(band);
        }
    }
}

}  // namespace

CorrelationStudy correlate_metrics(std::span<const ProcedureMetrics> metrics, const MetricRegistry& registry,
                                   SegmentMode regime) {
    CorrelationStudy study;
    study.regime = regime;
    study.n_procedures = metrics.size();

    std::vector<const MetricSpec*> specs = registry.all();
    std::stable_sort(specs.begin(), specs.end(), [](const MetricSpec* a, const MetricSpec* b) { return a->name < b->name; });

    for (int t = 1; t <= kNumTasks; ++t) {
        const TaskId task(t);
        std::vector<const MetricVector*> gt_vecs(metrics.size(), nullptr);
        std::vector<const MetricVector*> pred_vecs(metrics.size(), nullptr);
        bool any = false;
        for (std::size_t p = 0; p < metrics.size(); ++p) {
            gt_vecs[p] = find_task(metrics[p].gt, task);
            pred_vecs[p] = find_task(metrics[p].pred, task);
            any = any || gt_vecs[p] != nullptr;
        }
        if (!any) continue;

        for (const MetricSpec* spec : specs) {
            CorrelationResult r;
            r.task = task;
            r.metric_name = spec->name;
            r.source = spec->source();
            std::vector<double> xs;
            std::vector<double> ys;
            for (std::size_t p = 0; p < metrics.size(); ++p) {
                if (gt_vecs[p] == nullptr) continue;
                const NamedValue* g = gt_vecs[p]->find(spec->name);
                const NamedValue* q = pred_vecs[p] != nullptr ? pred_vecs[p]->find(spec->name) : nullptr;
                ScatterPoint point{task, spec->name, metrics[p].procedure_id, g ? g->value : std::nullopt,
                                   q ? q->value : std::nullopt};
                if (point.gt_value && point.pred_value) {
                    xs.push_back(*point.gt_value);
                    ys.push_back(*point.pred_value);
                } else {
                    ++r.excluded;
                }
                study.scatter.push_back(std::move(point));
            }
            r.n_pairs = xs.size();
            r.pearson = pearson(xs, ys);
            if (xs.size() >= 4) r.quartile = quartile_agreement(std::span<const double>(ys), std::span<const double>(xs));
            study.entries.push_back(std::move(r));
        }
    }
    summarize(study);
    return study;
}

CorrelationStudy correlation_study(std::span<const ProcedureRecord> procedures,
                                   std::span<const LabelStream> predictions, const MetricRegistry& registry,
                                   SegmentMode regime, std::size_t jobs) {
    if (procedures.size() != predictions.size()) {
        throw Error(ErrorKind::LengthMismatch, "one prediction stream is needed per procedure");
    }
    if (procedures.size() < 3) throw Error(ErrorKind::TooFewPairs, "correlation study needs at least 3 procedures");
    registry.validate();
    std::vector<ProcedureMetrics> metrics(procedures.size());
    parallel_for(procedures.size(), jobs, [&](std::size_t i) {
        metrics[i] = procedure_metrics(registry, procedures[i], predictions[i], regime);
    });
    return correlate_metrics(metrics, registry, regime);
}

McNemarComparison compare_models(std::span<const LabelStream> gt, std::span<const LabelStream> pred_a,
                                 std::span<const LabelStream> pred_b, std::string flags_source) {
    if (gt.size() != pred_a.size() || gt.size() != pred_b.size()) {
        throw Error(ErrorKind::LengthMismatch, "model comparison needs one stream per procedure for each model");
    }
    std::vector<char> flags_a;
    std::vector<char> flags_b;
    for (std::size_t p = 0; p < gt.size(); ++p) {
        if (pred_a[p].size() != gt[p].size() || pred_b[p].size() != gt[p].size()) {
            throw Error(ErrorKind::LengthMismatch, "prediction length differs from ground truth in procedure " +
                                                       std::to_string(p));
        }
        for (std::size_t i = 0; i < gt[p].size(); ++i) {
            flags_a.push_back(pred_a[p][i] == gt[p][i]);
            flags_b.push_back(pred_b[p][i] == gt[p][i]);
        }
    }
    McNemarComparison cmp;
    std::size_t nb = 0;
    std::size_t nc = 0;
    std::size_t ca = 0;
    std::size_t cb = 0;
    for (std::size_t i = 0; i < flags_a.size(); ++i) {
        ca += flags_a[i] ? 1 : 0;
        cb += flags_b[i] ? 1 : 0;
        if (flags_a[i] && !flags_b[i]) ++nb;
        if (!flags_a[i] && flags_b[i]) ++nc;
    }
    cmp.result = mcnemar_from_counts(nb, nc);
    cmp.n_frames = flags_a.size();
    if (cmp.n_frames > 0) {
        cmp.accuracy_a = static_cast<double>(ca) / static_cast<double>(cmp.n_frames);
        cmp.accuracy_b = static_cast<double>(cb) / static_cast<double>(cmp.n_frames);
    }
    cmp.flags_source = std::move(flags_source);
    return cmp;
}

EvaluationReport evaluate(std::span<const ProcedureRecord> procedures, std::span<const LabelStream> predictions,
                          const MetricRegistry& registry, const EvaluationOptions& options) {
    if (procedures.size() != predictions.size()) {
        throw Error(ErrorKind::LengthMismatch, "one prediction stream is needed per procedure");
    }
    EvaluationReport report;
    report.quartile_regime = options.scatter_regime;

    std::vector<double> means;
    std::map<TaskId, std::vector<BoundaryError>> by_task;
    for (std::size_t p = 0; p < procedures.size(); ++p) {
        const ProcedureRecord& rec = procedures[p];
        JaccardResult j = jaccard_index(predictions[p], rec.labels_gt);
        if (j.mean) means.push_back(*j.mean);
        report.jaccard_per_procedure.emplace_back(rec.procedure_id, std::move(j));

        auto errs = boundary_errors(select_longest_segments(predictions[p]), rec.ground_truth);
        for (const auto& e : errs) by_task[e.task].push_back(e);
        report.boundary_per_procedure.emplace_back(rec.procedure_id, std::move(errs));
    }
    report.jaccard_n = means.size();
    if (!means.empty()) {
        report.jaccard_mean = mean(means);
        report.jaccard_std = sample_std(means);
    }

    std::vector<double> all_begin;
    std::vector<double> all_end;
    for (const auto& [task, errs] : by_task) {
        TaskBoundarySummary s;
        s.task = task;
        s.n = errs.size();
        std::vector<double> begin_abs;
        std::vector<double> end_abs;
        std::vector<double> begin_signed;
        std::vector<double> end_signed;
        for (const auto& e : errs) {
            if (!e.begin_error_s) {
                ++s.n_missing;
                continue;
            }
            begin_signed.push_back(*e.begin_error_s);
            end_signed.push_back(*e.end_error_s);
            begin_abs.push_back(std::abs(*e.begin_error_s));
            end_abs.push_back(std::abs(*e.end_error_s));
        }
        if (!begin_abs.empty()) {
            s.median_abs_begin_s = median(begin_abs);
            s.median_abs_end_s = median(end_abs);
            s.median_begin_s = median(begin_signed);
            s.median_end_s = median(end_signed);
        }
        s.begin_buckets = threshold_buckets(begin_abs, options.thresholds_s);
        s.end_buckets = threshold_buckets(end_abs, options.thresholds_s);
        all_begin.insert(all_begin.end(), begin_abs.begin(), begin_abs.end());
        all_end.insert(all_end.end(), end_abs.begin(), end_abs.end());
        report.boundary_summary.push_back(std::move(s));
    }
    report.begin_buckets = threshold_buckets(all_begin, options.thresholds_s);
    report.end_buckets = threshold_buckets(all_end, options.thresholds_s);

    report.correlations_longest =
        correlation_study(procedures, predictions, registry, SegmentMode::LongestOnly, options.jobs);
    report.correlations_all = correlation_study(procedures, predictions, registry, SegmentMode::AllSegments, options.jobs);
    return report;
}

}  // namespace surgflow
