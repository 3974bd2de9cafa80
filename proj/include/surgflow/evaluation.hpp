#pragma once
// Segmentation-model evaluation: frame overlap, boundary timing, and agreement
// between metrics computed from predicted and from ground-truth task boundaries.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surgflow/core_model.hpp"
#include "surgflow/metrics.hpp"
#include "surgflow/stats.hpp"

namespace surgflow {

// -----------------------------
// Frame overlap
// -----------------------------
struct JaccardResult {
    std::map<TaskId, double> per_task;  // tasks present in either stream
    std::optional<double> mean;         // over tasks present in gt
    std::size_t n_tasks = 0;            // tasks in gt
};

// Throws Error(LengthMismatch) unless both streams share length and frame rate.
JaccardResult jaccard_index(const LabelStream& pred, const LabelStream& gt);

// -----------------------------
// Boundaries
// -----------------------------
struct BoundaryError {
    TaskId task;
    std::optional<double> begin_error_s;  // pred - gt; nullopt if task missing in pred
    std::optional<double> end_error_s;
};

// Compares the first segment of each gt task with the first segment of the
// same task in pred (pred is expected in LongestOnly mode).
std::vector<BoundaryError> boundary_errors(const SegmentSet& pred, const SegmentSet& gt);

inline const std::vector<double> kDefaultThresholds = {60.0, 120.0, 240.0};

struct BucketResult {
    std::vector<double> thresholds_s;
    std::size_t n = 0;
    std::vector<std::optional<double>> within;  // cumulative fraction <= thresholds_s[k]
    std::optional<double> above;                // fraction > last threshold
};

// Thresholds must be ascending and errors non-negative.
BucketResult threshold_buckets(std::span<const double> abs_errors_s,
                               std::span<const double> thresholds_s = kDefaultThresholds);

// -----------------------------
// Quartiles
// -----------------------------
struct QuartileResult {
    std::size_t n_same = 0;
    std::size_t n = 0;
    std::size_t excluded = 0;
    double fraction = 0.0;
};

// Quartile q = ceil(4 * rank / n) of each value, rank 1..n ascending, ties by position.
std::vector<int> quartiles(std::span<const double> values);

// Pairs with a Missing side are dropped first. Throws Error(TooFewPairs) if fewer
// than 4 pairs remain and Error(LengthMismatch) for unequal inputs.
QuartileResult quartile_agreement(std::span<const MetricValue> pred, std::span<const MetricValue> gt);
QuartileResult quartile_agreement(std::span<const double> pred, std::span<const double> gt);

// -----------------------------
// Correlation study
// -----------------------------
struct CorrelationResult {
    TaskId task;
    std::string metric_name;
    MetricSource source = MetricSource::Kinematic;
    PearsonResult pearson;
    std::size_t n_pairs = 0;
    std::size_t excluded = 0;  // procedures with the task in gt but a Missing side
    std::optional<QuartileResult> quartile;
};

struct TaskCorrelationSummary {
    TaskId task;
    MetricSource source = MetricSource::Kinematic;
    std::size_t n_defined = 0;
    std::size_t n_undefined = 0;
    std::optional<double> mean_rho;
    std::optional<double> std_rho;
    std::optional<double> median_p;
    bool significant = false;  // median_p < 0.05
};

struct RhoBand {
    double lo = 0.0;
    double hi = 0.0;  // [lo, hi); the top band also includes hi
    std::optional<MetricSource> source;  // nullopt = both sources
    std::size_t n = 0;                   // entries with a defined rho and quartile result
    std::optional<double> mean_quartile_fraction;
};

inline const std::vector<double> kRhoBandEdges = {-1.0, 0.2, 0.6, 1.0};
inline constexpr double kSignificanceLevel = 0.05;

struct ScatterPoint {
    TaskId task;
    std::string metric_name;
    std::string procedure_id;
    MetricValue gt_value;
    MetricValue pred_value;
};

struct CorrelationStudy {
    SegmentMode regime = SegmentMode::LongestOnly;
    std::size_t n_procedures = 0;
    std::vector<CorrelationResult> entries;  // ordered by task, then metric name
    std::vector<TaskCorrelationSummary> summaries;
    std::vector<RhoBand> bands;
    std::vector<ScatterPoint> scatter;
};

// Metric vectors of one procedure from gt boundaries and from predicted boundaries.
struct ProcedureMetrics {
    std::string procedure_id;
    std::vector<MetricVector> gt;
    std::vector<MetricVector> pred;
};

ProcedureMetrics procedure_metrics(const MetricRegistry& registry, const ProcedureRecord& record,
                                   const LabelStream& prediction, SegmentMode regime);

// Correlates gt-derived against prediction-derived metric values across procedures.
CorrelationStudy correlate_metrics(std::span<const ProcedureMetrics> metrics, const MetricRegistry& registry,
                                   SegmentMode regime);

// Requires at least 3 procedures. Per-procedure metric computation fans out to
// `jobs` workers; results do not depend on the worker count.
CorrelationStudy correlation_study(std::span<const ProcedureRecord> procedures,
                                   std::span<const LabelStream> predictions, const MetricRegistry& registry,
                                   SegmentMode regime, std::size_t jobs = 1);

// -----------------------------
// Model comparison
// -----------------------------
struct McNemarComparison {
    McNemarResult result;
    std::size_t n_frames = 0;
    double accuracy_a = 0.0;
    double accuracy_b = 0.0;
    std::string flags_source;  // which label files produced the flags
};

McNemarComparison compare_models(std::span<const LabelStream> gt, std::span<const LabelStream> pred_a,
                                 std::span<const LabelStream> pred_b, std::string flags_source);

// -----------------------------
// Full report
// -----------------------------
struct TaskBoundarySummary {
    TaskId task;
    std::size_t n = 0;  // procedures with the task in gt
    std::size_t n_missing = 0;
    std::optional<double> median_abs_begin_s;
    std::optional<double> median_abs_end_s;
    std::optional<double> median_begin_s;
    std::optional<double> median_end_s;
    BucketResult begin_buckets;
    BucketResult end_buckets;
};

struct EvaluationOptions {
    std::vector<double> thresholds_s = kDefaultThresholds;
    SegmentMode scatter_regime = SegmentMode::LongestOnly;
    std::size_t jobs = 1;
};

struct EvaluationReport {
    std::vector<std::pair<std::string, JaccardResult>> jaccard_per_procedure;
    std::optional<double> jaccard_mean;
    std::optional<double> jaccard_std;
    std::size_t jaccard_n = 0;

    std::vector<std::pair<std::string, std::vector<BoundaryError>>> boundary_per_procedure;
    std::vector<TaskBoundarySummary> boundary_summary;
    BucketResult begin_buckets;
    BucketResult end_buckets;

    CorrelationStudy correlations_longest;
    CorrelationStudy correlations_all;
    SegmentMode quartile_regime = SegmentMode::LongestOnly;

    std::optional<McNemarComparison> mcnemar;
};

EvaluationReport evaluate(std::span<const ProcedureRecord> procedures, std::span<const LabelStream> predictions,
                          const MetricRegistry& registry, const EvaluationOptions& options);

}  // namespace surgflow
