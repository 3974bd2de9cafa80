#pragma once
// Serialization of evaluation results. JSON objects are emitted with sorted
// keys and every real number rounded to 9 significant digits, so identical
// inputs give byte-identical files.

#include <string>

#include "surgflow/evaluation.hpp"

namespace surgflow {

std::string_view regime_name(SegmentMode mode);
std::optional<SegmentMode> parse_regime(std::string_view name);

// Top-level keys: jaccard, boundary_errors, buckets, correlations_longest,
// correlations_all, quartile_agreement, and mcnemar when a comparison ran.
std::string report_to_json(const EvaluationReport& report);

// Columns: task_id,metric_name,procedure_id,gt_value,pred_value (empty when Missing).
std::string scatter_to_csv(const CorrelationStudy& study);

std::string mcnemar_to_json(const McNemarComparison& comparison);

}  // namespace surgflow
