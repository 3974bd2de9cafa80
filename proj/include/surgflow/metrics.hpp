#pragma once
// Per-task kinematic and event efficiency metrics.
//
// A metric is computed independently on each segment of a task and the
// per-segment results are combined by the metric's aggregation rule:
//   Additive              sum over segments (path length, angular path, counts)
//   DurationWeightedMean  weighted by covered time (speeds, idle fraction, rates)
//   MaxOver               maximum over segments (peak speed)
//   RecomputedOverUnion   recomputed on the concatenation of all segments
//                         (mean inter-event interval)
// A value is Missing (std::nullopt) when the segments hold no usable data.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surgflow/core_model.hpp"

namespace surgflow {

enum class MetricSource { Kinematic, Event };

enum class MetricKind {
    PathLength,
    MeanSpeed,
    MaxSpeed,
    AngularPath,
    IdleFraction,
    EventCount,
    EventRatePerMin,
    MeanInterEventInterval,
};

enum class Aggregation { Additive, DurationWeightedMean, MaxOver, RecomputedOverUnion };

inline constexpr double kDefaultIdleSpeedThreshold = 0.005;  // m/s

std::string_view metric_source_name(MetricSource source);
std::string_view metric_kind_name(MetricKind kind);
std::string_view aggregation_name(Aggregation aggregation);
MetricSource source_of(MetricKind kind);
Aggregation default_aggregation(MetricKind kind);

struct MetricSpec {
    std::string name;
    MetricKind kind = MetricKind::PathLength;
    // Required for per-arm kinematic metrics. For IdleFraction, nullopt pools both arms.
    std::optional<Manipulator> manipulator;
    WristAxis axis = WristAxis::Roll;
    double speed_threshold_m_s = kDefaultIdleSpeedThreshold;
    EventKind event_kind = EventKind::CameraControlOn;
    Aggregation aggregation = Aggregation::Additive;

    MetricSource source() const { return source_of(kind); }
    // Throws Error(InvalidConfig) if fields are inconsistent with the kind.
    void validate() const;
};

MetricSpec path_length(Manipulator m);
MetricSpec mean_speed(Manipulator m);
MetricSpec max_speed(Manipulator m);
MetricSpec angular_path(Manipulator m, WristAxis axis);
MetricSpec idle_fraction(double threshold_m_s, std::optional<Manipulator> m = std::nullopt);
MetricSpec event_count(EventKind kind);
MetricSpec event_rate_per_min(EventKind kind);
MetricSpec mean_inter_event_interval(EventKind kind);

struct MetricRegistry {
    std::vector<MetricSpec> kinematic_specs;
    std::vector<MetricSpec> event_specs;

    std::size_t size() const { return kinematic_specs.size() + event_specs.size(); }
    // Kinematic specs first, then event specs.
    std::vector<const MetricSpec*> all() const;
    // Unique names, each spec valid and filed under its source.
    void validate() const;
};

// 13 kinematic metrics (per-arm path, mean/max speed, roll/pitch/yaw angular
// path, plus pooled idle fraction) and 33 event metrics (count, rate, and mean
// interval for each of the 11 event kinds).
MetricRegistry default_registry();

// JSON list of spec descriptors:
//   [{"name": "...", "source": "kinematic",
//     "definition": {"type": "PathLength", "manipulator": "PSM1"},
//     "aggregation": "Additive"}, ...]
MetricRegistry registry_from_json(const std::string& text, const std::string& origin = {});
MetricRegistry load_registry(const std::filesystem::path& path);
std::string registry_to_json(const MetricRegistry& registry);

using MetricValue = std::optional<double>;

MetricValue compute_kinematic_metric(const MetricSpec& spec, const KinematicsStream& kinematics,
                                     std::span<const Segment> segments);
MetricValue compute_event_metric(const MetricSpec& spec, const EventStream& events,
                                 std::span<const Segment> segments);

struct NamedValue {
    std::string name;
    MetricSource source = MetricSource::Kinematic;
    MetricValue value;

    bool operator==(const NamedValue&) const = default;
};

struct MetricVector {
    std::string procedure_id;
    TaskId task;
    std::vector<NamedValue> values;  // registry order
    double coverage_s = 0.0;

    const NamedValue* find(std::string_view name) const;
    bool operator==(const MetricVector&) const = default;
};

// One vector per task in the segment set, ordered by task id.
std::vector<MetricVector> compute_metrics(const MetricRegistry& registry, const ProcedureRecord& record,
                                          const SegmentSet& segments);

// Columns: procedure_id,task_id,metric_name,value,missing,coverage_s
std::string metrics_to_csv(std::span<const MetricVector> vectors);

// Wraps an angle difference into (-pi, pi].
double wrap_angle(double delta);

}  // namespace surgflow
