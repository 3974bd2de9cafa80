#include "surgflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "surgflow/csv_io.hpp"

namespace surgflow {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<Segment> sorted_disjoint(std::span<const Segment> segments) {
    std::vector<Segment> segs(segments.begin(), segments.end());
    std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.begin_s < b.begin_s; });
    for (std::size_t k = 1; k < segs.size(); ++k) {
        if (segs[k].begin_s < segs[k - 1].end_s) throw Error(ErrorKind::InvalidConfig, "metric segments overlap");
    }
    return segs;
}

// Motion statistics of one arm over the sample pairs inside a segment.
struct ArmStats {
    std::size_t pairs = 0;
    double covered_s = 0.0;
    double path_m = 0.0;
    std::array<double, 3> angular_rad{};
    double max_speed = 0.0;
    std::vector<std::size_t> idle_pairs;  // one per requested threshold
};

ArmStats arm_stats(std::span<const KinematicsSample> samples, const Segment& seg,
                   std::span<const double> idle_thresholds) {
    ArmStats st;
    st.idle_pairs.assign(idle_thresholds.size(), 0);
    // A pair counts when [t_a, t_b] lies inside the segment, so a sample sitting
    // exactly on end_s closes the last interval and adjacent segments add up.
    auto before = [](const KinematicsSample& s, double t) { return s.t_s < t; };
    auto after = [](double t, const KinematicsSample& s) { return t < s.t_s; };
    const auto lo = std::lower_bound(samples.begin(), samples.end(), seg.begin_s, before);
    const auto hi = std::upper_bound(lo, samples.end(), seg.end_s, after);
    for (auto it = lo; it != hi && std::next(it) != hi; ++it) {
        const KinematicsSample& a = *it;
        const KinematicsSample& b = *std::next(it);
        const double dt = b.t_s - a.t_s;
        const double dx = b.position[0] - a.position[0];
        const double dy = b.position[1] - a.position[1];
        const double dz = b.position[2] - a.position[2];
        const double step = std::sqrt(dx * dx + dy * dy + dz * dz);
        const double speed = step / dt;
        ++st.pairs;
        st.covered_s += dt;
        st.path_m += step;
        for (std::size_t k = 0; k < 3; ++k) st.angular_rad[k] += std::abs(wrap_angle(b.wrist[k] - a.wrist[k]));
        st.max_speed = std::max(st.max_speed, speed);
        for (std::size_t k = 0; k < idle_thresholds.size(); ++k) {
            if (speed < idle_thresholds[k]) ++st.idle_pairs[k];
        }
    }
    return st;
}

struct Partial {
    MetricValue value;
    double weight = 0.0;
};

MetricValue finite_or_missing(MetricValue v) {
    if (v && !std::isfinite(*v)) return std::nullopt;
    return v;
}

MetricValue aggregate(Aggregation aggregation, std::span<const Partial> parts) {
    MetricValue out;
    switch (aggregation) {
        case Aggregation::Additive:
            for (const Partial& p : parts) {
                if (p.value) out = out.value_or(0.0) + *p.value;
            }
            break;
        case Aggregation::DurationWeightedMean: {
            double num = 0.0;
            double den = 0.0;
            for (const Partial& p : parts) {
                if (p.value && p.weight > 0.0) {
                    num += p.weight * *p.value;
                    den += p.weight;
                }
            }
            if (den > 0.0) out = num / den;
            break;
        }
        case Aggregation::MaxOver:
            for (const Partial& p : parts) {
                if (p.value) out = std::max(out.value_or(*p.value), *p.value);
            }
            break;
        case Aggregation::RecomputedOverUnion:
            throw Error(ErrorKind::InvalidConfig, "union recomputation has no per-segment form");
    }
    return finite_or_missing(out);
}

// idle_index selects the entry of ArmStats::idle_pairs matching spec.speed_threshold_m_s.
Partial kinematic_partial(const MetricSpec& spec, const std::array<ArmStats, 2>& arms, std::size_t idle_index) {
    if (spec.kind == MetricKind::IdleFraction) {
        std::size_t pairs = 0;
        std::size_t idle = 0;
        double covered = 0.0;
        for (Manipulator m : kManipulators) {
            if (spec.manipulator && *spec.manipulator != m) continue;
            const ArmStats& st = arms[static_cast<std::size_t>(m)];
            pairs += st.pairs;
            idle += st.idle_pairs[idle_index];
            covered += st.covered_s;
        }
        if (pairs == 0) return {};
        return {static_cast<double>(idle) / static_cast<double>(pairs), covered};
    }

    const ArmStats& st = arms[static_cast<std::size_t>(*spec.manipulator)];
    if (st.pairs == 0) return {};
    switch (spec.kind) {
        case MetricKind::PathLength: return {st.path_m, st.covered_s};
        case MetricKind::MeanSpeed: return {st.path_m / st.covered_s, st.covered_s};
        case MetricKind::MaxSpeed: return {st.max_speed, st.covered_s};
        case MetricKind::AngularPath: return {st.angular_rad[static_cast<std::size_t>(spec.axis)], st.covered_s};
        default: throw Error(ErrorKind::InvalidConfig, "not a kinematic metric: " + spec.name);
    }
}

std::vector<double> event_times(const EventStream& events, EventKind kind) {
    std::vector<double> times;
    for (const Event& e : events) {
        if (e.kind == kind) times.push_back(e.t_s);
    }
    return times;
}

// `times` sorted ascending; `segs` sorted and disjoint.
MetricValue event_metric_from_times(const MetricSpec& spec, std::span<const double> times,
                                    std::span<const Segment> segs) {
    if (spec.kind == MetricKind::MeanInterEventInterval) {
        // Concatenate segments on a compressed time axis, dropping inter-segment dead time.
        double offset = 0.0;
        std::size_t count = 0;
        double first = 0.0;
        double last = 0.0;
        for (const Segment& seg : segs) {
            const auto lo = std::lower_bound(times.begin(), times.end(), seg.begin_s);
            const auto hi = std::lower_bound(lo, times.end(), seg.end_s);
            for (auto it = lo; it != hi; ++it) {
                const double c = *it - seg.begin_s + offset;
                if (count == 0) first = c;
                last = c;
                ++count;
            }
            offset += seg.duration_s();
        }
        if (count < 2) return std::nullopt;
        return finite_or_missing((last - first) / static_cast<double>(count - 1));
    }

    std::vector<Partial> parts;
    parts.reserve(segs.size());
    for (const Segment& seg : segs) {
        const auto lo = std::lower_bound(times.begin(), times.end(), seg.begin_s);
        const auto hi = std::lower_bound(lo, times.end(), seg.end_s);
        const auto count = static_cast<double>(hi - lo);
        if (spec.kind == MetricKind::EventCount) {
            parts.push_back({count, seg.duration_s()});
        } else {
            parts.push_back({count / (seg.duration_s() / 60.0), seg.duration_s()});
        }
    }
    if (spec.kind == MetricKind::EventCount && parts.empty()) return 0.0;
    return aggregate(spec.aggregation, parts);
}

}  // namespace

double wrap_angle(double delta) {
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    double d = std::remainder(delta, kTwoPi);
    if (d <= -std::numbers::pi) d += kTwoPi;
    return d;
}

std::string_view metric_source_name(MetricSource source) {
    return source == MetricSource::Kinematic ? "kinematic" : "event";
}

std::string_view metric_kind_name(MetricKind kind) {
    switch (kind) {
        case MetricKind::PathLength: return "PathLength";
        case MetricKind::MeanSpeed: return "MeanSpeed";
        case MetricKind::MaxSpeed: return "MaxSpeed";
        case MetricKind::AngularPath: return "AngularPath";
        case MetricKind::IdleFraction: return "IdleFraction";
        case MetricKind::EventCount: return "EventCount";
        case MetricKind::EventRatePerMin: return "EventRatePerMin";
        case MetricKind::MeanInterEventInterval: return "MeanInterEventInterval";
    }
    return "?";
}

std::string_view aggregation_name(Aggregation aggregation) {
    switch (aggregation) {
        case Aggregation::Additive: return "Additive";
        case Aggregation::DurationWeightedMean: return "DurationWeightedMean";
        case Aggregation::MaxOver: return "MaxOver";
        case Aggregation::RecomputedOverUnion: return "RecomputedOverUnion";
    }
    return "?";
}

MetricSource source_of(MetricKind kind) {
    switch (kind) {
        case MetricKind::EventCount:
        case MetricKind::EventRatePerMin:
        case MetricKind::MeanInterEventInterval: return MetricSource::Event;
        default: return MetricSource::Kinematic;
    }
}

Aggregation default_aggregation(MetricKind kind) {
    switch (kind) {
        case MetricKind::PathLength:
        case MetricKind::AngularPath:
        case MetricKind::EventCount: return Aggregation::Additive;
        case MetricKind::MeanSpeed:
        case MetricKind::IdleFraction:
        case MetricKind::EventRatePerMin: return Aggregation::DurationWeightedMean;
        case MetricKind::MaxSpeed: return Aggregation::MaxOver;
        case MetricKind::MeanInterEventInterval: return Aggregation::RecomputedOverUnion;
    }
    return Aggregation::Additive;
}

void MetricSpec::validate() const {
    if (name.empty()) throw Error(ErrorKind::InvalidConfig, "metric name must be non-empty");
    if (aggregation != default_aggregation(kind)) {
        throw Error(ErrorKind::InvalidConfig, "metric '" + name + "': aggregation " +
                                                  std::string(aggregation_name(aggregation)) + " does not fit " +
                                                  std::string(metric_kind_name(kind)));
    }
    const bool per_arm = kind == MetricKind::PathLength || kind == MetricKind::MeanSpeed ||
                         kind == MetricKind::MaxSpeed || kind == MetricKind::AngularPath;
    if (per_arm && !manipulator) {
        throw Error(ErrorKind::UnknownManipulator, "metric '" + name + "' needs a manipulator");
    }
    if (kind == MetricKind::IdleFraction && !(speed_threshold_m_s > 0.0 && std::isfinite(speed_threshold_m_s))) {
        throw Error(ErrorKind::InvalidConfig, "metric '" + name + "': idle threshold must be positive");
    }
}

MetricSpec path_length(Manipulator m) {
    MetricSpec s;
    s.name = "path_length_" + lower(manipulator_name(m));
    s.kind = MetricKind::PathLength;
    s.manipulator = m;
    s.aggregation = default_aggregation(s.kind);
    return s;
}

MetricSpec mean_speed(Manipulator m) {
    MetricSpec s = path_length(m);
    s.name = "mean_speed_" + lower(manipulator_name(m));
    s.kind = MetricKind::MeanSpeed;
    s.aggregation = default_aggregation(s.kind);
    return s;
}

MetricSpec max_speed(Manipulator m) {
    MetricSpec s = path_length(m);
    s.name = "max_speed_" + lower(manipulator_name(m));
    s.kind = MetricKind::MaxSpeed;
    s.aggregation = default_aggregation(s.kind);
    return s;
}

MetricSpec angular_path(Manipulator m, WristAxis axis) {
    MetricSpec s = path_length(m);
    s.name = "angular_path_" + std::string(wrist_axis_name(axis)) + "_" + lower(manipulator_name(m));
    s.kind = MetricKind::AngularPath;
    s.axis = axis;
    s.aggregation = default_aggregation(s.kind);
    return s;
}

MetricSpec idle_fraction(double threshold_m_s, std::optional<Manipulator> m) {
    MetricSpec s;
    s.name = m ? "idle_fraction_" + lower(manipulator_name(*m)) : "idle_fraction";
    s.kind = MetricKind::IdleFraction;
    s.manipulator = m;
    s.speed_threshold_m_s = threshold_m_s;
    s.aggregation = default_aggregation(s.kind);
    return s;
}

MetricSpec event_count(EventKind kind) {
    MetricSpec s;
    s.name = "event_count_" + std::string(event_kind_name(kind));
    s.kind = MetricKind::EventCount;
    s.event_kind = kind;
    s.aggregation = default_aggregation(s.kind);
    return s;
}

MetricSpec event_rate_per_min(EventKind kind) {
    MetricSpec s = event_count(kind);
    s.name = "event_rate_per_min_" + std::string(event_kind_name(kind));
    s.kind = MetricKind::EventRatePerMin;
    s.aggregation = default_aggregation(s.kind);
    return s;
}

MetricSpec mean_inter_event_interval(EventKind kind) {
    MetricSpec s = event_count(kind);
    s.name = "mean_interval_s_" + std::string(event_kind_name(kind));
    s.kind = MetricKind::MeanInterEventInterval;
    s.aggregation = default_aggregation(s.kind);
    return s;
}

std::vector<const MetricSpec*> MetricRegistry::all() const {
    std::vector<const MetricSpec*> out;
    out.reserve(size());
    for (const auto& s : kinematic_specs) out.push_back(&s);
    for (const auto& s : event_specs) out.push_back(&s);
    return out;
}

void MetricRegistry::validate() const {
    std::set<std::string> names;
    for (const MetricSpec* s : all()) {
        s->validate();
        if (!names.insert(s->name).second) throw Error(ErrorKind::InvalidConfig, "duplicate metric name '" + s->name + "'");
    }
    for (const auto& s : kinematic_specs) {
        if (s.source() != MetricSource::Kinematic) {
            throw Error(ErrorKind::InvalidConfig, "metric '" + s.name + "' is not kinematic");
        }
    }
    for (const auto& s : event_specs) {
        if (s.source() != MetricSource::Event) throw Error(ErrorKind::InvalidConfig, "metric '" + s.name + "' is not event based");
    }
}

MetricRegistry default_registry() {
    MetricRegistry reg;
    for (Manipulator m : kManipulators) {
        reg.kinematic_specs.push_back(path_length(m));
        reg.kinematic_specs.push_back(mean_speed(m));
        reg.kinematic_specs.push_back(max_speed(m));
        for (WristAxis axis : kWristAxes) reg.kinematic_specs.push_back(angular_path(m, axis));
    }
    reg.kinematic_specs.push_back(idle_fraction(kDefaultIdleSpeedThreshold));
    for (EventKind kind : all_event_kinds()) {
        reg.event_specs.push_back(event_count(kind));
        reg.event_specs.push_back(event_rate_per_min(kind));
        reg.event_specs.push_back(mean_inter_event_interval(kind));
    }
    return reg;
}

MetricValue compute_kinematic_metric(const MetricSpec& spec, const KinematicsStream& kinematics,
                                     std::span<const Segment> segments) {
    spec.validate();
    if (spec.source() != MetricSource::Kinematic) {
        throw Error(ErrorKind::InvalidConfig, "metric '" + spec.name + "' is not kinematic");
    }
    const std::vector<Segment> segs = sorted_disjoint(segments);
    const double thresholds[1] = {spec.speed_threshold_m_s};
    std::vector<Partial> parts;
    parts.reserve(segs.size());
    for (const Segment& seg : segs) {
        std::array<ArmStats, 2> arms;
        for (Manipulator m : kManipulators) {
            arms[static_cast<std::size_t>(m)] = arm_stats(kinematics.samples(m), seg, thresholds);
        }
        parts.push_back(kinematic_partial(spec, arms, 0));
    }
    return aggregate(spec.aggregation, parts);
}

MetricValue compute_event_metric(const MetricSpec& spec, const EventStream& events,
                                 std::span<const Segment> segments) {
    spec.validate();
    if (spec.source() != MetricSource::Event) {
        throw Error(ErrorKind::InvalidConfig, "metric '" + spec.name + "' is not event based");
    }
    const std::vector<Segment> segs = sorted_disjoint(segments);
    std::vector<double> times = event_times(events, spec.event_kind);
    std::sort(times.begin(), times.end());
    return event_metric_from_times(spec, times, segs);
}

const NamedValue* MetricVector::find(std::string_view name) const {
    for (const auto& v : values) {
        if (v.name == name) return &v;
    }
    return nullptr;
}

std::vector<MetricVector> compute_metrics(const MetricRegistry& registry, const ProcedureRecord& record,
                                          const SegmentSet& segments) {
    registry.validate();

    // Distinct idle thresholds, so each arm/segment pass evaluates all of them at once.
    std::vector<double> thresholds;
    for (const auto& s : registry.kinematic_specs) {
        if (s.kind == MetricKind::IdleFraction &&
            std::find(thresholds.begin(), thresholds.end(), s.speed_threshold_m_s) == thresholds.end()) {
            thresholds.push_back(s.speed_threshold_m_s);
        }
    }
    auto threshold_index = [&](const MetricSpec& s) -> std::size_t {
        if (s.kind != MetricKind::IdleFraction) return 0;
        return static_cast<std::size_t>(std::find(thresholds.begin(), thresholds.end(), s.speed_threshold_m_s) -
                                        thresholds.begin());
    };

    std::array<std::vector<double>, kNumEventKinds> times_by_kind;
    for (const Event& e : record.events) times_by_kind[static_cast<std::size_t>(e.kind)].push_back(e.t_s);
    for (auto& t : times_by_kind) std::sort(t.begin(), t.end());

    std::vector<MetricVector> out;
    for (const auto& [task, list] : segments.by_task()) {
        const std::vector<Segment> segs = sorted_disjoint(list);
        MetricVector mv;
        mv.procedure_id = record.procedure_id;
        mv.task = task;
        for (const Segment& s : segs) mv.coverage_s += s.duration_s();

        std::vector<std::array<ArmStats, 2>> stats;
        stats.reserve(segs.size());
        for (const Segment& seg : segs) {
            std::array<ArmStats, 2> arms;
            for (Manipulator m : kManipulators) {
                arms[static_cast<std::size_t>(m)] = arm_stats(record.kinematics.samples(m), seg, thresholds);
            }
            stats.push_back(std::move(arms));
        }

        for (const MetricSpec& spec : registry.kinematic_specs) {
            std::vector<Partial> parts;
            parts.reserve(stats.size());
            for (const auto& arms : stats) parts.push_back(kinematic_partial(spec, arms, threshold_index(spec)));
            mv.values.push_back({spec.name, MetricSource::Kinematic, aggregate(spec.aggregation, parts)});
        }
        for (const MetricSpec& spec : registry.event_specs) {
            const auto& times = times_by_kind[static_cast<std::size_t>(spec.event_kind)];
            mv.values.push_back({spec.name, MetricSource::Event, event_metric_from_times(spec, times, segs)});
        }
        out.push_back(std::move(mv));
    }
    return out;
}

std::string metrics_to_csv(std::span<const MetricVector> vectors) {
    std::string out = "procedure_id,task_id,metric_name,value,missing,coverage_s\n";
    for (const MetricVector& mv : vectors) {
        for (const NamedValue& v : mv.values) {
            out += mv.procedure_id;
            out += ',';
            out += std::to_string(mv.task.value());
            out += ',';
            out += v.name;
            out += ',';
            if (v.value) out += format_number(*v.value);
            out += v.value ? ",false," : ",true,";
            out += format_number(mv.coverage_s);
            out += '\n';
        }
    }
    return out;
}

}  // namespace surgflow
