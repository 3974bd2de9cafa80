#include "surgflow/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace surgflow {

namespace {

std::string format_error(std::string_view message, const std::string& file, std::size_t line) {
    std::ostringstream os;
    if (!file.empty()) {
        os << file;
        if (line > 0) os << ":" << line;
        os << ": ";
    }
    os << message;
    return os.str();
}

constexpr std::array<std::string_view, kNumTasks + 1> kTaskNames = {
    "idle",
    "mobilize colon / drop bladder",
    "Endopelvic fascia / DVC",
    "Anterior bladder neck dissection",
    "Posterior bladder neck dissection",
    "Seminal vesicles",
    "Posterior plane / Denonvilliers",
    "Predicles / nerve sparing",
    "Apical dissection",
    "Posterior anastomosis",
    "Anterior anastomosis",
    "Lymph node dissection L",
    "Lymph node dissection R",
};

constexpr std::array<std::string_view, kNumEventKinds> kEventNames = {
    "camera_control_on",
    "camera_control_off",
    "energy_on",
    "energy_off",
    "clutch_on",
    "clutch_off",
    "head_in",
    "head_out",
    "arm_swap",
    "instrument_change_left",
    "instrument_change_right",
};

}  // namespace

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedRow: return "MalformedRow";
        case ErrorKind::UnknownEventKind: return "UnknownEventKind";
        case ErrorKind::UnknownManipulator: return "UnknownManipulator";
        case ErrorKind::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
        case ErrorKind::OverlappingGroundTruth: return "OverlappingGroundTruth";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::EvenWindow: return "EvenWindow";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::TooFewPairs: return "TooFewPairs";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, std::string message, std::string file, std::size_t line)
    : std::runtime_error(format_error(std::string(error_kind_name(kind)) + ": " + message, file, line)),
      kind_(kind),
      detail_(std::move(message)),
      file_(std::move(file)),
      line_(line) {}

TaskId::TaskId(int value) {
    if (value < kIdleTask || value > kNumTasks) {
        throw Error(ErrorKind::InvalidConfig, "task id out of range 0..12: " + std::to_string(value));
    }
    value_ = static_cast<std::uint8_t>(value);
}

std::string_view task_name(TaskId task) { return kTaskNames[static_cast<std::size_t>(task.value())]; }

LabelStream::LabelStream(std::vector<TaskId> labels, double frame_rate_hz, double start_time_s)
    : labels_(std::move(labels)), frame_rate_hz_(frame_rate_hz), start_time_s_(start_time_s) {
    if (labels_.empty()) throw Error(ErrorKind::InvalidConfig, "label stream must be non-empty");
    if (!(frame_rate_hz_ > 0.0) || !std::isfinite(frame_rate_hz_)) {
        throw Error(ErrorKind::InvalidConfig, "frame rate must be positive");
    }
    if (!std::isfinite(start_time_s_)) throw Error(ErrorKind::InvalidConfig, "start time must be finite");
}

LabelStream make_labels(std::initializer_list<int> ids, double frame_rate_hz) {
    std::vector<TaskId> labels;
    labels.reserve(ids.size());
    for (int id : ids) labels.emplace_back(id);
    return LabelStream(std::move(labels), frame_rate_hz);
}

Segment::Segment(TaskId task_, double begin, double end) : task(task_), begin_s(begin), end_s(end) {
    if (task.is_idle()) throw Error(ErrorKind::MalformedRow, "segment task must be 1..12");
    if (!std::isfinite(begin_s) || !std::isfinite(end_s) || !(begin_s < end_s)) {
        throw Error(ErrorKind::MalformedRow, "segment requires begin < end");
    }
}

void SegmentSet::add(const Segment& seg) {
    auto& list = by_task_[seg.task];
    if (mode_ == SegmentMode::LongestOnly && !list.empty()) {
        throw Error(ErrorKind::MalformedRow,
                    "task " + std::to_string(seg.task.value()) + " has more than one segment");
    }
    if (!list.empty() && seg.begin_s < list.back().end_s) {
        throw Error(ErrorKind::OverlappingGroundTruth,
                    "segments of task " + std::to_string(seg.task.value()) + " overlap or are unsorted");
    }
    list.push_back(seg);
}

std::span<const Segment> SegmentSet::segments(TaskId task) const {
    auto it = by_task_.find(task);
    if (it == by_task_.end()) return {};
    return it->second;
}

std::vector<Segment> SegmentSet::flatten() const {
    std::vector<Segment> out;
    for (const auto& [task, list] : by_task_) out.insert(out.end(), list.begin(), list.end());
    return out;
}

std::vector<LabelRun> labels_to_runs(const LabelStream& labels) {
    std::vector<LabelRun> runs;
    const auto ls = labels.labels();
    std::size_t start = 0;
    for (std::size_t i = 1; i <= ls.size(); ++i) {
        if (i == ls.size() || ls[i] != ls[start]) {
            runs.push_back(LabelRun{ls[start], labels.frame_time(start), labels.frame_time(i), start, i - start});
            start = i;
        }
    }
    return runs;
}

std::size_t frame_count_for(double duration_s, double frame_rate_hz) {
    if (!(duration_s >= 0.0) || !(frame_rate_hz > 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "duration must be >= 0 and frame rate > 0");
    }
    return static_cast<std::size_t>(std::floor(duration_s * frame_rate_hz + 1e-9));
}

LabelStream annotation_to_labels(const SegmentSet& annotation, double duration_s, double frame_rate_hz) {
    const std::size_t n = frame_count_for(duration_s, frame_rate_hz);
    if (n == 0) throw Error(ErrorKind::InvalidConfig, "duration shorter than one frame");

    std::vector<Segment> segs = annotation.flatten();
    std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.begin_s < b.begin_s; });
    for (std::size_t k = 1; k < segs.size(); ++k) {
        if (segs[k].begin_s < segs[k - 1].end_s) {
            throw Error(ErrorKind::OverlappingGroundTruth,
                        "tasks " + std::to_string(segs[k - 1].task.value()) + " and " +
                            std::to_string(segs[k].task.value()) + " overlap");
        }
    }

    std::vector<TaskId> labels(n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / frame_rate_hz;
        while (k < segs.size() && segs[k].end_s <= t) ++k;
        if (k < segs.size() && segs[k].contains(t)) labels[i] = segs[k].task;
    }
    return LabelStream(std::move(labels), frame_rate_hz);
}

std::string_view manipulator_name(Manipulator m) { return m == Manipulator::PSM1 ? "PSM1" : "PSM2"; }

std::optional<Manipulator> parse_manipulator(std::string_view name) {
    if (name == "PSM1") return Manipulator::PSM1;
    if (name == "PSM2") return Manipulator::PSM2;
    return std::nullopt;
}

std::string_view wrist_axis_name(WristAxis axis) {
    switch (axis) {
        case WristAxis::Roll: return "roll";
        case WristAxis::Pitch: return "pitch";
        case WristAxis::Yaw: return "yaw";
    }
    return "?";
}

std::optional<WristAxis> parse_wrist_axis(std::string_view name) {
    for (WristAxis a : kWristAxes) {
        if (wrist_axis_name(a) == name) return a;
    }
    return std::nullopt;
}

KinematicsStream::KinematicsStream(std::vector<KinematicsSample> psm1, std::vector<KinematicsSample> psm2)
    : per_arm_{std::move(psm1), std::move(psm2)} {
    for (Manipulator m : kManipulators) {
        const auto& arm = per_arm_[static_cast<std::size_t>(m)];
        for (std::size_t i = 0; i < arm.size(); ++i) {
            if (arm[i].manipulator != m) {
                throw Error(ErrorKind::UnknownManipulator, "sample filed under the wrong manipulator");
            }
            if (i > 0 && !(arm[i].t_s > arm[i - 1].t_s)) {
                throw Error(ErrorKind::NonMonotonicTimestamps,
                            std::string(manipulator_name(m)) + " samples not strictly increasing");
            }
        }
    }
}

const std::array<EventKind, kNumEventKinds>& all_event_kinds() {
    static const std::array<EventKind, kNumEventKinds> kinds = [] {
        std::array<EventKind, kNumEventKinds> out{};
        for (std::size_t i = 0; i < kNumEventKinds; ++i) out[i] = static_cast<EventKind>(i);
        return out;
    }();
    return kinds;
}

std::string_view event_kind_name(EventKind kind) { return kEventNames[static_cast<std::size_t>(kind)]; }

std::optional<EventKind> parse_event_kind(std::string_view name) {
    for (std::size_t i = 0; i < kNumEventKinds; ++i) {
        if (kEventNames[i] == name) return static_cast<EventKind>(i);
    }
    return std::nullopt;
}

void sort_events(EventStream& events) {
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.t_s != b.t_s) return a.t_s < b.t_s;
        return a.kind < b.kind;
    });
}

void validate_record(const ProcedureRecord& record) {
    if (!(record.duration_s > 0.0)) throw Error(ErrorKind::InvalidConfig, "procedure duration must be positive");
    std::vector<Segment> segs = record.ground_truth.flatten();
    for (const auto& [task, list] : record.ground_truth.by_task()) {
        if (list.size() != 1) {
            throw Error(ErrorKind::MalformedRow,
                        "ground truth must hold one segment for task " + std::to_string(task.value()));
        }
    }
    for (const Segment& s : segs) {
        if (s.begin_s < 0.0 || s.end_s > record.duration_s) {
            throw Error(ErrorKind::MalformedRow,
                        "ground-truth segment of task " + std::to_string(s.task.value()) +
                            " lies outside [0, duration)");
        }
    }
    std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.begin_s < b.begin_s; });
    for (std::size_t k = 1; k < segs.size(); ++k) {
        if (segs[k].begin_s < segs[k - 1].end_s) {
            throw Error(ErrorKind::OverlappingGroundTruth,
                        "tasks " + std::to_string(segs[k - 1].task.value()) + " and " +
                            std::to_string(segs[k].task.value()) + " overlap");
        }
    }
    for (std::size_t i = 1; i < record.events.size(); ++i) {
        if (record.events[i].t_s < record.events[i - 1].t_s) {
            throw Error(ErrorKind::NonMonotonicTimestamps, "events not sorted by time");
        }
    }
}

}  // namespace surgflow
