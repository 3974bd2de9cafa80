#pragma once
// Domain types for surgical procedures: task labels, segments, manipulator
// kinematics, and system events.

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace surgflow {

// -----------------------------
// Errors
// -----------------------------
enum class ErrorKind {
    MalformedRow,
    UnknownEventKind,
    UnknownManipulator,
    NonMonotonicTimestamps,
    OverlappingGroundTruth,
    LengthMismatch,
    EvenWindow,
    InvalidConfig,
    TooFewPairs,
    Io,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message, std::string file = {}, std::size_t line = 0);

    ErrorKind kind() const noexcept { return kind_; }
    // Message without the kind and location prefix.
    const std::string& detail() const noexcept { return detail_; }
    const std::string& file() const noexcept { return file_; }
    // 1-based line number within file; 0 when not applicable.
    std::size_t line() const noexcept { return line_; }

private:
    ErrorKind kind_;
    std::string detail_;
    std::string file_;
    std::size_t line_;
};

// -----------------------------
// Tasks
// -----------------------------
inline constexpr int kIdleTask = 0;
inline constexpr int kNumTasks = 12;

// 0 = idle/unassigned, 1..12 = prostatectomy steps.
class TaskId {
public:
    constexpr TaskId() = default;
    explicit TaskId(int value);

    constexpr int value() const noexcept { return value_; }
    constexpr bool is_idle() const noexcept { return value_ == kIdleTask; }

    friend constexpr auto operator<=>(TaskId, TaskId) = default;

private:
    std::uint8_t value_ = 0;
};

std::string_view task_name(TaskId task);

// -----------------------------
// Labels and segments
// -----------------------------
class LabelStream {
public:
    LabelStream(std::vector<TaskId> labels, double frame_rate_hz = 1.0, double start_time_s = 0.0);

    std::span<const TaskId> labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }
    TaskId operator[](std::size_t i) const { return labels_[i]; }
    double frame_rate_hz() const noexcept { return frame_rate_hz_; }
    double start_time_s() const noexcept { return start_time_s_; }
    double frame_time(std::size_t i) const noexcept {
        return start_time_s_ + static_cast<double>(i) / frame_rate_hz_;
    }
    double duration_s() const noexcept { return static_cast<double>(labels_.size()) / frame_rate_hz_; }

    bool operator==(const LabelStream&) const = default;

private:
    std::vector<TaskId> labels_;
    double frame_rate_hz_;
    double start_time_s_;
};

LabelStream make_labels(std::initializer_list<int> ids, double frame_rate_hz = 1.0);

// Half-open interval [begin_s, end_s) assigned to a non-idle task.
struct Segment {
    TaskId task;
    double begin_s = 0.0;
    double end_s = 0.0;

    Segment() = default;
    Segment(TaskId task, double begin_s, double end_s);

    double duration_s() const noexcept { return end_s - begin_s; }
    bool contains(double t) const noexcept { return t >= begin_s && t < end_s; }
    bool operator==(const Segment&) const = default;
};

enum class SegmentMode { LongestOnly, AllSegments };

class SegmentSet {
public:
    explicit SegmentSet(SegmentMode mode = SegmentMode::AllSegments) : mode_(mode) {}

    // Appends a segment; same-task segments must arrive in time order and not overlap.
    void add(const Segment& seg);

    SegmentMode mode() const noexcept { return mode_; }
    const std::map<TaskId, std::vector<Segment>>& by_task() const noexcept { return by_task_; }
    std::span<const Segment> segments(TaskId task) const;
    bool contains(TaskId task) const { return by_task_.contains(task); }
    bool empty() const noexcept { return by_task_.empty(); }
    std::size_t task_count() const noexcept { return by_task_.size(); }
    // All segments ordered by task, then begin time.
    std::vector<Segment> flatten() const;

    bool operator==(const SegmentSet&) const = default;

private:
    SegmentMode mode_;
    std::map<TaskId, std::vector<Segment>> by_task_;
};

// Maximal constant run, including idle runs.
struct LabelRun {
    TaskId task;
    double begin_s = 0.0;
    double end_s = 0.0;
    std::size_t first_frame = 0;
    std::size_t frame_count = 0;

    bool operator==(const LabelRun&) const = default;
};

std::vector<LabelRun> labels_to_runs(const LabelStream& labels);

// Rasterizes segments onto the frame clock. A frame is labeled t iff its start
// instant lies in a segment of t; uncovered frames are idle.
LabelStream annotation_to_labels(const SegmentSet& annotation, double duration_s,
                                 double frame_rate_hz = 1.0);

// floor(duration * rate) with a guard against representation error just below an integer.
std::size_t frame_count_for(double duration_s, double frame_rate_hz);

// -----------------------------
// Kinematics
// -----------------------------
enum class Manipulator : std::uint8_t { PSM1 = 0, PSM2 = 1 };
inline constexpr std::array<Manipulator, 2> kManipulators = {Manipulator::PSM1, Manipulator::PSM2};

std::string_view manipulator_name(Manipulator m);
std::optional<Manipulator> parse_manipulator(std::string_view name);

enum class WristAxis : std::uint8_t { Roll = 0, Pitch = 1, Yaw = 2 };
inline constexpr std::array<WristAxis, 3> kWristAxes = {WristAxis::Roll, WristAxis::Pitch, WristAxis::Yaw};

std::string_view wrist_axis_name(WristAxis axis);
std::optional<WristAxis> parse_wrist_axis(std::string_view name);

struct KinematicsSample {
    double t_s = 0.0;
    Manipulator manipulator = Manipulator::PSM1;
    std::array<double, 3> position{};  // meters
    std::array<double, 3> wrist{};     // roll, pitch, yaw in radians

    bool operator==(const KinematicsSample&) const = default;
};

// Samples split per manipulator, each strictly increasing in time.
class KinematicsStream {
public:
    KinematicsStream() = default;
    KinematicsStream(std::vector<KinematicsSample> psm1, std::vector<KinematicsSample> psm2);

    std::span<const KinematicsSample> samples(Manipulator m) const noexcept {
        return per_arm_[static_cast<std::size_t>(m)];
    }
    std::size_t total_samples() const noexcept { return per_arm_[0].size() + per_arm_[1].size(); }

    bool operator==(const KinematicsStream&) const = default;

private:
    std::array<std::vector<KinematicsSample>, 2> per_arm_;
};

// -----------------------------
// Events
// -----------------------------
enum class EventKind : std::uint8_t {
    CameraControlOn,
    CameraControlOff,
    EnergyOn,
    EnergyOff,
    ClutchOn,
    ClutchOff,
    HeadIn,
    HeadOut,
    ArmSwap,
    InstrumentChangeLeft,
    InstrumentChangeRight,
};
inline constexpr std::size_t kNumEventKinds = 11;

const std::array<EventKind, kNumEventKinds>& all_event_kinds();
std::string_view event_kind_name(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view name);

struct Event {
    double t_s = 0.0;
    EventKind kind = EventKind::CameraControlOn;

    bool operator==(const Event&) const = default;
};

// Sorted by (t_s, kind).
using EventStream = std::vector<Event>;
void sort_events(EventStream& events);

// -----------------------------
// Procedure
// -----------------------------
struct ProcedureRecord {
    std::string procedure_id;
    SegmentSet ground_truth{SegmentMode::LongestOnly};
    LabelStream labels_gt{{TaskId{}}};
    KinematicsStream kinematics;
    EventStream events;
    double duration_s = 0.0;

    bool operator==(const ProcedureRecord&) const = default;
};

// Checks every record invariant; throws Error on the first violation.
void validate_record(const ProcedureRecord& record);

}  // namespace surgflow
