#include "surgflow/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace surgflow {

namespace fs = std::filesystem;

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Attaches the file and line to errors raised by domain constructors.
template <typename Fn>
void at_location(const std::string& file, std::size_t line, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        if (!e.file().empty()) throw;
        throw Error(e.kind(), e.detail(), file, line);
    }
}

// Same text as printf("%.9g"), without the locale and varargs overhead.
std::size_t format_into(char* buf, std::size_t size, double value) {
    const auto res = std::to_chars(buf, buf + size, value == 0.0 ? 0.0 : value, std::chars_format::general, 9);
    return static_cast<std::size_t>(res.ptr - buf);
}

void append_number(std::string& out, double value) {
    char buf[40];
    out.append(buf, format_into(buf, sizeof(buf), value));
}

}  // namespace

std::string format_number(double value) {
    std::string out;
    append_number(out, value);
    return out;
}

double quantize(double value) {
    char buf[40];
    const std::size_t n = format_into(buf, sizeof(buf), value);
    double out = 0.0;
    std::from_chars(buf, buf + n, out);
    return out;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open file for reading", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorKind::Io, "cannot create directory: " + ec.message(), path.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open file for writing", path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed", path.string());
}

void for_each_csv_row(const fs::path& path, const std::vector<std::string>& expected_header, const CsvRowFn& fn) {
    const std::string file = path.string();
    const std::string text = read_text_file(path);
    std::string_view rest(text);
    if (rest.size() >= 3 && rest.substr(0, 3) == "\xEF\xBB\xBF") rest.remove_prefix(3);

    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<std::string_view> fields;
    while (!rest.empty()) {
        const std::size_t nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        ++line_no;
        if (trim(line).empty()) continue;

        fields = split_fields(line);
        for (auto& f : fields) f = trim(f);
        if (!header_seen) {
            header_seen = true;
            bool ok = fields.size() == expected_header.size();
            for (std::size_t i = 0; ok && i < fields.size(); ++i) ok = fields[i] == expected_header[i];
            if (!ok) {
                std::string want;
                for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
                throw Error(ErrorKind::MalformedRow, "expected header '" + want + "'", file, line_no);
            }
            continue;
        }
        if (fields.size() != expected_header.size()) {
            throw Error(ErrorKind::MalformedRow,
                        "expected " + std::to_string(expected_header.size()) + " columns, got " +
                            std::to_string(fields.size()),
                        file, line_no);
        }
        at_location(file, line_no, [&] { fn(line_no, fields); });
    }
    if (!header_seen) throw Error(ErrorKind::MalformedRow, "missing header row", file, 1);
}

double parse_double(std::string_view field, const std::string& file, std::size_t line) {
    double value = 0.0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end || field.empty() || !std::isfinite(value)) {
        throw Error(ErrorKind::MalformedRow, "not a finite number: '" + std::string(field) + "'", file, line);
    }
    return value;
}

long long parse_int(std::string_view field, const std::string& file, std::size_t line) {
    long long value = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end || field.empty()) {
        throw Error(ErrorKind::MalformedRow, "not an integer: '" + std::string(field) + "'", file, line);
    }
    return value;
}

LabelStream read_labels_csv(const fs::path& path, double frame_rate_hz) {
    const std::string file = path.string();
    std::vector<TaskId> labels;
    for_each_csv_row(path, {"frame_index", "task_id"}, [&](std::size_t line, std::span<const std::string_view> f) {
        const long long idx = parse_int(f[0], file, line);
        if (idx != static_cast<long long>(labels.size())) {
            const ErrorKind kind = idx < static_cast<long long>(labels.size()) ? ErrorKind::NonMonotonicTimestamps
                                                                              : ErrorKind::MalformedRow;
            throw Error(kind, "expected frame_index " + std::to_string(labels.size()) + ", got " + std::to_string(idx),
                        file, line);
        }
        const long long task = parse_int(f[1], file, line);
        if (task < 0 || task > kNumTasks) {
            throw Error(ErrorKind::MalformedRow, "task_id out of range 0..12", file, line);
        }
        labels.emplace_back(static_cast<int>(task));
    });
    if (labels.empty()) throw Error(ErrorKind::MalformedRow, "label file has no rows", file, 1);
    return LabelStream(std::move(labels), frame_rate_hz);
}

SegmentSet read_annotation_csv(const fs::path& path, SegmentMode mode) {
    const std::string file = path.string();
    struct Row {
        Segment seg;
        std::size_t line;
    };
    std::vector<Row> rows;
    for_each_csv_row(path, {"task_id", "begin_s", "end_s"}, [&](std::size_t line, std::span<const std::string_view> f) {
        const long long task = parse_int(f[0], file, line);
        if (task < 1 || task > kNumTasks) throw Error(ErrorKind::MalformedRow, "task_id must be 1..12", file, line);
        const double begin = parse_double(f[1], file, line);
        const double end = parse_double(f[2], file, line);
        if (!(begin < end)) throw Error(ErrorKind::MalformedRow, "begin_s must be < end_s", file, line);
        rows.push_back(Row{Segment(TaskId(static_cast<int>(task)), begin, end), line});
    });
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.seg.task != b.seg.task) return a.seg.task < b.seg.task;
        return a.seg.begin_s < b.seg.begin_s;
    });
    SegmentSet set(mode);
    for (const Row& r : rows) at_location(file, r.line, [&] { set.add(r.seg); });
    return set;
}

KinematicsStream read_kinematics_csv(const fs::path& path) {
    const std::string file = path.string();
    std::array<std::vector<KinematicsSample>, 2> arms;
    for_each_csv_row(path, {"t_s", "manipulator", "x", "y", "z", "roll", "pitch", "yaw"},
                     [&](std::size_t line, std::span<const std::string_view> f) {
                         KinematicsSample s;
                         s.t_s = parse_double(f[0], file, line);
                         const auto m = parse_manipulator(f[1]);
                         if (!m) {
                             throw Error(ErrorKind::UnknownManipulator, "unknown manipulator '" + std::string(f[1]) + "'",
                                         file, line);
                         }
                         s.manipulator = *m;
                         for (std::size_t k = 0; k < 3; ++k) s.position[k] = parse_double(f[2 + k], file, line);
                         for (std::size_t k = 0; k < 3; ++k) s.wrist[k] = parse_double(f[5 + k], file, line);
                         auto& arm = arms[static_cast<std::size_t>(*m)];
                         if (!arm.empty() && !(s.t_s > arm.back().t_s)) {
                             throw Error(ErrorKind::NonMonotonicTimestamps,
                                         std::string(f[1]) + " timestamps must be strictly increasing", file, line);
                         }
                         arm.push_back(s);
                     });
    return KinematicsStream(std::move(arms[0]), std::move(arms[1]));
}

EventStream read_events_csv(const fs::path& path) {
    const std::string file = path.string();
    EventStream events;
    for_each_csv_row(path, {"t_s", "kind"}, [&](std::size_t line, std::span<const std::string_view> f) {
        const double t = parse_double(f[0], file, line);
        const auto kind = parse_event_kind(f[1]);
        if (!kind) throw Error(ErrorKind::UnknownEventKind, "unknown event kind '" + std::string(f[1]) + "'", file, line);
        events.push_back(Event{t, *kind});
    });
    sort_events(events);
    return events;
}

std::string labels_to_csv(const LabelStream& labels) {
    std::string out = "frame_index,task_id\n";
    out.reserve(out.size() + labels.size() * 8);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += std::to_string(labels[i].value());
        out += '\n';
    }
    return out;
}

std::string annotation_to_csv(const SegmentSet& segments) {
    std::string out = "task_id,begin_s,end_s\n";
    for (const Segment& s : segments.flatten()) {
        out += std::to_string(s.task.value());
        out += ',';
        append_number(out, s.begin_s);
        out += ',';
        append_number(out, s.end_s);
        out += '\n';
    }
    return out;
}

std::string kinematics_to_csv(const KinematicsStream& kinematics) {
    std::string out = "t_s,manipulator,x,y,z,roll,pitch,yaw\n";
    out.reserve(out.size() + kinematics.total_samples() * 96);
    const auto a = kinematics.samples(Manipulator::PSM1);
    const auto b = kinematics.samples(Manipulator::PSM2);
    std::size_t i = 0;
    std::size_t j = 0;
    auto emit = [&out](const KinematicsSample& s) {
        append_number(out, s.t_s);
        out += ',';
        out += manipulator_name(s.manipulator);
        for (double v : s.position) {
            out += ',';
            append_number(out, v);
        }
        for (double v : s.wrist) {
            out += ',';
            append_number(out, v);
        }
        out += '\n';
    };
    // Interleave by time, PSM1 first on ties.
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].t_s <= b[j].t_s)) {
            emit(a[i++]);
        } else {
            emit(b[j++]);
        }
    }
    return out;
}

std::string events_to_csv(const EventStream& events) {
    std::string out = "t_s,kind\n";
    for (const Event& e : events) {
        append_number(out, e.t_s);
        out += ',';
        out += event_kind_name(e.kind);
        out += '\n';
    }
    return out;
}

ProcedurePaths ProcedurePaths::in_directory(const fs::path& dir) {
    return ProcedurePaths{dir / "labels.csv", dir / "annotation.csv", dir / "kinematics.csv", dir / "events.csv"};
}

ProcedureRecord load_procedure(const ProcedurePaths& paths, std::string procedure_id) {
    ProcedureRecord record;
    record.procedure_id = std::move(procedure_id);
    record.labels_gt = read_labels_csv(paths.labels);
    record.duration_s = record.labels_gt.duration_s();
    record.ground_truth = read_annotation_csv(paths.annotation, SegmentMode::LongestOnly);
    record.kinematics = read_kinematics_csv(paths.kinematics);
    record.events = read_events_csv(paths.events);
    at_location(paths.annotation.string(), 0, [&] { validate_record(record); });
    return record;
}

ProcedureRecord load_procedure_dir(const fs::path& dir) {
    fs::path normal = dir.lexically_normal();
    if (normal.filename().empty()) normal = normal.parent_path();
    return load_procedure(ProcedurePaths::in_directory(dir), normal.filename().string());
}

void write_procedure_dir(const ProcedureRecord& record, const fs::path& dir) {
    const auto paths = ProcedurePaths::in_directory(dir);
    write_text_file(paths.labels, labels_to_csv(record.labels_gt));
    write_text_file(paths.annotation, annotation_to_csv(record.ground_truth));
    write_text_file(paths.kinematics, kinematics_to_csv(record.kinematics));
    write_text_file(paths.events, events_to_csv(record.events));
}

}  // namespace surgflow
