#pragma once
// CSV ingestion and serialization for labels, annotations, kinematics, and events.

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surgflow/core_model.hpp"

namespace surgflow {

// All output files use 9 significant digits.
std::string format_number(double value);
// Rounds a value to what format_number would print.
double quantize(double value);

using CsvRowFn = std::function<void(std::size_t line, std::span<const std::string_view> fields)>;

// Streams the rows of a comma-separated file with a header row. `line` is 1-based.
// Throws Error(Io) if unreadable and Error(MalformedRow) if the header does not match
// or a row has the wrong column count.
void for_each_csv_row(const std::filesystem::path& path, const std::vector<std::string>& expected_header,
                      const CsvRowFn& fn);

double parse_double(std::string_view field, const std::string& file, std::size_t line);
long long parse_int(std::string_view field, const std::string& file, std::size_t line);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

LabelStream read_labels_csv(const std::filesystem::path& path, double frame_rate_hz = 1.0);
SegmentSet read_annotation_csv(const std::filesystem::path& path, SegmentMode mode);
KinematicsStream read_kinematics_csv(const std::filesystem::path& path);
EventStream read_events_csv(const std::filesystem::path& path);

std::string labels_to_csv(const LabelStream& labels);
std::string annotation_to_csv(const SegmentSet& segments);
std::string kinematics_to_csv(const KinematicsStream& kinematics);
std::string events_to_csv(const EventStream& events);

struct ProcedurePaths {
    std::filesystem::path labels;
    std::filesystem::path annotation;
    std::filesystem::path kinematics;
    std::filesystem::path events;

    static ProcedurePaths in_directory(const std::filesystem::path& dir);
};

ProcedureRecord load_procedure(const ProcedurePaths& paths, std::string procedure_id);
// Loads <dir>/{labels,annotation,kinematics,events}.csv; the id is the directory name.
ProcedureRecord load_procedure_dir(const std::filesystem::path& dir);
void write_procedure_dir(const ProcedureRecord& record, const std::filesystem::path& dir);

}  // namespace surgflow
