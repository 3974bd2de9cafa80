#include <json.hpp>

#include "surgflow/csv_io.hpp"
#include "surgflow/metrics.hpp"

namespace surgflow {

using nlohmann::json;

namespace {

std::optional<MetricKind> parse_metric_kind(std::string_view name) {
    for (int k = 0; k <= static_cast<int>(MetricKind::MeanInterEventInterval); ++k) {
        const auto kind = static_cast<MetricKind>(k);
        if (metric_kind_name(kind) == name) return kind;
    }
    return std::nullopt;
}

std::optional<Aggregation> parse_aggregation(std::string_view name) {
    for (int k = 0; k <= static_cast<int>(Aggregation::RecomputedOverUnion); ++k) {
        const auto agg = static_cast<Aggregation>(k);
        if (aggregation_name(agg) == name) return agg;
    }
    return std::nullopt;
}

MetricSpec spec_from_json(const json& j, const std::string& where) {
    auto fail = [&](ErrorKind kind, const std::string& msg) { return Error(kind, where + ": " + msg); };
    if (!j.is_object()) throw fail(ErrorKind::InvalidConfig, "descriptor must be an object");
    if (!j.contains("name") || !j["name"].is_string()) throw fail(ErrorKind::InvalidConfig, "missing string 'name'");
    if (!j.contains("definition") || !j["definition"].is_object()) {
        throw fail(ErrorKind::InvalidConfig, "missing object 'definition'");
    }
    const json& def = j["definition"];
    if (!def.contains("type") || !def["type"].is_string()) throw fail(ErrorKind::InvalidConfig, "definition needs 'type'");

    MetricSpec spec;
    spec.name = j["name"].get<std::string>();
    const auto kind = parse_metric_kind(def["type"].get<std::string>());
    if (!kind) throw fail(ErrorKind::InvalidConfig, "unknown metric type '" + def["type"].get<std::string>() + "'");
    spec.kind = *kind;
    spec.aggregation = default_aggregation(spec.kind);

    if (j.contains("source")) {
        const std::string src = j["source"].get<std::string>();
        if (src != metric_source_name(spec.source())) {
            throw fail(ErrorKind::InvalidConfig, "source '" + src + "' does not match type");
        }
    }
    if (j.contains("aggregation")) {
        const auto agg = parse_aggregation(j["aggregation"].get<std::string>());
        if (!agg) throw fail(ErrorKind::InvalidConfig, "unknown aggregation '" + j["aggregation"].get<std::string>() + "'");
        spec.aggregation = *agg;
    }
    if (def.contains("manipulator")) {
        const std::string name = def["manipulator"].get<std::string>();
        const auto m = parse_manipulator(name);
        if (!m) throw fail(ErrorKind::UnknownManipulator, "unknown manipulator '" + name + "'");
        spec.manipulator = m;
    }
    if (def.contains("axis")) {
        const std::string name = def["axis"].get<std::string>();
        const auto axis = parse_wrist_axis(name);
        if (!axis) throw fail(ErrorKind::InvalidConfig, "unknown wrist axis '" + name + "'");
        spec.axis = *axis;
    }
    if (def.contains("speed_threshold_m_s")) spec.speed_threshold_m_s = def["speed_threshold_m_s"].get<double>();
    if (spec.source() == MetricSource::Event) {
        if (!def.contains("kind")) throw fail(ErrorKind::UnknownEventKind, "event metric needs 'kind'");
        const std::string name = def["kind"].get<std::string>();
        const auto ek = parse_event_kind(name);
        if (!ek) throw fail(ErrorKind::UnknownEventKind, "unknown event kind '" + name + "'");
        spec.event_kind = *ek;
    }
    spec.validate();
    return spec;
}

json spec_to_json(const MetricSpec& s) {
    json def = {{"type", metric_kind_name(s.kind)}};
    if (s.manipulator) def["manipulator"] = manipulator_name(*s.manipulator);
    if (s.kind == MetricKind::AngularPath) def["axis"] = wrist_axis_name(s.axis);
    if (s.kind == MetricKind::IdleFraction) def["speed_threshold_m_s"] = s.speed_threshold_m_s;
    if (s.source() == MetricSource::Event) def["kind"] = event_kind_name(s.event_kind);
    return json{{"name", s.name},
                {"source", metric_source_name(s.source())},
                {"definition", def},
                {"aggregation", aggregation_name(s.aggregation)}};
}

}  // namespace

MetricRegistry registry_from_json(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::MalformedRow, std::string("invalid JSON: ") + e.what(), origin);
    }
    if (!doc.is_array()) throw Error(ErrorKind::InvalidConfig, "registry must be a JSON list", origin);

    MetricRegistry reg;
    try {
        for (std::size_t i = 0; i < doc.size(); ++i) {
            MetricSpec spec = spec_from_json(doc[i], "entry " + std::to_string(i));
            (spec.source() == MetricSource::Kinematic ? reg.kinematic_specs : reg.event_specs).push_back(std::move(spec));
        }
        reg.validate();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("bad descriptor field: ") + e.what(), origin);
    } catch (const Error& e) {
        if (!e.file().empty()) throw;
        throw Error(e.kind(), e.detail(), origin);
    }
    return reg;
}

MetricRegistry load_registry(const std::filesystem::path& path) {
    return registry_from_json(read_text_file(path), path.string());
}

std::string registry_to_json(const MetricRegistry& registry) {
    json doc = json::array();
    for (const MetricSpec* s : registry.all()) doc.push_back(spec_to_json(*s));
    return doc.dump(2);
}

}  // namespace surgflow
