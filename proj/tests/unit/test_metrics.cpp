#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "surgflow/csv_io.hpp"
#include "surgflow/metrics.hpp"
#include "surgflow/postprocess.hpp"
#include "surgflow/synth.hpp"

using namespace surgflow;

namespace {

KinematicsSample sample(double t, Manipulator m, double x, double y = 0, double z = 0, double roll = 0) {
    KinematicsSample s;
    s.t_s = t;
    s.manipulator = m;
    s.position = {x, y, z};
    s.wrist = {roll, 0, 0};
    return s;
}

std::vector<KinematicsSample> random_walk(std::mt19937_64& rng, Manipulator m, double duration, double rate) {
    std::normal_distribution<double> step(0.0, 0.001);
    std::vector<KinematicsSample> out;
    std::array<double, 3> p{};
    std::array<double, 3> w{};
    const auto n = static_cast<std::size_t>(duration * rate);
    for (std::size_t k = 0; k <= n; ++k) {
        KinematicsSample s;
        s.t_s = static_cast<double>(k) / rate;
        s.manipulator = m;
        for (auto& c : p) c += step(rng);
        for (auto& c : w) c += 50 * step(rng);
        s.position = p;
        s.wrist = w;
        out.push_back(s);
    }
    return out;
}

Event ev(double t, EventKind k = EventKind::CameraControlOn) { return {t, k}; }

std::vector<Segment> segs(std::initializer_list<std::pair<double, double>> spans, int task = 1) {
    std::vector<Segment> out;
    for (auto [b, e] : spans) out.emplace_back(TaskId(task), b, e);
    return out;
}

}  // namespace

TEST_CASE("default registry sizes") {
    const MetricRegistry r = default_registry();
    CHECK(r.kinematic_specs.size() == 13);
    CHECK(r.event_specs.size() == 33);
    CHECK(r.size() == 46);
    r.validate();
    std::set<std::string> names;
    for (const MetricSpec* s : r.all()) names.insert(s->name);
    CHECK(names.size() == 46);
    const MetricRegistry again = default_registry();
    CHECK(registry_to_json(again) == registry_to_json(r));
    for (const auto& s : r.kinematic_specs) CHECK(s.source() == MetricSource::Kinematic);
    for (const auto& s : r.event_specs) CHECK(s.source() == MetricSource::Event);
}

TEST_CASE("registry json") {
    const MetricRegistry r = default_registry();
    CHECK(registry_to_json(registry_from_json(registry_to_json(r))) == registry_to_json(r));

    const std::string custom = R"([
        {"name": "p1", "source": "kinematic", "definition": {"type": "PathLength", "manipulator": "PSM1"}, "aggregation": "Additive"},
        {"name": "idle", "source": "kinematic", "definition": {"type": "IdleFraction", "speed_threshold_m_s": 0.01}, "aggregation": "DurationWeightedMean"},
        {"name": "cam", "source": "event", "definition": {"type": "EventCount", "kind": "camera_control_on"}, "aggregation": "Additive"}
    ])";
    const MetricRegistry c = registry_from_json(custom);
    CHECK(c.kinematic_specs.size() == 2);
    CHECK(c.event_specs.size() == 1);
    CHECK(c.kinematic_specs[1].speed_threshold_m_s == 0.01);

    auto kind_of = [](const std::string& text) {
        try {
            registry_from_json(text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Io;
    };
    CHECK(kind_of(R"([{"name":"x","source":"kinematic","definition":{"type":"PathLength","manipulator":"ECM"},"aggregation":"Additive"}])") ==
          ErrorKind::UnknownManipulator);
    CHECK(kind_of(R"([{"name":"x","source":"event","definition":{"type":"EventCount","kind":"teleport"},"aggregation":"Additive"}])") ==
          ErrorKind::UnknownEventKind);
    CHECK(kind_of(R"([{"name":"x","source":"kinematic","definition":{"type":"MaxSpeed","manipulator":"PSM1"},"aggregation":"Additive"}])") ==
          ErrorKind::InvalidConfig);
    CHECK(kind_of(R"([{"name":"x","source":"kinematic","definition":{"type":"PathLength","manipulator":"PSM1"},"aggregation":"Additive"},
                      {"name":"x","source":"kinematic","definition":{"type":"PathLength","manipulator":"PSM2"},"aggregation":"Additive"}])") ==
          ErrorKind::InvalidConfig);
    CHECK(kind_of("not json") == ErrorKind::MalformedRow);
    CHECK(kind_of(R"({"name": "x"})") == ErrorKind::InvalidConfig);
}

TEST_CASE("straight line path length") {
    std::vector<KinematicsSample> line;
    for (int k = 0; k <= 500; ++k) line.push_back(sample(k / 50.0, Manipulator::PSM1, 0.01 * (k / 50.0)));
    const KinematicsStream kin(line, {});
    const auto s = segs({{0, 10}});
    CHECK(*compute_kinematic_metric(path_length(Manipulator::PSM1), kin, s) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(*compute_kinematic_metric(mean_speed(Manipulator::PSM1), kin, s) == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(*compute_kinematic_metric(max_speed(Manipulator::PSM1), kin, s) == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(*compute_kinematic_metric(idle_fraction(0.005, Manipulator::PSM1), kin, s) == 0.0);
    CHECK(*compute_kinematic_metric(idle_fraction(0.02, Manipulator::PSM1), kin, s) == 1.0);
    // no PSM2 samples
    CHECK_FALSE(compute_kinematic_metric(path_length(Manipulator::PSM2), kin, s));
}

TEST_CASE("stationary tip") {
    std::vector<KinematicsSample> a;
    std::vector<KinematicsSample> b;
    for (int k = 0; k <= 100; ++k) {
        a.push_back(sample(k / 50.0, Manipulator::PSM1, 0.2));
        b.push_back(sample(k / 50.0, Manipulator::PSM2, -0.2));
    }
    const KinematicsStream kin(a, b);
    const auto s = segs({{0, 2}});
    CHECK(*compute_kinematic_metric(path_length(Manipulator::PSM1), kin, s) == 0.0);
    CHECK(*compute_kinematic_metric(idle_fraction(kDefaultIdleSpeedThreshold), kin, s) == 1.0);
}

TEST_CASE("angular path wraps deltas") {
    std::vector<KinematicsSample> v;
    v.push_back(sample(0, Manipulator::PSM1, 0, 0, 0, 3.1));
    v.push_back(sample(1, Manipulator::PSM1, 0, 0, 0, -3.1));
    const KinematicsStream kin(v, {});
    const double got = *compute_kinematic_metric(angular_path(Manipulator::PSM1, WristAxis::Roll), kin, segs({{0, 1}}));
    CHECK(got == doctest::Approx(2 * std::numbers::pi - 6.2).epsilon(1e-12));
    CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(wrap_angle(3 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
}

TEST_CASE("random walk path equals brute force") {
    std::mt19937_64 rng(21);
    const auto walk = random_walk(rng, Manipulator::PSM1, 20, 50);
    const KinematicsStream kin(walk, {});
    const auto s = segs({{5, 15}});
    const double got = *compute_kinematic_metric(path_length(Manipulator::PSM1), kin, s);
    CHECK(oracle::rel_close(got, oracle::path_length(walk, s), 1e-12L));
    // off-grid bounds
    const auto t = segs({{5.011, 14.999}, {16.5, 19.3}});
    CHECK(oracle::rel_close(*compute_kinematic_metric(path_length(Manipulator::PSM1), kin, t),
                            oracle::path_length(walk, t), 1e-12L));
}

TEST_CASE("kinematic additivity, consistency, monotonicity") {
    std::mt19937_64 rng(22);
    for (int iter = 0; iter < 30; ++iter) {
        const auto walk = random_walk(rng, Manipulator::PSM2, 30, 50);
        const KinematicsStream kin({}, walk);
        // b sits exactly on a sample instant
        const std::size_t ia = rng() % 300;
        const std::size_t ib = ia + 50 + rng() % 500;
        const std::size_t ic = ib + 50 + rng() % 400;
        const double a = walk[ia].t_s;
        const double b = walk[ib].t_s;
        const double c = walk[ic].t_s;
        const MetricSpec pl = path_length(Manipulator::PSM2);
        const double left = *compute_kinematic_metric(pl, kin, segs({{a, b}}));
        const double right = *compute_kinematic_metric(pl, kin, segs({{b, c}}));
        const double whole = *compute_kinematic_metric(pl, kin, segs({{a, c}}));
        CHECK(oracle::rel_close(left + right, whole, 1e-9L));
        CHECK(*compute_kinematic_metric(pl, kin, segs({{a, b}, {b, c}})) == doctest::Approx(whole).epsilon(1e-9));

        const auto two = segs({{a, b}, {c, c + 2.5}});
        const double ms = *compute_kinematic_metric(mean_speed(Manipulator::PSM2), kin, two);
        const double path = *compute_kinematic_metric(pl, kin, two);
        CHECK(oracle::rel_close(ms, path / static_cast<double>(oracle::covered_time(walk, two)), 1e-9L));

        const double grown = *compute_kinematic_metric(pl, kin, segs({{std::max(0.0, a - 0.7), b + 0.3}}));
        CHECK(grown >= left);
    }
}

TEST_CASE("event metric examples") {
    const EventStream e = {ev(5), ev(15), ev(25), ev(7, EventKind::EnergyOn)};
    const MetricSpec count = event_count(EventKind::CameraControlOn);
    CHECK(*compute_event_metric(count, e, segs({{0, 20}})) == 2);
    CHECK(*compute_event_metric(event_count(EventKind::HeadIn), e, segs({{0, 20}})) == 0);
    CHECK(*compute_event_metric(count, e, segs({{0, 10}, {20, 30}})) == 2);
    CHECK(*compute_event_metric(count, e, {}) == 0);
    CHECK(*compute_event_metric(event_rate_per_min(EventKind::CameraControlOn), e, segs({{0, 20}})) ==
          doctest::Approx(6.0));
    CHECK(*compute_event_metric(event_rate_per_min(EventKind::CameraControlOn), e, segs({{0, 10}, {20, 30}})) ==
          doctest::Approx(6.0));

    const MetricSpec interval = mean_inter_event_interval(EventKind::CameraControlOn);
    // compressed axis: 5 and 25 map to 5 and 15
    CHECK(*compute_event_metric(interval, e, segs({{0, 10}, {20, 30}})) == doctest::Approx(10.0));
    CHECK(*compute_event_metric(interval, {ev(8), ev(22)}, segs({{0, 10}, {20, 30}})) == doctest::Approx(4.0));
    CHECK(*compute_event_metric(interval, e, segs({{0, 30}})) == doctest::Approx(10.0));
    CHECK_FALSE(compute_event_metric(interval, e, segs({{0, 10}})));
    // boundary is half-open
    CHECK(*compute_event_metric(count, e, segs({{5, 15}})) == 1);
}

TEST_CASE("event metrics brute force and permutation invariance") {
    std::mt19937_64 rng(30);
    std::uniform_real_distribution<double> t(0, 600);
    for (int iter = 0; iter < 40; ++iter) {
        EventStream e;
        for (int k = 0; k < 200; ++k) {
            e.push_back({std::round(t(rng) * 1000) / 1000, all_event_kinds()[rng() % kNumEventKinds]});
        }
        EventStream shuffled = e;
        sort_events(e);
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const std::string path = (std::filesystem::temp_directory_path() / "surgflow_unit_events.csv").string();
        write_text_file(path, events_to_csv(shuffled));
        const EventStream loaded = read_events_csv(path);

        const auto s = segs({{10, 100}, {250.5, 251}, {300, 480}});
        for (const MetricSpec& spec : default_registry().event_specs) {
            CHECK(compute_event_metric(spec, loaded, s) == compute_event_metric(spec, e, s));
            if (spec.kind == MetricKind::EventCount) {
                CHECK(*compute_event_metric(spec, e, s) ==
                      static_cast<double>(oracle::event_count(e, spec.event_kind, s)));
                const auto bigger = segs({{5, 100}, {250.5, 260}, {300, 490}});
                CHECK(*compute_event_metric(spec, e, bigger) >= *compute_event_metric(spec, e, s));
            }
        }
    }
}

TEST_CASE("overlapping metric segments are rejected") {
    CHECK_THROWS_AS(compute_event_metric(event_count(EventKind::ArmSwap), {}, segs({{0, 10}, {5, 15}})), Error);
}

TEST_CASE("compute_metrics") {
    SynthConfig cfg;
    cfg.seed = 4;
    cfg.task_duration_s = {60, 120};
    cfg.kinematics_rate_hz = 10;
    const ProcedureRecord rec = generate_procedure(cfg);
    const MetricRegistry reg = default_registry();

    SUBCASE("one vector per task, every registry name present") {
        const auto out = compute_metrics(reg, rec, rec.ground_truth);
        REQUIRE(out.size() == 12);
        for (const MetricVector& v : out) {
            CHECK(v.values.size() == 46);
            CHECK(v.procedure_id == rec.procedure_id);
            for (const NamedValue& nv : v.values) {
                if (nv.value) CHECK(std::isfinite(*nv.value));
            }
        }
        CHECK(out[0].task == TaskId(1));
        CHECK(out[0].coverage_s == rec.ground_truth.segments(TaskId(1))[0].duration_s());
    }
    SUBCASE("single segment equals direct computation") {
        const auto out = compute_metrics(reg, rec, rec.ground_truth);
        const auto s = rec.ground_truth.segments(TaskId(3));
        const MetricVector& v = out[2];
        for (const MetricSpec& spec : reg.kinematic_specs) {
            CHECK(v.find(spec.name)->value == compute_kinematic_metric(spec, rec.kinematics, s));
        }
        for (const MetricSpec& spec : reg.event_specs) {
            CHECK(v.find(spec.name)->value == compute_event_metric(spec, rec.events, s));
        }
    }
    SUBCASE("all-segments equals longest when each task has one run") {
        const LabelStream labels = rec.labels_gt;
        CHECK(compute_metrics(reg, rec, select_all_segments(labels)) ==
              compute_metrics(reg, rec, select_longest_segments(labels)));
    }
    SUBCASE("empty segment set") {
        CHECK(compute_metrics(reg, rec, SegmentSet{}).empty());
    }
    SUBCASE("csv") {
        const auto out = compute_metrics(reg, rec, rec.ground_truth);
        const std::string csv = metrics_to_csv(out);
        CHECK(csv.rfind("procedure_id,task_id,metric_name,value,missing,coverage_s\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 12 * 46);
    }
}
