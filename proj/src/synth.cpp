#include "surgflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "surgflow/csv_io.hpp"
#include "surgflow/metrics.hpp"

namespace surgflow {

namespace {

enum Stream : std::uint64_t {
    kTimelineStream = 1,
    kIntensityStream = 2,
    kArmStream = 10,     // + manipulator index
    kEventStream = 100,  // + event kind index
    kJitterStream = 1000,
    kSpikeStream = 1001,
};

void check_range(const Range& r, const char* what, double lo_bound = 0.0) {
    if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min < lo_bound || r.min > r.max) {
        throw Error(ErrorKind::InvalidConfig, std::string(what) + " range must satisfy 0 <= min <= max");
    }
}

std::size_t to_frames(double seconds, double rate_hz) {
    return static_cast<std::size_t>(std::llround(seconds * rate_hz));
}

struct Intensities {
    std::array<double, kNumTasks + 1> motion{};
    std::array<double, kNumTasks + 1> events{};
};

Intensities draw_intensities(const SynthConfig& cfg) {
    Rng rng(cfg.seed, kIntensityStream);
    Intensities in;
    in.motion[0] = cfg.idle_intensity;
    in.events[0] = cfg.idle_intensity;
    for (int t = 1; t <= kNumTasks; ++t) {
        in.motion[static_cast<std::size_t>(t)] = rng.uniform(1.0 - cfg.task_intensity_spread, 1.0 + cfg.task_intensity_spread);
        in.events[static_cast<std::size_t>(t)] = rng.uniform(1.0 - cfg.task_intensity_spread, 1.0 + cfg.task_intensity_spread);
    }
    return in;
}

std::vector<KinematicsSample> simulate_arm(const SynthConfig& cfg, Manipulator arm, const LabelStream& labels,
                                           const Intensities& in, double duration_s) {
    Rng rng(cfg.seed, kArmStream + static_cast<std::uint64_t>(arm));
    const std::size_t n = frame_count_for(duration_s, cfg.kinematics_rate_hz);
    const double dt = 1.0 / cfg.kinematics_rate_hz;
    const double keep = 1.0 - cfg.velocity_damping;

    std::array<double, 3> pos = {arm == Manipulator::PSM1 ? -0.05 : 0.05, 0.0, 0.0};
    std::array<double, 3> vel{};
    std::array<double, 3> wrist{};
    std::vector<KinematicsSample> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        const std::size_t frame = std::min(labels.size() - 1, static_cast<std::size_t>(t * labels.frame_rate_hz()));
        const double intensity = in.motion[static_cast<std::size_t>(labels[frame].value())];

        KinematicsSample s;
        s.t_s = quantize(t);
        s.manipulator = arm;
        for (std::size_t a = 0; a < 3; ++a) s.position[a] = quantize(pos[a]);
        for (std::size_t a = 0; a < 3; ++a) s.wrist[a] = quantize(wrist[a]);
        out.push_back(s);

        for (std::size_t a = 0; a < 3; ++a) {
            vel[a] = keep * vel[a] + cfg.velocity_noise_m_s * intensity * rng.normal();
            pos[a] += vel[a] * dt;
            wrist[a] = wrap_angle(wrist[a] + cfg.wrist_noise_rad * intensity * rng.normal());
        }
    }
    return out;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : engine_(splitmix64(seed ^ splitmix64(stream))) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double Rng::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

std::uint64_t Rng::poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    // Knuth's product method; means here are small.
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double p = uniform();
    while (p > limit) {
        ++k;
        p *= uniform();
    }
    return k;
}

std::array<double, kNumEventKinds> SynthConfig::default_event_rates() {
    return {
        2.0,  // camera_control_on
        2.0,  // camera_control_off
        3.0,  // energy_on
        3.0,  // energy_off
        2.5,  // clutch_on
        2.5,  // clutch_off
        0.3,  // head_in
        0.3,  // head_out
        0.5,  // arm_swap
        0.2,  // instrument_change_left
        0.2,  // instrument_change_right
    };
}

void SynthConfig::validate() const {
    if (n_tasks < 1 || n_tasks > kNumTasks) throw Error(ErrorKind::InvalidConfig, "n_tasks must be 1..12");
    check_range(task_duration_s, "task duration");
    check_range(gap_duration_s, "gap duration");
    if (!(label_rate_hz > 0.0) || !(kinematics_rate_hz > 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "sampling rates must be positive");
    }
    if (!(velocity_damping > 0.0 && velocity_damping < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "velocity_damping must lie in (0, 1)");
    }
    if (!(velocity_noise_m_s >= 0.0) || !(wrist_noise_rad >= 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "noise levels must be >= 0");
    }
    for (double r : event_rates_per_min) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw Error(ErrorKind::InvalidConfig, "event rates must be >= 0");
    }
    if (!(burstiness >= 0.0)) throw Error(ErrorKind::InvalidConfig, "burstiness must be >= 0");
    if (!(task_intensity_spread >= 0.0 && task_intensity_spread < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "task_intensity_spread must lie in [0, 1)");
    }
    if (!(idle_intensity >= 0.0)) throw Error(ErrorKind::InvalidConfig, "idle_intensity must be >= 0");
}

void NoiseConfig::validate() const {
    if (!(boundary_jitter_std_s >= 0.0) || !std::isfinite(boundary_jitter_std_s)) {
        throw Error(ErrorKind::InvalidConfig, "boundary jitter std must be >= 0");
    }
    if (!(spike_rate_per_min >= 0.0) || !std::isfinite(spike_rate_per_min)) {
        throw Error(ErrorKind::InvalidConfig, "spike rate must be >= 0");
    }
    check_range(spike_duration_s, "spike duration");
}

Timeline generate_timeline(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed, kTimelineStream);
    const double rate = cfg.label_rate_hz;
    auto gap_frames = [&] { return to_frames(rng.uniform(cfg.gap_duration_s.min, cfg.gap_duration_s.max), rate); };

    Timeline tl;
    std::size_t frame = gap_frames();
    for (int t = 1; t <= cfg.n_tasks; ++t) {
        const std::size_t len =
            std::max<std::size_t>(1, to_frames(rng.uniform(cfg.task_duration_s.min, cfg.task_duration_s.max), rate));
        tl.ground_truth.add(Segment(TaskId(t), static_cast<double>(frame) / rate,
                                    static_cast<double>(frame + len) / rate));
        frame += len;
        if (t < cfg.n_tasks) frame += gap_frames();
    }
    frame += gap_frames();
    tl.duration_s = static_cast<double>(frame) / rate;
    return tl;
}

ProcedureRecord generate_procedure(const SynthConfig& cfg) {
    Timeline tl = generate_timeline(cfg);
    ProcedureRecord rec;
    rec.procedure_id = cfg.procedure_id;
    rec.duration_s = tl.duration_s;
    rec.labels_gt = annotation_to_labels(tl.ground_truth, tl.duration_s, cfg.label_rate_hz);
    rec.ground_truth = std::move(tl.ground_truth);

    const Intensities in = draw_intensities(cfg);
    rec.kinematics = KinematicsStream(simulate_arm(cfg, Manipulator::PSM1, rec.labels_gt, in, rec.duration_s),
                                      simulate_arm(cfg, Manipulator::PSM2, rec.labels_gt, in, rec.duration_s));

    const auto runs = labels_to_runs(rec.labels_gt);
    for (EventKind kind : all_event_kinds()) {
        const double base_per_s = cfg.event_rates_per_min[static_cast<std::size_t>(kind)] / 60.0;
        if (base_per_s <= 0.0) continue;
        Rng rng(cfg.seed, kEventStream + static_cast<std::uint64_t>(kind));
        std::vector<double> times;
        for (const LabelRun& run : runs) {
            const double rate = base_per_s * in.events[static_cast<std::size_t>(run.task.value())];
            if (rate <= 0.0) continue;
            for (double t = run.begin_s + rng.exponential(rate); t < run.end_s; t += rng.exponential(rate)) {
                times.push_back(t);
                const std::uint64_t followers = rng.poisson(cfg.burstiness);
                double tb = t;
                for (std::uint64_t f = 0; f < followers; ++f) {
                    tb += rng.exponential(0.5);  // mean 2 s between clustered events
                    times.push_back(tb);
                }
            }
        }
        for (double t : times) {
            const double q = std::round(t * 1000.0) / 1000.0;
            if (q < rec.duration_s) rec.events.push_back(Event{quantize(q), kind});
        }
    }
    sort_events(rec.events);
    validate_record(rec);
    return rec;
}

LabelStream perturb_predictions(const LabelStream& gt_labels, const NoiseConfig& noise) {
    noise.validate();
    if (noise.is_zero()) return gt_labels;

    const std::size_t n = gt_labels.size();
    const double rate = gt_labels.frame_rate_hz();
    std::vector<TaskId> labels(gt_labels.labels().begin(), gt_labels.labels().end());

    if (noise.boundary_jitter_std_s > 0.0) {
        const auto runs = labels_to_runs(gt_labels);
        const std::size_t n_bounds = runs.size() - 1;
        std::vector<std::size_t> bounds(n_bounds);
        Rng rng(noise.seed, kJitterStream);
        for (std::size_t k = 0; k < n_bounds; ++k) {
            const auto shift = std::llround(rng.normal() * noise.boundary_jitter_std_s * rate);
            const long long target = static_cast<long long>(runs[k + 1].first_frame) + shift;
            const long long lo = k == 0 ? 1 : static_cast<long long>(bounds[k - 1]) + 1;
            const long long hi = static_cast<long long>(n) - static_cast<long long>(n_bounds - k);
            bounds[k] = static_cast<std::size_t>(std::clamp(target, lo, hi));
        }
        std::size_t start = 0;
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const std::size_t end = k < n_bounds ? bounds[k] : n;
            std::fill(labels.begin() + static_cast<std::ptrdiff_t>(start), labels.begin() + static_cast<std::ptrdiff_t>(end),
                      runs[k].task);
            start = end;
        }
    }

    if (noise.spike_rate_per_min > 0.0) {
        Rng rng(noise.seed, kSpikeStream);
        const double per_s = noise.spike_rate_per_min / 60.0;
        const double duration = static_cast<double>(n) / rate;
        const std::vector<TaskId> base = labels;  // adjacency refers to the unspiked label
        for (double t = rng.exponential(per_s); t < duration; t += rng.exponential(per_s)) {
            const auto first = std::min(n - 1, static_cast<std::size_t>(t * rate));
            const std::size_t len = std::max<std::size_t>(
                1, to_frames(rng.uniform(noise.spike_duration_s.min, noise.spike_duration_s.max), rate));
            TaskId label;
            const TaskId current = base[first];
            if (noise.spike_label == SpikeLabel::AdjacentTask && !current.is_idle()) {
                int v = current.value() + (rng.uniform() < 0.5 ? -1 : 1);
                if (v < 1) v = 2;
                if (v > kNumTasks) v = kNumTasks - 1;
                label = TaskId(v);
            } else {
                label = TaskId(1 + static_cast<int>(rng.uniform_int(kNumTasks)));
            }
            const std::size_t last = std::min(n, first + len);
            std::fill(labels.begin() + static_cast<std::ptrdiff_t>(first), labels.begin() + static_cast<std::ptrdiff_t>(last),
                      label);
        }
    }
    return LabelStream(std::move(labels), rate, gt_labels.start_time_s());
}

std::string procedure_id_for(std::size_t index, std::size_t count) {
    const std::string num = std::to_string(index + 1);
    const std::size_t width = std::max<std::size_t>(2, std::to_string(count).size());
    return "p" + std::string(width > num.size() ? width - num.size() : 0, '0') + num;
}

SynthConfig dataset_member(const SynthConfig& base, std::size_t index, std::size_t count) {
    SynthConfig cfg = base;
    cfg.seed = splitmix64(base.seed + 0x632BE59BD9B4E019ULL * (index + 1));
    cfg.procedure_id = procedure_id_for(index, count);
    return cfg;
}

}  // namespace surgflow
