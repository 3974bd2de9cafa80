#pragma once
// Deterministic synthetic procedures and controlled prediction noise.
//
// Random numbers come from std::mt19937_64 seeded through SplitMix64, with the
// uniform/normal/exponential/Poisson transforms implemented here rather than
// taken from <random> distributions, whose output differs between standard
// libraries. Every output is a pure function of its config and seed.

#include <array>
#include <cstdint>
#include <random>
#include <string>

#include "surgflow/core_model.hpp"

namespace surgflow {

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    double uniform();  // [0, 1)
    double uniform(double lo, double hi);
    std::uint64_t uniform_int(std::uint64_t n);  // [0, n)
    double normal();                             // Box-Muller
    double exponential(double rate);
    std::uint64_t poisson(double mean);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

struct Range {
    double min = 0.0;
    double max = 0.0;
};

struct SynthConfig {
    std::uint64_t seed = 0;
    std::string procedure_id = "p01";
    int n_tasks = kNumTasks;
    Range task_duration_s{120.0, 900.0};
    Range gap_duration_s{0.0, 60.0};
    double kinematics_rate_hz = 50.0;
    double label_rate_hz = 1.0;
    // Fraction of tip velocity lost per kinematics step.
    double velocity_damping = 0.02;
    // Std of the per-step velocity innovation, m/s.
    double velocity_noise_m_s = 0.002;
    // Std of the per-step wrist angle increment, rad.
    double wrist_noise_rad = 0.01;
    std::array<double, kNumEventKinds> event_rates_per_min = default_event_rates();
    // Mean number of follow-up events clustered after each event.
    double burstiness = 0.5;
    // Each task draws motion and event intensity multipliers from [1 - s, 1 + s].
    double task_intensity_spread = 0.5;
    // Motion and event intensity during idle gaps.
    double idle_intensity = 0.3;

    static std::array<double, kNumEventKinds> default_event_rates();
    void validate() const;
};

enum class SpikeLabel { UniformRandomTask, AdjacentTask };

struct NoiseConfig {
    double boundary_jitter_std_s = 0.0;
    double spike_rate_per_min = 0.0;
    Range spike_duration_s{3.0, 10.0};
    SpikeLabel spike_label = SpikeLabel::UniformRandomTask;
    std::uint64_t seed = 0;

    bool is_zero() const { return boundary_jitter_std_s == 0.0 && spike_rate_per_min == 0.0; }
    void validate() const;
};

// Ground-truth layout only: tasks 1..n_tasks in order, separated by idle gaps
// (including a leading and trailing gap), boundaries on the label frame clock.
// Identical to the annotation produced by generate_procedure for the same config.
struct Timeline {
    SegmentSet ground_truth{SegmentMode::LongestOnly};
    double duration_s = 0.0;
};
Timeline generate_timeline(const SynthConfig& cfg);

ProcedureRecord generate_procedure(const SynthConfig& cfg);

// Boundary jitter clamps so every run keeps at least one frame and run order is
// preserved; spikes are Poisson-placed runs overwriting the jittered labels.
LabelStream perturb_predictions(const LabelStream& gt_labels, const NoiseConfig& noise);

// Per-procedure config for index i of a dataset generated from `base`.
std::string procedure_id_for(std::size_t index, std::size_t count);
SynthConfig dataset_member(const SynthConfig& base, std::size_t index, std::size_t count);

}  // namespace surgflow
