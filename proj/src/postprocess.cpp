#include "surgflow/postprocess.hpp"

#include <algorithm>
#include <array>

namespace surgflow {

void FilterConfig::validate() const {
    if (window_w < 1) throw Error(ErrorKind::InvalidConfig, "window must be >= 1");
    if (window_w % 2 == 0) throw Error(ErrorKind::EvenWindow, "window must be odd, got " + std::to_string(window_w));
}

LabelStream median_filter(const LabelStream& labels, const FilterConfig& cfg) {
    cfg.validate();
    const std::size_t n = labels.size();
    const std::size_t half = static_cast<std::size_t>(cfg.window_w - 1) / 2;
    if (half == 0) return labels;

    // prefix[k][i] = number of frames < i labeled k. The window median is the
    // smallest id whose cumulative count reaches radius + 1.
    constexpr std::size_t kAlphabet = kNumTasks + 1;
    std::array<std::vector<std::uint32_t>, kAlphabet> prefix;
    for (auto& p : prefix) p.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = static_cast<std::size_t>(labels[i].value());
        for (std::size_t k = 0; k < kAlphabet; ++k) prefix[k][i + 1] = prefix[k][i] + (k == id ? 1U : 0U);
    }

    std::vector<TaskId> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t radius = std::min({i, n - 1 - i, half});
        const std::size_t lo = i - radius;
        const std::size_t hi = i + radius + 1;
        std::size_t seen = 0;
        for (std::size_t k = 0; k < kAlphabet; ++k) {
            seen += prefix[k][hi] - prefix[k][lo];
            if (seen >= radius + 1) {
                out[i] = TaskId(static_cast<int>(k));
                break;
            }
        }
    }
    return LabelStream(std::move(out), labels.frame_rate_hz(), labels.start_time_s());
}

SegmentSet select_longest_segments(const LabelStream& labels) {
    std::array<const LabelRun*, kNumTasks + 1> best{};
    const auto runs = labels_to_runs(labels);
    for (const LabelRun& run : runs) {
        if (run.task.is_idle()) continue;
        auto& slot = best[static_cast<std::size_t>(run.task.value())];
        if (slot == nullptr || run.frame_count > slot->frame_count) slot = &run;
    }
    SegmentSet set(SegmentMode::LongestOnly);
    for (const LabelRun* run : best) {
        if (run != nullptr) set.add(Segment(run->task, run->begin_s, run->end_s));
    }
    return set;
}

SegmentSet select_all_segments(const LabelStream& labels) {
    SegmentSet set(SegmentMode::AllSegments);
    for (const LabelRun& run : labels_to_runs(labels)) {
        if (!run.task.is_idle()) set.add(Segment(run.task, run.begin_s, run.end_s));
    }
    return set;
}

SegmentSet select_segments(const LabelStream& labels, SegmentMode mode) {
    return mode == SegmentMode::LongestOnly ? select_longest_segments(labels) : select_all_segments(labels);
}

}  // namespace surgflow
