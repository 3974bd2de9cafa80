#pragma once
// Median filtering of per-frame task predictions and per-task segment selection.

#include "surgflow/core_model.hpp"

namespace surgflow {

inline constexpr int kDefaultWindow = 301;

struct FilterConfig {
    int window_w = kDefaultWindow;

    // Throws Error(EvenWindow) for even windows, Error(InvalidConfig) for w < 1.
    void validate() const;
};

// Running median over task ids. Near the stream ends the window shrinks to the
// largest centered odd window that fits: radius min(i, n-1-i, (w-1)/2).
LabelStream median_filter(const LabelStream& labels, const FilterConfig& cfg);

// One segment per present task: its longest run, earliest run on ties.
SegmentSet select_longest_segments(const LabelStream& labels);

// Every non-idle run becomes a segment.
SegmentSet select_all_segments(const LabelStream& labels);

SegmentSet select_segments(const LabelStream& labels, SegmentMode mode);

}  // namespace surgflow
