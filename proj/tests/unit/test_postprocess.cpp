#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "surgflow/postprocess.hpp"

using namespace surgflow;

namespace {

std::vector<int> ids(const LabelStream& s) {
    std::vector<int> out;
    for (TaskId t : s.labels()) out.push_back(t.value());
    return out;
}

LabelStream from_ids(const std::vector<int>& v, double rate = 1.0) {
    std::vector<TaskId> labels;
    for (int x : v) labels.emplace_back(x);
    return LabelStream(labels, rate);
}

std::vector<int> random_ids(std::mt19937_64& rng, std::size_t n) {
    std::vector<int> v(n);
    int cur = static_cast<int>(rng() % 13);
    for (auto& x : v) {
        if (rng() % 5 == 0) cur = static_cast<int>(rng() % 13);
        x = cur;
    }
    return v;
}

}  // namespace

TEST_CASE("median filter examples") {
    CHECK(ids(median_filter(make_labels({3, 3, 3, 3, 3}), {3})) == std::vector<int>{3, 3, 3, 3, 3});
    CHECK(ids(median_filter(make_labels({1, 1, 2, 1, 1}), {3})) == std::vector<int>{1, 1, 1, 1, 1});
    CHECK(ids(median_filter(make_labels({1, 2, 3, 4, 5}), {5})) == std::vector<int>{1, 2, 3, 4, 5});
}

TEST_CASE("filter config") {
    CHECK_THROWS_AS(FilterConfig{4}.validate(), Error);
    try {
        median_filter(make_labels({1, 2}), {300});
        FAIL("even window accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EvenWindow);
    }
    CHECK_THROWS_AS(FilterConfig{-1}.validate(), Error);
    CHECK(FilterConfig{}.window_w == 301);
}

TEST_CASE("median filter matches per-window sort") {
    std::mt19937_64 rng(3);
    for (int w : {1, 3, 5, 31, 301}) {
        for (int iter = 0; iter < 20; ++iter) {
            const auto v = random_ids(rng, 1 + rng() % 700);
            CHECK(ids(median_filter(from_ids(v), {w})) == oracle::median_filter(v, w));
        }
    }
}

TEST_CASE("median filter properties") {
    std::mt19937_64 rng(4);
    for (int iter = 0; iter < 50; ++iter) {
        const auto v = random_ids(rng, 1 + rng() % 400);
        const LabelStream in = from_ids(v, 2.0);
        CHECK(median_filter(in, {1}) == in);
        const int w = 2 * static_cast<int>(rng() % 40) + 1;
        const LabelStream out = median_filter(in, {w});
        REQUIRE(out.size() == in.size());
        CHECK(out.frame_rate_hz() == in.frame_rate_hz());
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(v.size());
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const std::ptrdiff_t r = std::min<std::ptrdiff_t>({i, n - 1 - i, (w - 1) / 2});
            const auto first = v.begin() + (i - r);
            const auto last = v.begin() + (i + r + 1);
            CHECK(std::find(first, last, out[static_cast<std::size_t>(i)].value()) != last);
        }
    }
}

TEST_CASE("select_longest_segments") {
    const SegmentSet a = select_longest_segments(make_labels({1, 1, 2, 1, 1, 1}));
    CHECK(a.mode() == SegmentMode::LongestOnly);
    REQUIRE(a.task_count() == 2);
    CHECK(a.segments(TaskId(1))[0] == Segment(TaskId(1), 3, 6));
    CHECK(a.segments(TaskId(2))[0] == Segment(TaskId(2), 2, 3));

    const SegmentSet b = select_longest_segments(from_ids(std::vector<int>(10, 5)));
    CHECK(b.segments(TaskId(5))[0] == Segment(TaskId(5), 0, 10));

    CHECK(select_longest_segments(make_labels({0, 0, 0})).empty());

    // equal runs: earliest wins
    const SegmentSet tie = select_longest_segments(make_labels({4, 4, 0, 4, 4}));
    CHECK(tie.segments(TaskId(4))[0] == Segment(TaskId(4), 0, 2));

    // frame rate scales times
    const SegmentSet half = select_longest_segments(from_ids({0, 7, 7, 0}, 2.0));
    CHECK(half.segments(TaskId(7))[0] == Segment(TaskId(7), 0.5, 1.5));
}

TEST_CASE("select_all_segments") {
    const SegmentSet a = select_all_segments(make_labels({1, 0, 1}));
    CHECK(a.mode() == SegmentMode::AllSegments);
    REQUIRE(a.segments(TaskId(1)).size() == 2);
    CHECK(a.segments(TaskId(1))[0] == Segment(TaskId(1), 0, 1));
    CHECK(a.segments(TaskId(1))[1] == Segment(TaskId(1), 2, 3));
    CHECK(select_all_segments(make_labels({2, 2, 2})).segments(TaskId(2))[0] == Segment(TaskId(2), 0, 3));
    CHECK(select_all_segments(make_labels({0, 0})).empty());
}

TEST_CASE("longest is a subset of all; single runs agree") {
    std::mt19937_64 rng(8);
    for (int iter = 0; iter < 200; ++iter) {
        const LabelStream s = from_ids(random_ids(rng, 1 + rng() % 200));
        const SegmentSet longest = select_longest_segments(s);
        const SegmentSet all = select_all_segments(s);
        CHECK(longest.task_count() == all.task_count());
        for (const auto& [task, segs] : longest.by_task()) {
            REQUIRE(segs.size() == 1);
            const auto candidates = all.segments(task);
            CHECK(std::find(candidates.begin(), candidates.end(), segs[0]) != candidates.end());
            for (const auto& c : candidates) CHECK(c.duration_s() <= segs[0].duration_s());
            if (candidates.size() == 1) CHECK(candidates[0] == segs[0]);
        }
    }
}
