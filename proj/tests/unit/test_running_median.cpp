#include <gtest/gtest.h>

#include <deque>
#include <random>

#include "oracles.hpp"
#include "sonifw/running_median.hpp"

using sonifw::RunningMedian;

TEST(RunningMedian, MatchesSortedWindowOnRandomStreams) {
    std::mt19937_64 rng(11);
    for (std::size_t window : {1u, 3u, 11u, 31u}) {
        RunningMedian<int> rm(window);
        std::deque<int> recent;
        std::uniform_int_distribution<int> d(-50, 50);
        for (int i = 0; i < 2000; ++i) {
            const int v = d(rng);
            rm.insert(v);
            recent.push_back(v);
            if (recent.size() > window) recent.pop_front();
            std::vector<int> sorted(recent.begin(), recent.end());
            std::sort(sorted.begin(), sorted.end());
            ASSERT_EQ(rm.median(), sorted[sorted.size() / 2]);
            ASSERT_EQ(rm.size(), recent.size());
        }
    }
}

TEST(RunningMedian, SingleSpikeSuppressed) {
    RunningMedian<int> rm(11);
    for (int v : {0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0}) rm.insert(v);
    EXPECT_EQ(rm.median(), 0);
}

TEST(RunningMedian, SixOfElevenTrue) {
    RunningMedian<int> rm(11);
    for (int v : {1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1}) rm.insert(v);
    EXPECT_EQ(rm.median(), 1);
    EXPECT_EQ(rm.count_above(0), 6u);
}

TEST(RunningMedian, FillAndReset) {
    RunningMedian<double> rm(5);
    rm.fill(2.5);
    EXPECT_EQ(rm.size(), 5u);
    EXPECT_EQ(rm.median(), 2.5);
    rm.reset();
    EXPECT_EQ(rm.size(), 0u);
}
