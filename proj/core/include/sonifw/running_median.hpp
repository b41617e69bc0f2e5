#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <vector>

namespace sonifw {

// Median over the most recent `window` values. Keeps the window in insertion
// order (ring) and a sorted copy; each insert is O(window).
// Before the window fills, the median is taken over what has been inserted.
template <typename T>
class RunningMedian {
public:
    explicit RunningMedian(std::size_t window) : window_(window) {
        assert(window > 0);
        ring_.reserve(window);
        sorted_.reserve(window);
    }

    void insert(const T& value) {
        if (ring_.size() < window_) {
            ring_.push_back(value);
        } else {
            const T old = ring_[head_];
            ring_[head_] = value;
            head_ = (head_ + 1) % window_;
            sorted_.erase(std::lower_bound(sorted_.begin(), sorted_.end(), old));
        }
        sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), value), value);
    }

    // Upper median for even counts; window sizes used for debouncing are odd.
    T median() const {
        assert(!sorted_.empty());
        return sorted_[sorted_.size() / 2];
    }

    void fill(const T& value) {
        reset();
        for (std::size_t i = 0; i < window_; ++i) insert(value);
    }

    void reset() {
        ring_.clear();
        sorted_.clear();
        head_ = 0;
    }

    std::size_t size() const { return ring_.size(); }
    std::size_t window() const { return window_; }

    // Count of values strictly greater than `value`.
    std::size_t count_above(const T& value) const {
        return static_cast<std::size_t>(sorted_.end() - std::upper_bound(sorted_.begin(), sorted_.end(), value));
    }

private:
    std::size_t window_;
    std::size_t head_ = 0;
    std::vector<T> ring_;
    std::vector<T> sorted_;
};

}  // namespace sonifw
