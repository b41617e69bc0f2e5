#include "sonifw/audio.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sonifw/errors.hpp"

namespace sonifw {

void validate_frame(const AudioFrame& frame, std::size_t expected_size, double band_high_hz) {
    if (frame.samples.size() != expected_size) {
        throw ConfigError("audio frame has " + std::to_string(frame.samples.size()) +
                          " samples, expected " + std::to_string(expected_size));
    }
    if (frame.sample_rate_hz / 2.0 < band_high_hz) {
        throw ConfigError("sample rate " + std::to_string(frame.sample_rate_hz) +
                          " Hz cannot represent the analysis band");
    }
    for (double s : frame.samples) {
        if (!std::isfinite(s) || s < -1.0 || s > 1.0) {
            throw ConfigError("audio frame sample outside [-1, 1]");
        }
    }
}

double rms(std::span<const double> samples) {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (double s : samples) acc += s * s;
    return std::sqrt(acc / static_cast<double>(samples.size()));
}

double peak_abs(std::span<const double> samples) {
    double peak = 0.0;
    for (double s : samples) peak = std::max(peak, std::abs(s));
    return peak;
}

}  // namespace sonifw
