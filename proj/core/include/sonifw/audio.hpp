#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sonifw {

inline constexpr double kPi = 3.14159265358979323846;

// Near-ultrasonic band used by data-over-audio schemes.
inline constexpr double kBandLowHz = 18000.0;
inline constexpr double kBandHighHz = 22000.0;

struct FrequencyBand {
    double low_hz = 0.0;
    double high_hz = 0.0;

    double width() const { return high_hz - low_hz; }
    bool contains(const FrequencyBand& other) const {
        return low_hz <= other.low_hz && other.high_hz <= high_hz;
    }
    friend bool operator==(const FrequencyBand&, const FrequencyBand&) = default;
};

// Fixed-length block of PCM samples; the pipeline's unit of work.
struct AudioFrame {
    std::vector<double> samples;
    int sample_rate_hz = 44100;
    std::int64_t frame_index = 0;
};

// Throws ConfigError if the frame violates the AudioFrame invariants for the
// given expected length and band.
void validate_frame(const AudioFrame& frame, std::size_t expected_size, double band_high_hz);

double rms(std::span<const double> samples);
double peak_abs(std::span<const double> samples);

}  // namespace sonifw
