#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sonifw/dsp.hpp"

namespace sonifw {

// Synthetic room sound with nothing above the audible range: low-passed pink
// noise, music-like tonal content, occasional loud bursts and a faint white
// microphone noise floor.
struct AmbienceConfig {
    int sample_rate_hz = 44100;
    std::uint64_t seed = 1;
    double level_rms = 0.03;          // nominal RMS of the ambience bed
    double bed_share = 0.7;           // pink noise RMS as a fraction of level_rms
    double lowpass_hz = 16000.0;      // pink noise and bursts
    double tonal_max_hz = 15000.0;    // highest partial of the tonal content
    bool music = true;
    bool bursts = true;
    double burst_gain = 8.0;          // burst RMS relative to the pink bed
    double mean_burst_interval_s = 4.0;
    double noise_floor_rms = 3e-5;
};

class AmbienceGenerator {
public:
    explicit AmbienceGenerator(const AmbienceConfig& config);

    void generate_into(std::span<double> out);
    std::vector<double> generate(std::size_t n_samples);

    double nominal_rms() const { return config_.level_rms; }
    const AmbienceConfig& config() const { return config_; }

private:
    struct Voice {
        double freq_hz = 440.0;
        double amplitude = 0.0;
        double phase = 0.0;
        std::size_t age = 0;
        std::size_t length = 0;
        int partials = 1;
    };

    double next_pink();
    void maybe_start_note();
    void maybe_start_burst();
    double voice_sample(Voice& v) const;

    AmbienceConfig config_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    dsp::ButterworthFilter lowpass_;
    double pink_[7] = {0, 0, 0, 0, 0, 0, 0};
    double pink_gain_ = 0.0;
    std::vector<Voice> voices_;
    std::size_t samples_to_next_note_ = 0;
    std::size_t samples_to_next_burst_ = 0;
    std::size_t burst_remaining_ = 0;
    std::size_t burst_length_ = 0;
};

}  // namespace sonifw
