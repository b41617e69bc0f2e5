#include "sonifw/ambience.hpp"

#include <algorithm>
#include <cmath>

namespace sonifw {

namespace {
constexpr double kMusicShare = 0.6;
constexpr int kMaxVoices = 3;
constexpr double kAttackSeconds = 0.02;
constexpr double kReleaseSeconds = 0.15;
constexpr double kBurstRampSeconds = 0.01;
// RMS of Kellett's pink filter driven by unit white noise, from its impulse response.
constexpr double kPinkFilterRms = 3.0525;
}  // namespace

AmbienceGenerator::AmbienceGenerator(const AmbienceConfig& config)
    : config_(config),
      rng_(config.seed),
      lowpass_(dsp::FilterKind::lowpass, config.lowpass_hz, config.sample_rate_hz, 8) {
    pink_gain_ = config.level_rms * config.bed_share / kPinkFilterRms;
    samples_to_next_burst_ =
        static_cast<std::size_t>(config.mean_burst_interval_s * config.sample_rate_hz * (0.5 + uniform_(rng_)));
}

double AmbienceGenerator::next_pink() {
    // Paul Kellett's refined pink-noise filter.
    const double white = normal_(rng_);
    double* b = pink_;
    b[0] = 0.99886 * b[0] + white * 0.0555179;
    b[1] = 0.99332 * b[1] + white * 0.0750759;
    b[2] = 0.96900 * b[2] + white * 0.1538520;
    b[3] = 0.86650 * b[3] + white * 0.3104856;
    b[4] = 0.55000 * b[4] + white * 0.5329522;
    b[5] = -0.7616 * b[5] - white * 0.0168980;
    const double pink = b[0] + b[1] + b[2] + b[3] + b[4] + b[5] + b[6] + white * 0.5362;
    b[6] = white * 0.115926;
    return pink;
}

void AmbienceGenerator::maybe_start_note() {
    if (samples_to_next_note_ > 0) {
        --samples_to_next_note_;
        return;
    }
    const double fs = config_.sample_rate_hz;
    samples_to_next_note_ = static_cast<std::size_t>((0.15 + 0.6 * uniform_(rng_)) * fs);
    if (static_cast<int>(voices_.size()) >= kMaxVoices) return;
    Voice v;
    const double midi = 45.0 + std::floor(uniform_(rng_) * 50.0);
    v.freq_hz = 440.0 * std::pow(2.0, (midi - 69.0) / 12.0);
    v.partials = std::max(1, static_cast<int>(std::floor(config_.tonal_max_hz / v.freq_hz)));
    v.partials = std::min(v.partials, 12);
    v.amplitude = config_.level_rms * kMusicShare * (0.5 + uniform_(rng_));
    v.length = static_cast<std::size_t>((0.2 + 1.2 * uniform_(rng_)) * fs);
    v.phase = 2.0 * kPi * uniform_(rng_);
    voices_.push_back(v);
}

void AmbienceGenerator::maybe_start_burst() {
    if (!config_.bursts) return;
    if (burst_remaining_ > 0) {
        --burst_remaining_;
        return;
    }
    if (samples_to_next_burst_ > 0) {
        --samples_to_next_burst_;
        return;
    }
    const double fs = config_.sample_rate_hz;
    burst_length_ = static_cast<std::size_t>((0.08 + 0.4 * uniform_(rng_)) * fs);
    burst_remaining_ = burst_length_;
    samples_to_next_burst_ = static_cast<std::size_t>(
        config_.mean_burst_interval_s * fs * (0.5 + uniform_(rng_)));
}

double AmbienceGenerator::voice_sample(Voice& v) const {
    const double fs = config_.sample_rate_hz;
    const double t = static_cast<double>(v.age) / fs;
    const double remaining = static_cast<double>(v.length - v.age) / fs;
    double env = 1.0;
    if (t < kAttackSeconds) env = t / kAttackSeconds;
    if (remaining < kReleaseSeconds) env = std::min(env, remaining / kReleaseSeconds);
    env *= std::exp(-1.5 * t);
    double s = 0.0;
    for (int h = 1; h <= v.partials; ++h) {
        if (v.freq_hz * h >= config_.tonal_max_hz) break;
        s += std::sin(v.phase * h) / h;
    }
    v.phase = std::fmod(v.phase + 2.0 * kPi * v.freq_hz / fs, 2.0 * kPi);
    ++v.age;
    return v.amplitude * env * s;
}

void AmbienceGenerator::generate_into(std::span<double> out) {
    const double fs = config_.sample_rate_hz;
    const auto ramp = static_cast<std::size_t>(kBurstRampSeconds * fs);
    for (double& sample : out) {
        maybe_start_burst();
        double bed = next_pink() * pink_gain_;
        if (burst_remaining_ > 0) {
            const std::size_t pos = burst_length_ - burst_remaining_;
            double env = 1.0;
            if (pos < ramp) env = static_cast<double>(pos) / ramp;
            if (burst_remaining_ < ramp) env = std::min(env, static_cast<double>(burst_remaining_) / ramp);
            bed *= 1.0 + (config_.burst_gain - 1.0) * env;
        }
        double s = lowpass_.process(bed);
        if (config_.music) {
            maybe_start_note();
            for (auto& v : voices_) s += voice_sample(v);
            std::erase_if(voices_, [](const Voice& v) { return v.age >= v.length; });
        }
        s += normal_(rng_) * config_.noise_floor_rms;
        sample = s;
    }
}

std::vector<double> AmbienceGenerator::generate(std::size_t n_samples) {
    std::vector<double> out(n_samples);
    generate_into(out);
    return out;
}

}  // namespace sonifw
