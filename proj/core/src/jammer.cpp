#include "sonifw/jammer.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "sonifw/dsp.hpp"
#include "sonifw/errors.hpp"

namespace sonifw::jam {

namespace {
constexpr std::size_t kSynthesisBlock = 4096;
constexpr double kCrestFactor = 4.0;
}  // namespace

std::string_view to_string(JamMode mode) {
    return mode == JamMode::reactive ? "reactive" : "preventive";
}

std::string_view to_string(BlockStrategy strategy) {
    return strategy == BlockStrategy::noise ? "noise" : "mute";
}

std::optional<BlockStrategy> parse_strategy(std::string_view text) {
    if (text == "noise") return BlockStrategy::noise;
    if (text == "mute") return BlockStrategy::mute;
    return std::nullopt;
}

JamPlan plan_jam(const std::optional<detect::DetectionEvent>& event, const JammerConfig& config) {
    JamPlan plan;
    plan.mode = config.mode;
    plan.amplitude = std::min(config.amplitude, config.safety_ceiling);
    plan.band_hz = config.full_band;
    if (config.mode == JamMode::preventive) {
        if (event) plan.event_id = event->event_id;
        return plan;
    }
    if (!event) throw ContractViolation("reactive jam plan needs a detection event");
    plan.event_id = event->event_id;
    using detect::TechnologyClass;
    const auto cls = event->technology_class;
    if (cls == TechnologyClass::narrowband_fsk_like || cls == TechnologyClass::narrowband_psk_like) {
        plan.band_hz.low_hz =
            std::max(config.full_band.low_hz, event->active_band_hz.low_hz - config.padding_hz);
        plan.band_hz.high_hz =
            std::min(config.full_band.high_hz, event->active_band_hz.high_hz + config.padding_hz);
    }
    return plan;
}

void validate_plan(const JamPlan& plan, int sample_rate_hz, std::size_t fft_size) {
    const double bin_hz = static_cast<double>(sample_rate_hz) / static_cast<double>(fft_size);
    if (plan.band_hz.width() < 2.0 * bin_hz) {
        throw ContractViolation("jam band narrower than two analysis bins");
    }
    if (plan.band_hz.high_hz > sample_rate_hz / 2.0 || plan.band_hz.low_hz <= 0.0) {
        throw ContractViolation("jam band outside (0, Nyquist]");
    }
    if (!(plan.amplitude > 0.0 && plan.amplitude <= 1.0)) {
        throw ContractViolation("jam amplitude must lie in (0, 1]");
    }
}

JamGenerator::JamGenerator(const JamPlan& plan, int sample_rate_hz, std::uint64_t seed)
    : plan_(plan),
      sample_rate_hz_(sample_rate_hz),
      block_(kSynthesisBlock),
      rng_(seed),
      fft_(kSynthesisBlock),
      window_(kSynthesisBlock),
      tail_(kSynthesisBlock / 2, 0.0) {
    validate_plan(plan, sample_rate_hz);
    const double bin_hz = static_cast<double>(sample_rate_hz) / static_cast<double>(block_);
    first_bin_ = static_cast<std::size_t>(std::ceil(plan.band_hz.low_hz / bin_hz));
    last_bin_ = std::min(block_ / 2 - 1, static_cast<std::size_t>(std::floor(plan.band_hz.high_hz / bin_hz)));
    // Unit-variance complex bins through the unnormalized inverse give a
    // per-sample variance of 2 * bins; sine windows at 50% overlap keep it.
    const double bins = static_cast<double>(last_bin_ - first_bin_ + 1);
    const double natural_rms = std::sqrt(2.0 * bins);
    scale_ = (plan.amplitude / kCrestFactor) / natural_rms;
    for (std::size_t i = 0; i < block_; ++i) {
        window_[i] = std::sin(kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(block_));
    }
}

void JamGenerator::next_block() {
    std::vector<std::complex<double>> spectrum(fft_.bins(), {0.0, 0.0});
    for (std::size_t k = first_bin_; k <= last_bin_; ++k) {
        const double re = normal_(rng_);
        const double im = normal_(rng_);
        spectrum[k] = {re * std::sqrt(0.5), im * std::sqrt(0.5)};
    }
    std::vector<double> block(block_);
    fft_.inverse(spectrum, block);
    const std::size_t hop = block_ / 2;
    ready_.assign(hop, 0.0);
    for (std::size_t i = 0; i < block_; ++i) block[i] *= window_[i] * scale_;
    for (std::size_t i = 0; i < hop; ++i) {
        ready_[i] = std::clamp(tail_[i] + block[i], -plan_.amplitude, plan_.amplitude);
        tail_[i] = block[hop + i];
    }
    ready_pos_ = 0;
}

void JamGenerator::generate_into(std::span<double> out) {
    for (double& s : out) {
        if (ready_pos_ >= ready_.size()) next_block();
        s = ready_[ready_pos_++];
    }
}

std::vector<double> JamGenerator::generate(std::size_t n_samples) {
    std::vector<double> out(n_samples);
    generate_into(out);
    return out;
}

std::vector<double> synthesize_jam(const JamPlan& plan, std::size_t n_samples, std::uint64_t seed,
                                   int sample_rate_hz) {
    if (n_samples == 0) throw ContractViolation("synthesize_jam needs n_samples > 0");
    JamGenerator gen(plan, sample_rate_hz, seed);
    // Discard the first half block so the output starts at full variance.
    gen.generate(kSynthesisBlock / 2);
    return gen.generate(n_samples);
}

namespace {

struct TonePower {
    double signal_peak = 0.0;
    double jam_mean = 0.0;
};

TonePower measure_tone_power(std::span<const double> clean, std::span<const double> jam,
                             const modem::ModemScheme& scheme, int sample_rate_hz) {
    dsp::PipelineConfig cfg;
    dsp::SpectrumAnalyzer analyzer(cfg);
    std::vector<std::size_t> tone_bins;
    for (double f : scheme.tones_hz) {
        tone_bins.push_back(static_cast<std::size_t>(
            std::llround(f * static_cast<double>(cfg.frame_size) / sample_rate_hz)));
    }

    auto frame_powers = [&](std::span<const double> x, auto&& reduce) {
        std::vector<double> out;
        AudioFrame frame;
        frame.sample_rate_hz = sample_rate_hz;
        for (std::size_t start = 0; start + cfg.frame_size <= x.size(); start += cfg.hop_size) {
            frame.samples.assign(x.begin() + static_cast<std::ptrdiff_t>(start),
                                 x.begin() + static_cast<std::ptrdiff_t>(start + cfg.frame_size));
            const auto spec = analyzer.analyze(frame);
            out.push_back(reduce(spec.magnitudes));
        }
        return out;
    };

    const auto peaks = frame_powers(clean, [&](const std::vector<double>& m) {
        double best = 0.0;
        for (auto b : tone_bins) best = std::max(best, m[b] * m[b]);
        return best;
    });
    const auto means = frame_powers(jam, [&](const std::vector<double>& m) {
        double acc = 0.0;
        for (auto b : tone_bins) acc += m[b] * m[b];
        return acc / static_cast<double>(tone_bins.size());
    });

    TonePower p;
    const double loudest = peaks.empty() ? 0.0 : *std::max_element(peaks.begin(), peaks.end());
    std::size_t active = 0;
    for (double v : peaks) {
        if (v >= 0.01 * loudest && v > 0.0) {
            p.signal_peak += v;
            ++active;
        }
    }
    if (active > 0) p.signal_peak /= static_cast<double>(active);
    for (double v : means) p.jam_mean += v;
    if (!means.empty()) p.jam_mean /= static_cast<double>(means.size());
    return p;
}

}  // namespace

JamTrial jam_effectiveness(std::span<const double> clean, std::span<const double> jam,
                           double jam_to_signal_db, const modem::ModemScheme& scheme,
                           std::span<const std::uint8_t> payload, int sample_rate_hz) {
    JamTrial trial;
    std::vector<double> mix(clean.begin(), clean.end());
    if (std::isfinite(jam_to_signal_db) && !jam.empty()) {
        if (jam.size() < clean.size()) {
            throw ContractViolation("jam signal shorter than the clean fixture");
        }
        const TonePower p = measure_tone_power(clean, jam.first(clean.size()), scheme, sample_rate_hz);
        if (p.jam_mean > 0.0 && p.signal_peak > 0.0) {
            trial.jam_gain = std::sqrt(p.signal_peak * std::pow(10.0, jam_to_signal_db / 10.0) / p.jam_mean);
        }
        for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += trial.jam_gain * jam[i];
        const double peak = peak_abs(mix);
        if (peak > 1.0) {
            for (double& s : mix) s /= peak;
        }
    }
    trial.decode = modem::decode_fsk(mix, scheme, sample_rate_hz, payload);
    trial.bit_error_rate = trial.decode.bit_error_rate;
    return trial;
}

}  // namespace sonifw::jam
