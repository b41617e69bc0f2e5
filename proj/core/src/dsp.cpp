#include "sonifw/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>

#include "sonifw/errors.hpp"

namespace sonifw::dsp {

void PipelineConfig::validate(int sample_rate_hz) const {
    if (frame_size < 2 || hop_size == 0 || hop_size > frame_size) {
        throw ConfigError("hop_size must satisfy 0 < hop_size <= frame_size");
    }
    if (!(highpass_cutoff_hz < band_low_hz && band_low_hz < band_high_hz)) {
        throw ConfigError("expected highpass_cutoff_hz < band_low_hz < band_high_hz");
    }
    if (band_high_hz > sample_rate_hz / 2.0) {
        throw ConfigError("band_high_hz " + std::to_string(band_high_hz) +
                          " exceeds Nyquist at " + std::to_string(sample_rate_hz) + " Hz");
    }
    if (!(epsilon_floor > 0.0 && epsilon_floor < 1e-2)) {
        throw ConfigError("epsilon_floor must be a small positive value");
    }
}

BinRange band_bins(double band_low_hz, double band_high_hz, std::size_t fft_size,
                   int sample_rate_hz) {
    const double scale = static_cast<double>(fft_size) / sample_rate_hz;
    BinRange r;
    r.first = static_cast<std::size_t>(std::ceil(band_low_hz * scale));
    r.last = static_cast<std::size_t>(std::floor(band_high_hz * scale));
    if (r.last < r.first) throw ConfigError("analysis band contains no FFT bins");
    return r;
}

ButterworthFilter::ButterworthFilter(FilterKind kind, double cutoff_hz, int sample_rate_hz,
                                     int order)
    : kind_(kind), cutoff_hz_(cutoff_hz), sample_rate_hz_(sample_rate_hz) {
    if (order < 2 || order % 2 != 0) throw ConfigError("Butterworth order must be even");
    if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0)) {
        throw ConfigError("filter cutoff must lie in (0, Nyquist)");
    }
    const double w0 = 2.0 * kPi * cutoff_hz / sample_rate_hz;
    const double cw = std::cos(w0);
    const double sw = std::sin(w0);
    for (int k = 0; k < order / 2; ++k) {
        const double q = 1.0 / (2.0 * std::cos(kPi * (2 * k + 1) / (2.0 * order)));
        const double alpha = sw / (2.0 * q);
        const double a0 = 1.0 + alpha;
        Biquad s;
        if (kind == FilterKind::highpass) {
            s.b0 = (1.0 + cw) / 2.0 / a0;
            s.b1 = -(1.0 + cw) / a0;
            s.b2 = s.b0;
        } else {
            s.b0 = (1.0 - cw) / 2.0 / a0;
            s.b1 = (1.0 - cw) / a0;
            s.b2 = s.b0;
        }
        s.a1 = -2.0 * cw / a0;
        s.a2 = (1.0 - alpha) / a0;
        sections_.push_back(s);
    }
}

double ButterworthFilter::process(double x) {
    for (auto& s : sections_) x = s.process(x);
    return x;
}

void ButterworthFilter::process(std::span<double> samples) {
    for (auto& s : sections_) {
        for (double& x : samples) x = s.process(x);
    }
}

void ButterworthFilter::reset() {
    for (auto& s : sections_) s.reset();
}

double ButterworthFilter::magnitude_at(double freq_hz) const {
    const double w = 2.0 * kPi * freq_hz / sample_rate_hz_;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    double mag = 1.0;
    for (const auto& s : sections_) {
        const auto num = s.b0 + s.b1 * z1 + s.b2 * z2;
        const auto den = 1.0 + s.a1 * z1 + s.a2 * z2;
        mag *= std::abs(num / den);
    }
    return mag;
}

FilterState make_highpass_state(double cutoff_hz, int sample_rate_hz) {
    return ButterworthFilter(FilterKind::highpass, cutoff_hz, sample_rate_hz, 8);
}

AudioFrame highpass(const AudioFrame& frame, FilterState& state) {
    if (frame.sample_rate_hz != state.sample_rate_hz()) {
        throw ConfigError("high-pass state runs at " + std::to_string(state.sample_rate_hz()) +
                          " Hz but frame is " + std::to_string(frame.sample_rate_hz) + " Hz");
    }
    AudioFrame out = frame;
    state.process(out.samples);
    return out;
}

std::vector<double> make_window(WindowKind kind, std::size_t size) {
    std::vector<double> w(size, 1.0);
    if (kind == WindowKind::hann) {
        // Periodic Hann: overlap-adds to a constant at 50% hop.
        for (std::size_t i = 0; i < size; ++i) {
            w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / size);
        }
    }
    return w;
}

SpectrumAnalyzer::SpectrumAnalyzer(const PipelineConfig& config)
    : config_(config),
      window_(make_window(config.window, config.frame_size)),
      scratch_(config.frame_size),
      spectrum_(config.frame_size / 2 + 1),
      fft_(config.frame_size) {}

RawSpectrum SpectrumAnalyzer::analyze(const AudioFrame& frame) {
    if (frame.samples.size() != config_.frame_size) {
        throw ContractViolation("stft_frame: frame has " + std::to_string(frame.samples.size()) +
                                " samples, configured frame_size is " +
                                std::to_string(config_.frame_size));
    }
    for (std::size_t i = 0; i < scratch_.size(); ++i) scratch_[i] = frame.samples[i] * window_[i];
    fft_.forward(scratch_, spectrum_);

    RawSpectrum out;
    out.fft_size = config_.frame_size;
    out.sample_rate_hz = frame.sample_rate_hz;
    out.frame_index = frame.frame_index;
    out.magnitudes.resize(spectrum_.size());
    for (std::size_t k = 0; k < spectrum_.size(); ++k) out.magnitudes[k] = std::abs(spectrum_[k]);
    return out;
}

RawSpectrum stft_frame(const AudioFrame& frame, const PipelineConfig& config) {
    SpectrumAnalyzer analyzer(config);
    return analyzer.analyze(frame);
}

SpectralFrame extract_and_normalize(const RawSpectrum& spectrum, const PipelineConfig& config) {
    if (spectrum.magnitudes.size() != spectrum.fft_size / 2 + 1 ||
        config.band_high_hz > spectrum.sample_rate_hz / 2.0) {
        throw ContractViolation("extract_and_normalize: spectrum does not cover the band");
    }
    const BinRange range =
        band_bins(config.band_low_hz, config.band_high_hz, spectrum.fft_size, spectrum.sample_rate_hz);
    const std::size_t n = range.count();

    SpectralFrame out;
    out.frame_index = spectrum.frame_index;
    out.bin_freq_low_hz = bin_frequency(range.first, spectrum.fft_size, spectrum.sample_rate_hz);
    out.bin_freq_high_hz = bin_frequency(range.last, spectrum.fft_size, spectrum.sample_rate_hz);
    out.bins.assign(spectrum.magnitudes.begin() + static_cast<std::ptrdiff_t>(range.first),
                    spectrum.magnitudes.begin() + static_cast<std::ptrdiff_t>(range.last + 1));

    double energy = 0.0;
    for (double m : out.bins) energy += m * m;
    out.frame_energy = energy;
    if (energy == 0.0) {
        out.bins.assign(n, 1.0 / static_cast<double>(n));
        return out;
    }

    // Dynamic-range floor relative to the strongest component anywhere in the frame.
    const double peak = *std::max_element(spectrum.magnitudes.begin(), spectrum.magnitudes.end());
    const double level_floor = config.epsilon_floor * peak;
    double sum = 0.0;
    for (double& m : out.bins) {
        m = std::max(m, level_floor);
        sum += m;
    }
    double floored_sum = 0.0;
    for (double& p : out.bins) {
        p = std::max(p / sum, config.epsilon_floor);
        floored_sum += p;
    }
    for (double& p : out.bins) p /= floored_sum;
    return out;
}

SpectralPipeline::SpectralPipeline(const PipelineConfig& config, int sample_rate_hz)
    : config_(config),
      sample_rate_hz_(sample_rate_hz),
      bins_((config.validate(sample_rate_hz),
             band_bins(config.band_low_hz, config.band_high_hz, config.frame_size, sample_rate_hz))),
      filter_(make_highpass_state(config.highpass_cutoff_hz, sample_rate_hz)),
      analyzer_(config) {
    buffer_.reserve(config.frame_size + config.hop_size);
}

std::vector<SpectralFrame> SpectralPipeline::push(std::span<const double> samples) {
    std::vector<SpectralFrame> frames;
    AudioFrame frame;
    frame.sample_rate_hz = sample_rate_hz_;
    for (double x : samples) {
        buffer_.push_back(filter_.process(x));
        if (buffer_.size() < config_.frame_size) continue;
        frame.frame_index = next_frame_index_++;
        frame.samples.assign(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(config_.frame_size));
        frames.push_back(extract_and_normalize(analyzer_.analyze(frame), config_));
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(config_.hop_size));
    }
    return frames;
}

}  // namespace sonifw::dsp
