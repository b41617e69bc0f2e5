#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sonifw/audio.hpp"
#include "sonifw/fft.hpp"

namespace sonifw::dsp {

enum class WindowKind { hann, rectangular };

struct PipelineConfig {
    std::size_t frame_size = 2048;
    std::size_t hop_size = 1024;
    WindowKind window = WindowKind::hann;
    double highpass_cutoff_hz = 17000.0;
    double band_low_hz = kBandLowHz;
    double band_high_hz = kBandHighHz;
    double epsilon_floor = 1e-6;

    // Throws ConfigError when the ordering or Nyquist constraints fail at this rate.
    void validate(int sample_rate_hz) const;
};

// Inclusive FFT bin range covering [band_low_hz, band_high_hz].
struct BinRange {
    std::size_t first = 0;
    std::size_t last = 0;
    std::size_t count() const { return last - first + 1; }
};

BinRange band_bins(double band_low_hz, double band_high_hz, std::size_t fft_size,
                   int sample_rate_hz);

inline double bin_frequency(std::size_t bin, std::size_t fft_size, int sample_rate_hz) {
    return static_cast<double>(bin) * sample_rate_hz / static_cast<double>(fft_size);
}

// One second-order section, transposed direct form II.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
    double z1 = 0, z2 = 0;

    double process(double x) {
        const double y = b0 * x + z1;
        z1 = b1 * x - a1 * y + z2;
        z2 = b2 * x - a2 * y;
        return y;
    }
    void reset() { z1 = z2 = 0; }
};

enum class FilterKind { highpass, lowpass };

// Even-order Butterworth response realized as cascaded biquads.
class ButterworthFilter {
public:
    ButterworthFilter(FilterKind kind, double cutoff_hz, int sample_rate_hz, int order = 8);

    void process(std::span<double> samples);
    double process(double x);
    void reset();

    FilterKind kind() const { return kind_; }
    double cutoff_hz() const { return cutoff_hz_; }
    int sample_rate_hz() const { return sample_rate_hz_; }

    // Magnitude response |H(f)| evaluated from the section coefficients.
    double magnitude_at(double freq_hz) const;

private:
    FilterKind kind_;
    double cutoff_hz_;
    int sample_rate_hz_;
    std::vector<Biquad> sections_;
};

// Carried high-pass state for one stream.
using FilterState = ButterworthFilter;

FilterState make_highpass_state(double cutoff_hz, int sample_rate_hz);

// Filters a block and advances `state`. Throws ConfigError on a sample-rate mismatch.
AudioFrame highpass(const AudioFrame& frame, FilterState& state);

// Magnitudes for bins 0..fft_size/2 of one windowed frame.
struct RawSpectrum {
    std::vector<double> magnitudes;
    std::size_t fft_size = 0;
    int sample_rate_hz = 44100;
    std::int64_t frame_index = 0;
};

// Normalized in-band magnitude distribution (sums to one, strictly positive).
struct SpectralFrame {
    std::vector<double> bins;
    double bin_freq_low_hz = 0.0;
    double bin_freq_high_hz = 0.0;
    std::int64_t frame_index = 0;
    double frame_energy = 0.0;
};

std::vector<double> make_window(WindowKind kind, std::size_t size);

class SpectrumAnalyzer {
public:
    explicit SpectrumAnalyzer(const PipelineConfig& config);

    // Throws ContractViolation if the frame length differs from frame_size.
    RawSpectrum analyze(const AudioFrame& frame);

    const PipelineConfig& config() const { return config_; }

private:
    PipelineConfig config_;
    std::vector<double> window_;
    std::vector<double> scratch_;
    std::vector<std::complex<double>> spectrum_;
    RealFft fft_;
};

RawSpectrum stft_frame(const AudioFrame& frame, const PipelineConfig& config);

// Restricts to the band, floors and L1-normalizes. Bins below
// epsilon_floor times the frame's spectral peak are lifted to that level, and
// after normalization every bin is floored at epsilon_floor and renormalized.
// Zero in-band energy yields the uniform distribution.
SpectralFrame extract_and_normalize(const RawSpectrum& spectrum, const PipelineConfig& config);

// Streaming front end: high-pass the continuous sample stream, cut it into
// overlapping frames and turn each frame into a SpectralFrame.
class SpectralPipeline {
public:
    SpectralPipeline(const PipelineConfig& config, int sample_rate_hz);

    // Appends samples and returns every SpectralFrame completed by them.
    std::vector<SpectralFrame> push(std::span<const double> samples);

    const PipelineConfig& config() const { return config_; }
    int sample_rate_hz() const { return sample_rate_hz_; }
    std::int64_t frames_emitted() const { return next_frame_index_; }
    BinRange bins() const { return bins_; }

private:
    PipelineConfig config_;
    int sample_rate_hz_;
    BinRange bins_;
    FilterState filter_;
    SpectrumAnalyzer analyzer_;
    std::vector<double> buffer_;
    std::int64_t next_frame_index_ = 0;
};

}  // namespace sonifw::dsp
