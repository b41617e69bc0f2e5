#include <gtest/gtest.h>

#include <numeric>

#include "oracles.hpp"
#include "sonifw/divergence.hpp"
#include "sonifw/dsp.hpp"
#include "sonifw/errors.hpp"

using namespace sonifw;
using namespace sonifw::dsp;

namespace {

AudioFrame make_frame(std::vector<double> samples, int fs = 44100) {
    AudioFrame f;
    f.samples = std::move(samples);
    f.sample_rate_hz = fs;
    return f;
}

// Runs a long tone through the stateful filter and measures the settled tail.
double filtered_tone_rms(double freq_hz, double amp, int fs = 44100) {
    auto state = make_highpass_state(17000.0, fs);
    auto x = oracle::tone(freq_hz, amp, static_cast<std::size_t>(fs), fs);
    const auto y = highpass(make_frame(x, fs), state);
    return oracle::rms(std::span(y.samples).subspan(y.samples.size() / 2));
}

}  // namespace

TEST(BandBins, CountMatchesDefinition) {
    for (int fs : {44100, 48000}) {
        const auto r = band_bins(18000, 22000, 2048, fs);
        EXPECT_EQ(r.count(), oracle::band_bin_count(18000, 22000, 2048, fs));
    }
    const auto r = band_bins(18000, 22000, 2048, 44100);
    EXPECT_EQ(r.first, 836u);
    EXPECT_EQ(r.last, 1021u);
    EXPECT_EQ(r.count(), 186u);
}

TEST(PipelineConfig, RejectsBadOrdering) {
    PipelineConfig c;
    EXPECT_NO_THROW(c.validate(44100));
    c.hop_size = 4096;
    EXPECT_THROW(c.validate(44100), ConfigError);
    c = {};
    c.highpass_cutoff_hz = 19000;
    EXPECT_THROW(c.validate(44100), ConfigError);
    c = {};
    c.band_high_hz = 23000;
    EXPECT_THROW(c.validate(44100), ConfigError);
}

TEST(Highpass, AudibleToneAttenuated) {
    EXPECT_LT(filtered_tone_rms(1000.0, 0.5), 0.005);
}

TEST(Highpass, PassbandToneKeepsLevel) {
    const double expected = 0.5 / std::sqrt(2.0);
    EXPECT_NEAR(filtered_tone_rms(20000.0, 0.5), expected, 0.12 * expected);
}

TEST(Highpass, ResponseMatchesAnalogPrototype) {
    const auto f = make_highpass_state(17000.0, 44100);
    // Attenuation at cutoff/2 and passband flatness across the band.
    EXPECT_LT(20 * std::log10(f.magnitude_at(8500.0)), -40.0);
    for (double hz = 18000; hz <= 22000; hz += 250) {
        EXPECT_NEAR(20 * std::log10(f.magnitude_at(hz)), 0.0, 1.0) << hz;
    }
    // The bilinear transform is prewarped at the cutoff, so -3 dB lands there.
    EXPECT_NEAR(f.magnitude_at(17000.0), oracle::butterworth_highpass_gain(17000, 17000, 8), 1e-6);
}

TEST(Highpass, ZeroInZeroOut) {
    auto state = make_highpass_state(17000.0, 44100);
    const auto y = highpass(make_frame(std::vector<double>(2048, 0.0)), state);
    ASSERT_EQ(y.samples.size(), 2048u);
    for (double v : y.samples) EXPECT_EQ(v, 0.0);
}

TEST(Highpass, BlockwiseEqualsOneShot) {
    auto x = oracle::white_noise(8192, 0.1, 3);
    auto a = make_highpass_state(17000.0, 44100);
    auto b = make_highpass_state(17000.0, 44100);
    const auto whole = highpass(make_frame(x), a);
    std::vector<double> pieces;
    for (std::size_t off = 0; off < x.size(); off += 1000) {
        const std::size_t n = std::min<std::size_t>(1000, x.size() - off);
        const auto y = highpass(make_frame({x.begin() + off, x.begin() + off + n}), b);
        pieces.insert(pieces.end(), y.samples.begin(), y.samples.end());
    }
    EXPECT_EQ(whole.samples, pieces);
}

TEST(Highpass, SampleRateMismatchIsConfigError) {
    auto state = make_highpass_state(17000.0, 44100);
    EXPECT_THROW(highpass(make_frame(std::vector<double>(16, 0.0), 48000), state), ConfigError);
}

TEST(Stft, ToneArgmaxAtExpectedBin) {
    PipelineConfig c;
    const auto spec = stft_frame(make_frame(oracle::tone(19000, 0.5, 2048, 44100)), c);
    ASSERT_EQ(spec.magnitudes.size(), 1025u);
    const auto argmax = std::max_element(spec.magnitudes.begin(), spec.magnitudes.end()) -
                        spec.magnitudes.begin();
    EXPECT_EQ(argmax, std::lround(19000.0 * 2048 / 44100));
    EXPECT_EQ(argmax, 882);
}

TEST(Stft, MatchesDirectDft) {
    PipelineConfig c;
    const auto x = oracle::white_noise(2048, 0.2, 9);
    const auto spec = stft_frame(make_frame(x), c);
    for (std::size_t k : {0u, 1u, 100u, 836u, 882u, 1021u, 1024u}) {
        EXPECT_NEAR(spec.magnitudes[k], oracle::dft_magnitude(x, k), 1e-9 * (1 + spec.magnitudes[k])) << k;
    }
}

TEST(Stft, TwoTonesGiveTwoPeaks) {
    PipelineConfig c;
    auto x = oracle::tone(18500, 0.3, 2048, 44100);
    const auto y = oracle::tone(21000, 0.3, 2048, 44100);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
    const auto m = stft_frame(make_frame(x), c).magnitudes;
    for (double f : {18500.0, 21000.0}) {
        const auto k = static_cast<std::size_t>(std::lround(f * 2048 / 44100));
        EXPECT_GT(m[k], m[k - 2]);
        EXPECT_GT(m[k], m[k + 2]);
        EXPECT_GT(m[k], 100 * m[(k + 1000) / 2]);
    }
}

TEST(Stft, ZeroFrame) {
    const auto spec = stft_frame(make_frame(std::vector<double>(2048, 0.0)), {});
    for (double m : spec.magnitudes) EXPECT_EQ(m, 0.0);
}

TEST(Stft, WrongLengthIsContractViolation) {
    EXPECT_THROW(stft_frame(make_frame(std::vector<double>(1000, 0.0)), {}), ContractViolation);
}

TEST(Stft, TriangleInequalityAtToneBin) {
    PipelineConfig c;
    const auto a = oracle::tone(19000, 0.4, 2048, 44100);
    const auto b = oracle::white_noise(2048, 0.3, 4);
    std::vector<double> sum(2048);
    for (std::size_t i = 0; i < 2048; ++i) sum[i] = a[i] + b[i];
    const auto ma = stft_frame(make_frame(a), c).magnitudes[882];
    const auto mb = stft_frame(make_frame(b), c).magnitudes[882];
    const auto ms = stft_frame(make_frame(sum), c).magnitudes[882];
    EXPECT_LE(ms, ma + mb + 1e-9);
}

TEST(Normalize, ZeroSpectrumIsUniform) {
    RawSpectrum s;
    s.fft_size = 2048;
    s.magnitudes.assign(1025, 0.0);
    const auto f = extract_and_normalize(s, {});
    ASSERT_EQ(f.bins.size(), 186u);
    EXPECT_EQ(f.frame_energy, 0.0);
    for (double p : f.bins) EXPECT_DOUBLE_EQ(p, 1.0 / 186);
}

TEST(Normalize, SingleActiveBinFollowsFloorRule) {
    RawSpectrum s;
    s.fft_size = 2048;
    s.magnitudes.assign(1025, 0.0);
    const std::size_t k = 900;
    s.magnitudes[k] = 1.0;
    const auto f = extract_and_normalize(s, {});
    // Closed form: the other 185 bins are lifted to eps, so the active bin
    // keeps 1/(1+185 eps) before the final floor, and eps'-weighted rest.
    const double eps = 1e-6;
    const double b = 186;
    const double active = 1.0 / (1.0 + (b - 1) * eps);
    const double rest = std::max(eps / (1.0 + (b - 1) * eps), eps);
    const double total = active + (b - 1) * rest;
    EXPECT_NEAR(f.bins[k - 836], active / total, 1e-12);
    EXPECT_NEAR(f.bins[0], rest / total, 1e-15);
    EXPECT_NEAR(f.bins[k - 836], 1.0 - (b - 1) * f.bins[0], 1e-12);
    EXPECT_DOUBLE_EQ(f.frame_energy, 1.0);
}

TEST(Normalize, FlatNoiseNearUniform) {
    PipelineConfig c;
    SpectralPipeline pipe(c, 44100);
    const auto x = oracle::white_noise(2048 + 99 * 1024, 0.1, 17);
    const auto frames = pipe.push(x);
    ASSERT_EQ(frames.size(), 100u);
    std::vector<double> avg(186, 0.0);
    for (const auto& f : frames) {
        for (std::size_t i = 0; i < 186; ++i) avg[i] += f.bins[i] / 100.0;
    }
    const std::vector<double> uniform(186, 1.0 / 186);
    EXPECT_LT(total_variation(avg, uniform), 0.05);
}

TEST(Normalize, DistributionInvariantsAndScaleInvariance) {
    PipelineConfig c;
    SpectrumAnalyzer an(c);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto x = oracle::white_noise(2048, 0.05, 100 + trial);
        const auto t = oracle::tone(18000 + 40.0 * trial, 0.3, 2048, 44100);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += (trial % 2) * t[i];
        const double scale = std::uniform_real_distribution<double>(0.01, 3.0)(rng);
        auto y = x;
        for (double& v : y) v *= scale;
        const auto fx = extract_and_normalize(an.analyze(make_frame(x)), c);
        const auto fy = extract_and_normalize(an.analyze(make_frame(y)), c);
        EXPECT_NEAR(std::accumulate(fx.bins.begin(), fx.bins.end(), 0.0), 1.0, 1e-9);
        EXPECT_GT(*std::min_element(fx.bins.begin(), fx.bins.end()), 0.0);
        for (std::size_t i = 0; i < fx.bins.size(); ++i) EXPECT_NEAR(fx.bins[i], fy.bins[i], 1e-12);
        EXPECT_NEAR(fy.frame_energy, scale * scale * fx.frame_energy, 1e-9 * fy.frame_energy);
    }
}

TEST(Normalize, AudibleContentDoesNotReachTheBand) {
    PipelineConfig c;
    SpectralPipeline with_tones(c, 44100), noise_only(c, 44100);
    const auto n = oracle::white_noise(44100 * 2, 1e-4, 8);
    std::vector<double> x = n;
    for (double f : {220.0, 1000.0, 4000.0, 9500.0}) {
        const auto t = oracle::tone(f, 0.2, x.size(), 44100);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += t[i];
    }
    // Loud audible tones 66 dB over the floor leave the in-band distribution as it was.
    const auto a = with_tones.push(x);
    const auto b = noise_only.push(n);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 10; i < a.size(); ++i) {
        EXPECT_LT(jensen_shannon(a[i].bins, b[i].bins), 1e-3) << i;
    }
}

TEST(SpectralPipeline, FramesAndIndices) {
    SpectralPipeline pipe({}, 44100);
    std::vector<double> x(2048 + 1024 * 4, 0.0);
    auto a = pipe.push(std::span(x).first(3000));
    auto b = pipe.push(std::span(x).subspan(3000));
    ASSERT_EQ(a.size() + b.size(), 5u);
    EXPECT_EQ(a.front().frame_index, 0);
    EXPECT_EQ(b.back().frame_index, 4);
    EXPECT_NEAR(a.front().bin_freq_low_hz, 836 * 44100.0 / 2048, 1e-9);
    EXPECT_NEAR(a.front().bin_freq_high_hz, 1021 * 44100.0 / 2048, 1e-9);
}
