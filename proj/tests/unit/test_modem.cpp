#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sonifw/dsp.hpp"
#include "sonifw/errors.hpp"
#include "sonifw/fft.hpp"
#include "sonifw/modem.hpp"

using namespace sonifw;
using namespace sonifw::modem;

namespace {

// Whole-signal power spectrum through the FFT that Stft.MatchesDirectDft checks.
std::vector<double> power_spectrum(std::span<const double> x) {
    dsp::RealFft fft(x.size());
    std::vector<std::complex<double>> X(fft.bins());
    fft.forward(x, X);
    std::vector<double> p(X.size());
    for (std::size_t k = 0; k < X.size(); ++k) p[k] = std::norm(X[k]);
    return p;
}

double out_of_band_ratio_db(std::span<const double> x, int fs, double lo, double hi) {
    const auto p = power_spectrum(x);
    double in = 0.0, out = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double f = static_cast<double>(k) * fs / static_cast<double>(x.size());
        (f >= lo && f <= hi ? in : out) += p[k];
    }
    return 10.0 * std::log10(in / out);
}

std::vector<std::uint8_t> random_payload(std::size_t n, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> d(0, 255);
    std::vector<std::uint8_t> p(n);
    for (auto& b : p) b = static_cast<std::uint8_t>(d(rng));
    return p;
}

}  // namespace

TEST(Crc16, CatalogCheckValue) {
    const std::string s = "123456789";
    const std::vector<std::uint8_t> bytes(s.begin(), s.end());
    EXPECT_EQ(crc16_ccitt(bytes), 0x29B1);
}

TEST(Crc16, MatchesBitwiseReference) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        const auto p = random_payload(i, rng);
        EXPECT_EQ(crc16_ccitt(p), oracle::crc16(p));
    }
}

TEST(FrameBits, Layout) {
    const std::vector<std::uint8_t> payload{0xA5};
    const auto bits = frame_bits(payload);
    ASSERT_EQ(bits.size(), 16u + 8 * 4);
    for (int i = 0; i < 16; ++i) EXPECT_EQ(bits[i], i % 2);
    const std::vector<int> len{0, 0, 0, 0, 0, 0, 0, 1};
    const std::vector<int> body{1, 0, 1, 0, 0, 1, 0, 1};
    EXPECT_TRUE(std::equal(len.begin(), len.end(), bits.begin() + 16));
    EXPECT_TRUE(std::equal(body.begin(), body.end(), bits.begin() + 24));
    EXPECT_EQ(frame_bits({}).size(), 16u);
    EXPECT_THROW(frame_bits(std::vector<std::uint8_t>(256, 0)), ContractViolation);
}

TEST(Encode, FskSymbolsAlternateBetweenToneBins) {
    const auto scheme = ModemScheme::fsk(18500, 19000);
    const auto x = encode(std::vector<std::uint8_t>{0x55, 0x55}, scheme, 44100);
    const double sps = scheme.samples_per_symbol(44100);
    dsp::PipelineConfig pc;
    pc.window = dsp::WindowKind::hann;
    dsp::SpectrumAnalyzer an(pc);
    const auto bits = frame_bits(std::vector<std::uint8_t>{0x55, 0x55});
    for (std::size_t s = 0; s < bits.size(); ++s) {
        const auto centre = static_cast<std::size_t>((s + 0.5) * sps);
        if (centre < 1024 || centre + 1024 > x.size()) continue;
        AudioFrame f;
        f.samples.assign(x.begin() + centre - 1024, x.begin() + centre + 1024);
        const auto m = an.analyze(f).magnitudes;
        const auto argmax = std::max_element(m.begin(), m.end()) - m.begin();
        EXPECT_EQ(argmax, bits[s] ? 882 : 859) << "symbol " << s;
    }
}

TEST(Encode, EmptyPayloadIsPreambleOnly) {
    const auto s = ModemScheme::fsk();
    const auto x = encode({}, s, 44100);
    EXPECT_EQ(x.size(), static_cast<std::size_t>(16 * 44100 / 20));
    EXPECT_DOUBLE_EQ(frame_duration_seconds(0, s), 0.8);
    const auto d = decode_fsk(x, s, 44100);
    EXPECT_TRUE(d.synced);
    EXPECT_TRUE(d.preamble_only);
}

TEST(Encode, AmplitudeBoundAndDeterminism) {
    std::mt19937_64 rng(2);
    for (auto s : {ModemScheme::fsk(), ModemScheme::psk(), ModemScheme::multicarrier()}) {
        s.amplitude = 0.37;
        const auto p = random_payload(6, rng);
        const auto a = encode(p, s, 48000);
        EXPECT_LE(peak_abs(a), 0.37 + 1e-12);
        EXPECT_EQ(a, encode(p, s, 48000));
    }
}

TEST(Encode, OutOfBandEnergyAtLeast40dBDown) {
    for (int fs : {44100, 48000}) {
        for (const auto& s : {ModemScheme::fsk(), ModemScheme::fsk(21000, 21500), ModemScheme::psk(),
                              ModemScheme::psk(18300), ModemScheme::multicarrier()}) {
            const auto x = encode(std::vector<std::uint8_t>{0xde, 0xad, 0xbe, 0xef}, s, fs);
            EXPECT_GE(out_of_band_ratio_db(x, fs, 18000, 22000), 40.0)
                << to_string(s.kind) << " " << s.tones_hz[0] << " fs " << fs;
        }
    }
}

TEST(Encode, ConfigErrors) {
    auto s = ModemScheme::fsk(18500, 23000);
    EXPECT_THROW(encode(std::vector<std::uint8_t>{1}, s, 44100), ConfigError);
    s = ModemScheme::psk(17000);
    EXPECT_THROW(s.validate(44100), ConfigError);
    s = ModemScheme::fsk();
    s.symbol_rate_baud = 40;
    EXPECT_THROW(s.validate(44100), ConfigError);
    s = ModemScheme::fsk();
    s.amplitude = 1.5;
    EXPECT_THROW(s.validate(44100), ConfigError);
    s = ModemScheme::fsk();
    s.tones_hz = {18500};
    EXPECT_THROW(s.validate(44100), ConfigError);
}

TEST(DecodeFsk, RoundTripRandomPayloadsAndToneSets) {
    std::mt19937_64 rng(255);
    const std::vector<std::pair<double, double>> tone_sets{{18500, 19000}, {19500, 20500}, {20000, 21000},
                                                          {18200, 21800}};
    std::vector<std::size_t> sizes{0, 1, 2, 17, 64, 128, 255};
    for (int i = 0; i < 8; ++i) sizes.push_back(std::uniform_int_distribution<std::size_t>(1, 255)(rng));
    std::size_t run = 0;
    for (std::size_t n : sizes) {
        const auto [t0, t1] = tone_sets[run % tone_sets.size()];
        auto s = ModemScheme::fsk(t0, t1);
        s.symbol_rate_baud = run % 3 == 0 ? 10.0 : 20.0;
        const int fs = run % 2 ? 48000 : 44100;
        ++run;
        const auto p = random_payload(n, rng);
        auto x = std::vector<double>(fs / 3, 0.0);
        const auto w = encode(p, s, fs);
        x.insert(x.end(), w.begin(), w.end());
        x.insert(x.end(), fs / 5, 0.0);
        const auto d = decode_fsk(x, s, fs, p);
        ASSERT_TRUE(d.synced) << n;
        EXPECT_TRUE(d.crc_ok) << n;
        EXPECT_EQ(d.payload, p) << n;
        EXPECT_EQ(d.bit_error_rate, 0.0) << n;
    }
}

TEST(DecodeFsk, SyncIgnoresLowLevelLeadingNoise) {
    const auto s = ModemScheme::fsk();
    const std::vector<std::uint8_t> p{0xc0, 0xff, 0xee, 0x01, 0x23, 0x45, 0x67, 0x89};
    const auto w = encode(p, s, 44100);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto x = oracle::white_noise(w.size() + 44100, 1e-4, seed);
        for (std::size_t i = 0; i < w.size(); ++i) x[22050 + i] += w[i];
        const auto d = decode_fsk(x, s, 44100, p);
        EXPECT_EQ(d.bit_error_rate, 0.0) << seed;
        EXPECT_NEAR(static_cast<double>(d.sync_sample), 22050.0, 100.0) << seed;
    }
}

TEST(DecodeFsk, AlternatingPayloadDoesNotShiftSync) {
    // Length byte 0x55 continues the preamble pattern.
    const auto s = ModemScheme::fsk();
    const std::vector<std::uint8_t> p(0x55, 0x55);
    auto x = std::vector<double>(4410, 0.0);
    const auto w = encode(p, s, 44100);
    x.insert(x.end(), w.begin(), w.end());
    const auto d = decode_fsk(x, s, 44100, p);
    EXPECT_TRUE(d.crc_ok);
    EXPECT_EQ(d.bit_error_rate, 0.0);
}

TEST(DecodeFsk, HeavyNoiseCorruptsAndCrcFlagsIt) {
    const auto s = ModemScheme::fsk();
    const std::vector<std::uint8_t> p{1, 2, 3, 4, 5, 6, 7, 8};
    const auto w = encode(p, s, 44100);
    // In-band white noise 20 dB above the signal: per-bin noise power far exceeds a tone's.
    dsp::ButterworthFilter hp(dsp::FilterKind::highpass, 18000, 44100);
    auto noise = oracle::white_noise(w.size(), 1.0, 5);
    hp.process(noise);
    const double g = 10.0 * oracle::rms(w) / oracle::rms(noise);
    std::vector<double> x(w.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (w[i] + g * noise[i]) / 4.0;
    const auto d = decode_fsk(x, s, 44100, p);
    EXPECT_FALSE(d.crc_ok);
    EXPECT_GT(d.bit_error_rate, 0.05);
}

TEST(DecodeFsk, SilenceFailsSync) {
    const std::vector<double> x(44100 * 2, 0.0);
    const auto d = decode_fsk(x, ModemScheme::fsk(), 44100, std::vector<std::uint8_t>{1});
    EXPECT_FALSE(d.synced);
    EXPECT_EQ(d.bit_error_rate, 1.0);
}

TEST(DecodeFsk, WrongSchemeKindNeverThrows) {
    const std::vector<double> x(1000, 0.1);
    EXPECT_FALSE(decode_fsk(x, ModemScheme::psk(), 44100).synced);
    EXPECT_FALSE(decode_fsk({}, ModemScheme::fsk(), 44100).synced);
}

TEST(Hex, RoundTrip) {
    const std::vector<std::uint8_t> b{0x00, 0xc0, 0xff, 0xee};
    EXPECT_EQ(to_hex(b), "00c0ffee");
    EXPECT_EQ(parse_hex("00C0FFee"), b);
    EXPECT_THROW(parse_hex("abc"), ConfigError);
    EXPECT_THROW(parse_hex("zz"), ConfigError);
}

TEST(Scheme, StringRoundTrip) {
    for (auto k : {SchemeKind::fsk, SchemeKind::psk, SchemeKind::multicarrier}) {
        EXPECT_EQ(parse_scheme(to_string(k)), k);
    }
    EXPECT_FALSE(parse_scheme("ofdm"));
}
