#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sonifw/audio.hpp"

namespace sonifw::modem {

enum class SchemeKind { fsk, psk, multicarrier };

std::string_view to_string(SchemeKind kind);
std::optional<SchemeKind> parse_scheme(std::string_view text);

inline constexpr int kPreambleSymbols = 16;
inline constexpr std::size_t kMaxPayloadBytes = 255;

struct ModemScheme {
    SchemeKind kind = SchemeKind::fsk;
    // fsk: {tone for bit 0, tone for bit 1}; psk: {carrier}; multicarrier: carriers.
    std::vector<double> tones_hz{18500.0, 19000.0};
    double symbol_rate_baud = 20.0;
    double amplitude = 0.5;

    // Throws ConfigError for carriers outside the band or above Nyquist, bad
    // amplitude, or symbols shorter than two analysis hops.
    void validate(int sample_rate_hz, std::size_t hop_size = 1024) const;

    double samples_per_symbol(int sample_rate_hz) const {
        return sample_rate_hz / symbol_rate_baud;
    }

    static ModemScheme fsk(double tone0_hz = 18500.0, double tone1_hz = 19000.0);
    static ModemScheme psk(double carrier_hz = 20000.0);
    // Eight carriers spread across 18.3-21 kHz.
    static ModemScheme multicarrier();
};

// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF).
std::uint16_t crc16_ccitt(std::span<const std::uint8_t> data);

// Channel bits: alternating preamble (0101...), then length byte, payload and
// CRC over length+payload, each MSB first. An empty payload is preamble only.
std::vector<int> frame_bits(std::span<const std::uint8_t> payload);

double frame_duration_seconds(std::size_t payload_bytes, const ModemScheme& scheme);

// Deterministic transmission waveform; peak amplitude never exceeds scheme.amplitude.
std::vector<double> encode(std::span<const std::uint8_t> payload, const ModemScheme& scheme,
                           int sample_rate_hz);

struct FskDecodeResult {
    bool synced = false;
    std::size_t sync_sample = 0;
    double sync_quality = 0.0;
    bool preamble_only = false;
    std::vector<int> bits;  // channel bits following the preamble
    std::vector<std::uint8_t> payload;
    bool crc_ok = false;
    // Against the reference payload when one was supplied; otherwise 0 for a
    // CRC-clean frame and 1 for anything else.
    double bit_error_rate = 1.0;
};

// Non-coherent tone-energy demodulator that aligns on the preamble. Never
// throws on bad input signals; failures surface as synced=false and BER 1.
FskDecodeResult decode_fsk(std::span<const double> samples, const ModemScheme& scheme,
                           int sample_rate_hz,
                           std::optional<std::span<const std::uint8_t>> reference = std::nullopt);

// Fraction of reference payload bits decoded wrongly; missing bits count as
// errors and an unsynchronized decode is 1.
double bit_error_rate(const FskDecodeResult& decoded, std::span<const std::uint8_t> reference);

std::vector<std::uint8_t> parse_hex(std::string_view hex);
std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace sonifw::modem
