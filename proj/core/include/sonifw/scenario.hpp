#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sonifw/ambience.hpp"
#include "sonifw/modem.hpp"

namespace sonifw {

// One modem transmission placed on the scenario timeline. Its RMS is set to
// the ambience's nominal RMS shifted by gain_db.
struct ScheduledTransmission {
    double start_seconds = 0.0;
    modem::ModemScheme scheme;
    std::vector<std::uint8_t> payload;
    double gain_db = 0.0;
};

// Deterministic live-sim input: ambience plus scheduled fixture playback.
//
// Text format, one directive per line, '#' starts a comment:
//   sample_rate 44100
//   duration 30            (seconds; omitted = runs until stopped)
//   seed 7
//   ambience level=0.03 music=on bursts=on burst_gain=8 burst_interval=4
//   at 12.0 fsk payload=c0ffee tones=18500,19000 baud=20 gain_db=0
//   at 20.0 psk payload=abcd carrier=20000
//   at 25.0 multicarrier payload=0102 carriers=18300,18680,...
struct Scenario {
    int sample_rate_hz = 44100;
    std::optional<double> duration_seconds;
    std::uint64_t seed = 1;
    AmbienceConfig ambience;
    std::vector<ScheduledTransmission> schedule;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

struct TransmissionSpan {
    double start_seconds = 0.0;
    double end_seconds = 0.0;
    modem::SchemeKind kind = modem::SchemeKind::fsk;
};

// Streams a scenario in arbitrary block sizes.
class ScenarioSource {
public:
    explicit ScenarioSource(const Scenario& scenario);

    // Fills up to out.size() samples; returns how many were written (0 at end).
    std::size_t read(std::span<double> out);
    bool finished() const;
    int sample_rate_hz() const { return scenario_.sample_rate_hz; }
    std::uint64_t position() const { return position_; }
    const std::vector<TransmissionSpan>& ground_truth() const { return truth_; }

private:
    struct Playback {
        std::uint64_t start_sample = 0;
        std::vector<double> samples;
    };

    Scenario scenario_;
    AmbienceGenerator ambience_;
    std::vector<Playback> playbacks_;
    std::vector<TransmissionSpan> truth_;
    std::optional<std::uint64_t> total_samples_;
    std::uint64_t position_ = 0;
};

// Renders a finite scenario; throws ConfigError if it has no duration.
std::vector<double> render_scenario(const Scenario& scenario);

}  // namespace sonifw
