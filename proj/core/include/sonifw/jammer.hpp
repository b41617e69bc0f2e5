#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sonifw/audio.hpp"
#include "sonifw/detector.hpp"
#include "sonifw/fft.hpp"
#include "sonifw/modem.hpp"

namespace sonifw::jam {

enum class JamMode { reactive, preventive };

// "mute" records the block decision but emits nothing; it stands in for
// taking exclusive microphone access, which this build does not do.
enum class BlockStrategy { noise, mute };

std::string_view to_string(JamMode mode);
std::string_view to_string(BlockStrategy strategy);
std::optional<BlockStrategy> parse_strategy(std::string_view text);

struct JammerConfig {
    FrequencyBand full_band{kBandLowHz, kBandHighHz};
    double amplitude = 0.5;
    double safety_ceiling = 0.8;
    double padding_hz = 200.0;
    JamMode mode = JamMode::reactive;
    BlockStrategy strategy = BlockStrategy::noise;
};

struct JamPlan {
    FrequencyBand band_hz;
    double amplitude = 0.5;
    JamMode mode = JamMode::reactive;
    std::optional<std::int64_t> duration_frames;  // nullopt: until stopped
    std::string event_id;
};

// Narrowband events get their band padded by config.padding_hz on each side;
// broadband, unknown and preventive plans cover the whole band. Reactive
// plans require an event (ContractViolation otherwise).
JamPlan plan_jam(const std::optional<detect::DetectionEvent>& event, const JammerConfig& config);

// Throws ContractViolation if the band is narrower than two analysis bins.
void validate_plan(const JamPlan& plan, int sample_rate_hz, std::size_t fft_size = 2048);

// Streaming band-limited white noise: frequency-domain noise blocks,
// sine-windowed and overlap-added at 50% so the variance stays constant.
// Output RMS is a quarter of the plan amplitude and samples are clipped to it.
class JamGenerator {
public:
    JamGenerator(const JamPlan& plan, int sample_rate_hz, std::uint64_t seed);

    std::vector<double> generate(std::size_t n_samples);
    void generate_into(std::span<double> out);
    const JamPlan& plan() const { return plan_; }

private:
    void next_block();

    JamPlan plan_;
    int sample_rate_hz_;
    std::size_t block_;
    std::size_t first_bin_;
    std::size_t last_bin_;
    double scale_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    dsp::RealFft fft_;
    std::vector<double> window_;
    std::vector<double> ready_;
    std::size_t ready_pos_ = 0;
    std::vector<double> tail_;
};

std::vector<double> synthesize_jam(const JamPlan& plan, std::size_t n_samples, std::uint64_t seed,
                                   int sample_rate_hz = 44100);

struct JamTrial {
    double bit_error_rate = 1.0;
    double jam_gain = 0.0;
    modem::FskDecodeResult decode;
};

// Mixes `jam` into the FSK fixture `clean` at the given jam-to-signal ratio and
// decodes it. The ratio compares the jam's mean power per analysis bin at the
// FSK tone frequencies with the signal's peak tone-bin power. A non-finite
// ratio mixes no jam.
JamTrial jam_effectiveness(std::span<const double> clean, std::span<const double> jam,
                           double jam_to_signal_db, const modem::ModemScheme& scheme,
                           std::span<const std::uint8_t> payload, int sample_rate_hz = 44100);

}  // namespace sonifw::jam
