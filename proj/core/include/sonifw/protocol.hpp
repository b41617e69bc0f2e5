#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonifw/detector.hpp"
#include "sonifw/dsp.hpp"
#include "sonifw/policy_store.hpp"

// Line-delimited JSON messages exchanged with dashboard clients. The field
// layout is documented in docs/protocol.md and pinned by golden transcripts.
namespace sonifw::protocol {

inline constexpr int kVersion = 1;

using Json = nlohmann::ordered_json;

enum class ServiceMode { monitor, reactive_jam, preventive_jam };

std::string_view to_string(ServiceMode mode);
std::optional<ServiceMode> parse_mode(std::string_view text);

enum class ControlType { allow, block, set_mode, subscribe_spectra, unsubscribe };

std::string_view to_string(ControlType type);

struct ControlMessage {
    ControlType type = ControlType::subscribe_spectra;
    std::string event_id;       // allow, block
    ServiceMode mode = ServiceMode::monitor;  // set_mode
};

struct ProtocolError {
    std::string code;    // "bad-json", "bad-version", "unknown-type", "bad-field"
    std::string detail;
};

std::variant<ControlMessage, ProtocolError> parse_control(std::string_view line);
std::string serialize(const ControlMessage& msg);

// Timing context for turning frame indices into seconds.
struct StreamClock {
    int sample_rate_hz = 44100;
    std::size_t hop_size = 1024;

    double seconds(std::int64_t frame_index) const {
        return static_cast<double>(frame_index) * static_cast<double>(hop_size) / sample_rate_hz;
    }
};

// Scores and times are rounded to 6 decimals so transcripts stay readable.
double round6(double value);

Json event_open(const detect::DetectionEvent& event, policy::Decision decision,
                const StreamClock& clock);
Json event_update(const detect::DetectionEvent& event, const StreamClock& clock);
Json event_close(const detect::DetectionEvent& event, policy::Decision decision,
                 const StreamClock& clock);

struct SpectraScale {
    double min_log10 = -6.0;
    double max_log10 = 0.0;
};

// 0 maps to min_log10 and 255 to max_log10; values outside are clamped.
std::vector<std::uint8_t> quantize_log8(std::span<const double> bins, const SpectraScale& scale = {});
std::vector<double> dequantize_log8(std::span<const std::uint8_t> levels,
                                    const SpectraScale& scale = {});

Json spectra(const dsp::SpectralFrame& frame, const SpectraScale& scale = {});

struct JamStatus {
    bool active = false;
    std::string event_id;
    FrequencyBand band_hz;
    std::string mode;      // reactive | preventive
    std::string strategy;  // noise | mute
    double amplitude = 0.0;
    std::uint64_t sample = 0;  // stream sample where jamming starts or stops
};

Json status_state(std::string_view state, ServiceMode mode, std::string_view context,
                  std::int64_t frame_index);
Json status_jam(const JamStatus& jam);
Json status_reply(const ControlMessage& msg, bool ok, std::string_view error = {});
Json status_error(const ProtocolError& err);

std::string to_line(const Json& msg);

}  // namespace sonifw::protocol
