#include "sonifw/protocol.hpp"

#include <algorithm>
#include <cmath>

namespace sonifw::protocol {

std::string_view to_string(ServiceMode mode) {
    switch (mode) {
        case ServiceMode::monitor: return "monitor";
        case ServiceMode::reactive_jam: return "reactive-jam";
        case ServiceMode::preventive_jam: return "preventive-jam";
    }
    return "monitor";
}

std::optional<ServiceMode> parse_mode(std::string_view text) {
    if (text == "monitor") return ServiceMode::monitor;
    if (text == "reactive-jam") return ServiceMode::reactive_jam;
    if (text == "preventive-jam") return ServiceMode::preventive_jam;
    return std::nullopt;
}

std::string_view to_string(ControlType type) {
    switch (type) {
        case ControlType::allow: return "allow";
        case ControlType::block: return "block";
        case ControlType::set_mode: return "set_mode";
        case ControlType::subscribe_spectra: return "subscribe_spectra";
        case ControlType::unsubscribe: return "unsubscribe";
    }
    return "unsubscribe";
}

std::variant<ControlMessage, ProtocolError> parse_control(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
    const auto j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return ProtocolError{"bad-json", "not a JSON object"};
    const auto v = j.find("v");
    if (v == j.end() || !v->is_number_integer() || v->get<int>() != kVersion) {
        return ProtocolError{"bad-version", "expected \"v\":1"};
    }
    const auto type = j.find("type");
    if (type == j.end() || !type->is_string()) return ProtocolError{"unknown-type", "missing type"};
    const auto t = type->get<std::string>();

    ControlMessage msg;
    if (t == "allow" || t == "block") {
        msg.type = t == "allow" ? ControlType::allow : ControlType::block;
        const auto id = j.find("event_id");
        if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) {
            return ProtocolError{"bad-field", "event_id must be a non-empty string"};
        }
        msg.event_id = id->get<std::string>();
    } else if (t == "set_mode") {
        msg.type = ControlType::set_mode;
        const auto m = j.find("mode");
        if (m == j.end() || !m->is_string()) return ProtocolError{"bad-field", "mode must be a string"};
        const auto mode = parse_mode(m->get<std::string>());
        if (!mode) return ProtocolError{"bad-field", "unknown mode " + m->get<std::string>()};
        msg.mode = *mode;
    } else if (t == "subscribe_spectra") {
        msg.type = ControlType::subscribe_spectra;
    } else if (t == "unsubscribe") {
        msg.type = ControlType::unsubscribe;
    } else {
        return ProtocolError{"unknown-type", t};
    }
    return msg;
}

std::string serialize(const ControlMessage& msg) {
    Json j;
    j["v"] = kVersion;
    j["type"] = to_string(msg.type);
    if (msg.type == ControlType::allow || msg.type == ControlType::block) j["event_id"] = msg.event_id;
    if (msg.type == ControlType::set_mode) j["mode"] = to_string(msg.mode);
    return j.dump();
}

double round6(double value) {
    return std::round(value * 1e6) / 1e6;
}

namespace {

Json band_json(const FrequencyBand& band) {
    return Json::array({round6(band.low_hz), round6(band.high_hz)});
}

Json event_base(std::string_view type, const detect::DetectionEvent& e, const StreamClock& clock) {
    Json j;
    j["v"] = kVersion;
    j["type"] = type;
    j["event_id"] = e.event_id;
    j["onset_frame"] = e.onset_frame;
    j["onset_s"] = round6(clock.seconds(e.onset_frame));
    j["band_hz"] = band_json(e.active_band_hz);
    j["class"] = detect::to_string(e.technology_class);
    j["score"] = round6(e.last_score);
    j["peak_score"] = round6(e.peak_score);
    return j;
}

}  // namespace

Json event_open(const detect::DetectionEvent& event, policy::Decision decision,
                const StreamClock& clock) {
    Json j = event_base("event_open", event, clock);
    j["decision"] = policy::to_string(decision);
    j["pending"] = decision == policy::Decision::ask;
    return j;
}

Json event_update(const detect::DetectionEvent& event, const StreamClock& clock) {
    return event_base("event_update", event, clock);
}

Json event_close(const detect::DetectionEvent& event, policy::Decision decision,
                 const StreamClock& clock) {
    Json j = event_base("event_close", event, clock);
    const auto offset = event.offset_frame.value_or(event.onset_frame);
    j["offset_frame"] = offset;
    j["offset_s"] = round6(clock.seconds(offset));
    j["decision"] = policy::to_string(decision);
    return j;
}

std::vector<std::uint8_t> quantize_log8(std::span<const double> bins, const SpectraScale& scale) {
    std::vector<std::uint8_t> out;
    out.reserve(bins.size());
    const double span = scale.max_log10 - scale.min_log10;
    for (double p : bins) {
        const double l = p > 0.0 ? std::log10(p) : scale.min_log10;
        const double q = std::round(255.0 * (l - scale.min_log10) / span);
        out.push_back(static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0)));
    }
    return out;
}

std::vector<double> dequantize_log8(std::span<const std::uint8_t> levels, const SpectraScale& scale) {
    std::vector<double> out;
    out.reserve(levels.size());
    const double span = scale.max_log10 - scale.min_log10;
    for (auto q : levels) out.push_back(std::pow(10.0, scale.min_log10 + span * q / 255.0));
    return out;
}

Json spectra(const dsp::SpectralFrame& frame, const SpectraScale& scale) {
    Json j;
    j["v"] = kVersion;
    j["type"] = "spectra";
    j["frame_index"] = frame.frame_index;
    j["band_hz"] = Json::array({round6(frame.bin_freq_low_hz), round6(frame.bin_freq_high_hz)});
    j["scale"] = Json::array({scale.min_log10, scale.max_log10});
    j["bins"] = quantize_log8(frame.bins, scale);
    return j;
}

Json status_state(std::string_view state, ServiceMode mode, std::string_view context,
                  std::int64_t frame_index) {
    Json j;
    j["v"] = kVersion;
    j["type"] = "status";
    j["state"] = state;
    j["mode"] = to_string(mode);
    j["context"] = context;
    j["frame_index"] = frame_index;
    return j;
}

Json status_jam(const JamStatus& jam) {
    Json j;
    j["v"] = kVersion;
    j["type"] = "status";
    Json body;
    body["active"] = jam.active;
    body["event_id"] = jam.event_id;
    if (jam.active) {
        body["band_hz"] = band_json(jam.band_hz);
        body["mode"] = jam.mode;
        body["strategy"] = jam.strategy;
        body["amplitude"] = round6(jam.amplitude);
    }
    body["sample"] = jam.sample;
    j["jam"] = std::move(body);
    return j;
}

Json status_reply(const ControlMessage& msg, bool ok, std::string_view error) {
    Json j;
    j["v"] = kVersion;
    j["type"] = "status";
    j["reply_to"] = to_string(msg.type);
    if (msg.type == ControlType::allow || msg.type == ControlType::block) j["event_id"] = msg.event_id;
    if (msg.type == ControlType::set_mode) j["mode"] = to_string(msg.mode);
    j["ok"] = ok;
    if (!ok) j["error"] = error;
    return j;
}

Json status_error(const ProtocolError& err) {
    Json j;
    j["v"] = kVersion;
    j["type"] = "status";
    j["reply_to"] = nullptr;
    j["ok"] = false;
    j["error"] = err.code;
    j["detail"] = err.detail;
    return j;
}

std::string to_line(const Json& msg) {
    return msg.dump() + '\n';
}

}  // namespace sonifw::protocol
