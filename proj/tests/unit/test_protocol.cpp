#include <gtest/gtest.h>

#include <cmath>

#include "sonifw/protocol.hpp"

using namespace sonifw;
using namespace sonifw::protocol;

namespace {

detect::DetectionEvent sample_event() {
    detect::DetectionEvent e;
    e.event_id = "cb53e764f0f95819";
    e.onset_frame = 525;
    e.peak_score = 0.8812381;
    e.last_score = 0.6091094;
    e.active_band_hz = {18352.7490234375, 19136.5576171875};
    e.technology_class = detect::TechnologyClass::narrowband_fsk_like;
    return e;
}

}  // namespace

TEST(Protocol, ParseControlMessages) {
    auto m = std::get<ControlMessage>(parse_control(R"({"v":1,"type":"block","event_id":"abc"})"));
    EXPECT_EQ(m.type, ControlType::block);
    EXPECT_EQ(m.event_id, "abc");
    m = std::get<ControlMessage>(parse_control(R"({"type":"allow","v":1,"event_id":"x"})" "\r\n"));
    EXPECT_EQ(m.type, ControlType::allow);
    m = std::get<ControlMessage>(parse_control(R"({"v":1,"type":"set_mode","mode":"preventive-jam"})"));
    EXPECT_EQ(m.mode, ServiceMode::preventive_jam);
    m = std::get<ControlMessage>(parse_control(R"({"v":1,"type":"subscribe_spectra"})"));
    EXPECT_EQ(m.type, ControlType::subscribe_spectra);
    m = std::get<ControlMessage>(parse_control(R"({"v":1,"type":"unsubscribe"})"));
    EXPECT_EQ(m.type, ControlType::unsubscribe);
}

TEST(Protocol, ParseErrors) {
    auto code = [](std::string_view line) { return std::get<ProtocolError>(parse_control(line)).code; };
    EXPECT_EQ(code("not json"), "bad-json");
    EXPECT_EQ(code("[1,2]"), "bad-json");
    EXPECT_EQ(code(R"({"type":"block","event_id":"a"})"), "bad-version");
    EXPECT_EQ(code(R"({"v":2,"type":"block","event_id":"a"})"), "bad-version");
    EXPECT_EQ(code(R"({"v":1,"type":"reboot"})"), "unknown-type");
    EXPECT_EQ(code(R"({"v":1})"), "unknown-type");
    EXPECT_EQ(code(R"({"v":1,"type":"block"})"), "bad-field");
    EXPECT_EQ(code(R"({"v":1,"type":"block","event_id":""})"), "bad-field");
    EXPECT_EQ(code(R"({"v":1,"type":"set_mode","mode":"loud"})"), "bad-field");
}

TEST(Protocol, SerializeRoundTrip) {
    for (const auto& m : {ControlMessage{ControlType::block, "e1", {}}, ControlMessage{ControlType::allow, "e2", {}},
                          ControlMessage{ControlType::set_mode, "", ServiceMode::reactive_jam},
                          ControlMessage{ControlType::subscribe_spectra, "", {}},
                          ControlMessage{ControlType::unsubscribe, "", {}}}) {
        const auto back = std::get<ControlMessage>(parse_control(serialize(m)));
        EXPECT_EQ(back.type, m.type);
        EXPECT_EQ(back.event_id, m.event_id);
        if (m.type == ControlType::set_mode) EXPECT_EQ(back.mode, m.mode);
    }
    EXPECT_EQ(serialize({ControlType::block, "e1", {}}), R"({"v":1,"type":"block","event_id":"e1"})");
}

TEST(Protocol, EventMessageLayout) {
    const StreamClock clock{44100, 1024};
    auto e = sample_event();
    EXPECT_EQ(event_open(e, policy::Decision::ask, clock).dump(),
              R"({"v":1,"type":"event_open","event_id":"cb53e764f0f95819","onset_frame":525,"onset_s":12.190476,)"
              R"("band_hz":[18352.749023,19136.557617],"class":"narrowband-fsk-like","score":0.609109,)"
              R"("peak_score":0.881238,"decision":"ask","pending":true})");
    EXPECT_EQ(event_update(e, clock).dump(),
              R"({"v":1,"type":"event_update","event_id":"cb53e764f0f95819","onset_frame":525,"onset_s":12.190476,)"
              R"("band_hz":[18352.749023,19136.557617],"class":"narrowband-fsk-like","score":0.609109,)"
              R"("peak_score":0.881238})");
    e.offset_frame = 676;
    EXPECT_EQ(event_close(e, policy::Decision::block, clock).dump(),
              R"({"v":1,"type":"event_close","event_id":"cb53e764f0f95819","onset_frame":525,"onset_s":12.190476,)"
              R"("band_hz":[18352.749023,19136.557617],"class":"narrowband-fsk-like","score":0.609109,)"
              R"("peak_score":0.881238,"offset_frame":676,"offset_s":15.696689,"decision":"block"})");
}

TEST(Protocol, StatusLayouts) {
    EXPECT_EQ(status_state("monitoring", ServiceMode::reactive_jam, "office", 430).dump(),
              R"({"v":1,"type":"status","state":"monitoring","mode":"reactive-jam","context":"office","frame_index":430})");
    JamStatus j;
    j.active = true;
    j.event_id = "e1";
    j.band_hz = {18200, 19300};
    j.mode = "reactive";
    j.strategy = "noise";
    j.amplitude = 0.5;
    j.sample = 539648;
    EXPECT_EQ(status_jam(j).dump(),
              R"({"v":1,"type":"status","jam":{"active":true,"event_id":"e1","band_hz":[18200.0,19300.0],)"
              R"("mode":"reactive","strategy":"noise","amplitude":0.5,"sample":539648}})");
    EXPECT_EQ(status_reply({ControlType::block, "zz", {}}, false, "unknown-event").dump(),
              R"({"v":1,"type":"status","reply_to":"block","event_id":"zz","ok":false,"error":"unknown-event"})");
    EXPECT_EQ(status_error({"bad-json", "not a JSON object"}).dump(),
              R"({"v":1,"type":"status","reply_to":null,"ok":false,"error":"bad-json","detail":"not a JSON object"})");
}

TEST(Protocol, LogQuantizationEndpointsAndMonotone) {
    const std::vector<double> v{1e-9, 1e-6, 1e-3, 1.0, 2.0, 0.0};
    const auto q = quantize_log8(v);
    EXPECT_EQ(q, (std::vector<std::uint8_t>{0, 0, 128, 255, 255, 0}));
    double prev = -1;
    for (double p = 1e-6; p <= 1.0; p *= 1.1) {
        const auto level = quantize_log8(std::vector<double>{p})[0];
        EXPECT_GE(level, prev);
        prev = level;
        // Dequantized value within half a step (6 decades / 255 levels) in log10.
        const double back = dequantize_log8(std::vector<std::uint8_t>{level})[0];
        EXPECT_LE(std::abs(std::log10(back) - std::log10(p)), 0.5 * 6.0 / 255 + 1e-12);
    }
}

TEST(Protocol, SpectraMessage) {
    dsp::SpectralFrame f;
    f.frame_index = 8;
    f.bin_freq_low_hz = 18002.197265625;
    f.bin_freq_high_hz = 21985.83984375;
    f.bins = {1e-6, 1.0, 1e-3};
    EXPECT_EQ(spectra(f).dump(),
              R"({"v":1,"type":"spectra","frame_index":8,"band_hz":[18002.197266,21985.839844],)"
              R"("scale":[-6.0,0.0],"bins":[0,255,128]})");
}

TEST(Protocol, ModeStrings) {
    for (auto m : {ServiceMode::monitor, ServiceMode::reactive_jam, ServiceMode::preventive_jam}) {
        EXPECT_EQ(parse_mode(to_string(m)), m);
    }
    EXPECT_FALSE(parse_mode("reactive_jam"));
}
