#include "sonifw/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sonifw/errors.hpp"

namespace sonifw {

namespace {

constexpr double kClipLimit = 0.999;

std::vector<double> parse_list(std::string_view text) {
    std::vector<double> out;
    std::string item;
    std::istringstream in{std::string(text)};
    while (std::getline(in, item, ',')) out.push_back(std::stod(item));
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw ConfigError("expected on/off, got '" + v + "'");
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
    Scenario sc;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream words(line);
        std::string directive;
        if (!(words >> directive)) continue;
        auto fail = [&](const std::string& why) {
            throw ConfigError("scenario line " + std::to_string(line_no) + ": " + why);
        };
        try {
            if (directive == "sample_rate") {
                words >> sc.sample_rate_hz;
            } else if (directive == "duration") {
                double d = 0;
                words >> d;
                sc.duration_seconds = d;
            } else if (directive == "seed") {
                words >> sc.seed;
            } else if (directive == "ambience") {
                std::string kv;
                while (words >> kv) {
                    const auto eq = kv.find('=');
                    if (eq == std::string::npos) fail("expected key=value, got '" + kv + "'");
                    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
                    if (key == "level") sc.ambience.level_rms = std::stod(value);
                    else if (key == "music") sc.ambience.music = parse_bool(value);
                    else if (key == "bursts") sc.ambience.bursts = parse_bool(value);
                    else if (key == "burst_gain") sc.ambience.burst_gain = std::stod(value);
                    else if (key == "burst_interval") sc.ambience.mean_burst_interval_s = std::stod(value);
                    else if (key == "lowpass") sc.ambience.lowpass_hz = std::stod(value);
                    else if (key == "noise_floor") sc.ambience.noise_floor_rms = std::stod(value);
                    else fail("unknown ambience key '" + key + "'");
                }
            } else if (directive == "at") {
                ScheduledTransmission tx;
                std::string kind;
                if (!(words >> tx.start_seconds >> kind)) fail("expected 'at <seconds> <scheme>'");
                const auto parsed = modem::parse_scheme(kind);
                if (!parsed) fail("unknown scheme '" + kind + "'");
                switch (*parsed) {
                    case modem::SchemeKind::fsk: tx.scheme = modem::ModemScheme::fsk(); break;
                    case modem::SchemeKind::psk: tx.scheme = modem::ModemScheme::psk(); break;
                    case modem::SchemeKind::multicarrier:
                        tx.scheme = modem::ModemScheme::multicarrier();
                        break;
                }
                std::string kv;
                while (words >> kv) {
                    const auto eq = kv.find('=');
                    if (eq == std::string::npos) fail("expected key=value, got '" + kv + "'");
                    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
                    if (key == "payload") tx.payload = modem::parse_hex(value);
                    else if (key == "tones" || key == "carrier" || key == "carriers")
                        tx.scheme.tones_hz = parse_list(value);
                    else if (key == "baud") tx.scheme.symbol_rate_baud = std::stod(value);
                    else if (key == "gain_db") tx.gain_db = std::stod(value);
                    else fail("unknown transmission key '" + key + "'");
                }
                sc.schedule.push_back(std::move(tx));
            } else {
                fail("unknown directive '" + directive + "'");
            }
        } catch (const std::invalid_argument&) {
            fail("malformed number");
        } catch (const std::out_of_range&) {
            fail("number out of range");
        }
        if (words.fail() && !words.eof()) fail("malformed value");
    }
    if (sc.sample_rate_hz != 44100 && sc.sample_rate_hz != 48000) {
        throw ConfigError("scenario sample_rate must be 44100 or 48000");
    }
    sc.ambience.sample_rate_hz = sc.sample_rate_hz;
    sc.ambience.seed = sc.seed;
    for (auto& tx : sc.schedule) tx.scheme.validate(sc.sample_rate_hz);
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

ScenarioSource::ScenarioSource(const Scenario& scenario)
    : scenario_(scenario), ambience_(scenario.ambience) {
    const double fs = scenario.sample_rate_hz;
    if (scenario.duration_seconds) {
        total_samples_ = static_cast<std::uint64_t>(std::llround(*scenario.duration_seconds * fs));
    }
    const double target_rms = ambience_.nominal_rms();
    for (const auto& tx : scenario.schedule) {
        auto scheme = tx.scheme;
        scheme.amplitude = 1.0;
        Playback p;
        p.start_sample = static_cast<std::uint64_t>(std::llround(tx.start_seconds * fs));
        p.samples = modem::encode(tx.payload, scheme, scenario.sample_rate_hz);
        const double gain = target_rms * std::pow(10.0, tx.gain_db / 20.0) / rms(p.samples);
        for (double& s : p.samples) s *= gain;
        truth_.push_back({tx.start_seconds,
                          tx.start_seconds + static_cast<double>(p.samples.size()) / fs,
                          tx.scheme.kind});
        playbacks_.push_back(std::move(p));
    }
}

bool ScenarioSource::finished() const {
    return total_samples_ && position_ >= *total_samples_;
}

std::size_t ScenarioSource::read(std::span<double> out) {
    std::size_t n = out.size();
    if (total_samples_) {
        n = static_cast<std::size_t>(std::min<std::uint64_t>(n, *total_samples_ - std::min(position_, *total_samples_)));
    }
    if (n == 0) return 0;
    auto block = out.first(n);
    ambience_.generate_into(block);
    const std::uint64_t begin = position_;
    const std::uint64_t end = position_ + n;
    for (const auto& p : playbacks_) {
        const std::uint64_t p_end = p.start_sample + p.samples.size();
        const std::uint64_t lo = std::max(begin, p.start_sample);
        const std::uint64_t hi = std::min(end, p_end);
        for (std::uint64_t i = lo; i < hi; ++i) block[i - begin] += p.samples[i - p.start_sample];
    }
    for (double& s : block) s = std::clamp(s, -kClipLimit, kClipLimit);
    position_ = end;
    return n;
}

std::vector<double> render_scenario(const Scenario& scenario) {
    if (!scenario.duration_seconds) throw ConfigError("cannot render a scenario without a duration");
    ScenarioSource source(scenario);
    std::vector<double> out(static_cast<std::size_t>(
        std::llround(*scenario.duration_seconds * scenario.sample_rate_hz)));
    std::size_t filled = 0;
    while (filled < out.size()) {
        const std::size_t n = source.read(std::span<double>(out).subspan(filled));
        if (n == 0) break;
        filled += n;
    }
    return out;
}

}  // namespace sonifw
