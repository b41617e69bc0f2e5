#include <csignal>
#include <cstdio>
#include <iostream>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "sonifw/errors.hpp"
#include "sonifw/modem.hpp"
#include "sonifw/policy_store.hpp"
#include "sonifw/scenario.hpp"
#include "sonifw/service.hpp"
#include "sonifw/wav.hpp"

namespace {

sonifw::service::FirewallService* g_running = nullptr;

void on_signal(int) {
    if (g_running) g_running->request_stop();
}

std::vector<double> parse_tones(const std::string& text) {
    std::vector<double> tones;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        tones.push_back(std::stod(text.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return tones;
}

struct RunOptions {
    std::string input;
    std::string mode = "monitor";
    std::string context = "default";
    double threshold = 0.5;
    std::string listen;
    std::string log;
    std::string policy;
    std::string jam_out;
    std::string strategy = "noise";
    std::string pace = "auto";
    double jam_amplitude = 0.5;
    int decimation = 4;
    double max_seconds = 0.0;
    bool wait_client = false;
    std::uint64_t seed = 1;
};

int do_run(const RunOptions& o) {
    using namespace sonifw;
    service::ServiceConfig cfg;
    cfg.input = service::parse_input(o.input);
    const auto mode = protocol::parse_mode(o.mode);
    if (!mode) throw ConfigError("unknown mode " + o.mode);
    cfg.mode = *mode;
    cfg.context_label = o.context;
    cfg.detector.threshold_t = o.threshold;
    if (!o.listen.empty()) cfg.listen_endpoint = o.listen;
    if (!o.log.empty()) cfg.event_log_path = o.log;
    if (!o.policy.empty()) cfg.policy_path = o.policy;
    if (!o.jam_out.empty()) cfg.jam_output_path = o.jam_out;
    const auto strategy = jam::parse_strategy(o.strategy);
    if (!strategy) throw ConfigError("unknown block strategy " + o.strategy);
    cfg.jammer.strategy = *strategy;
    cfg.jammer.amplitude = o.jam_amplitude;
    cfg.spectra_decimation = o.decimation;
    if (o.pace == "realtime") cfg.pacing = service::Pacing::realtime;
    else if (o.pace == "fast") cfg.pacing = service::Pacing::fast;
    if (o.max_seconds > 0) cfg.max_seconds = o.max_seconds;
    cfg.wait_for_client = o.wait_client;
    cfg.jam_seed = o.seed;

    service::FirewallService svc(cfg);
    svc.on_ready = [&] {
        if (cfg.listen_endpoint) {
            std::cerr << "listening on port " << svc.bound_port() << std::endl;
        }
    };
    g_running = &svc;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const auto summary = svc.run();
    g_running = nullptr;

    std::printf("frames=%lld events=%zu jams=%zu audio_s=%.3f wall_s=%.3f\n",
                static_cast<long long>(summary.frames), summary.events.size(), summary.jams.size(),
                summary.audio_seconds, summary.wall_seconds);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sonifw: ultrasonic side-channel firewall"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Monitor a WAV file or simulated live stream");
    run_cmd->add_option("--input", run.input, "WAV path or sim:<scenario file>")->required();
    run_cmd->add_option("--mode", run.mode, "monitor | reactive-jam | preventive-jam")
        ->check(CLI::IsMember({"monitor", "reactive-jam", "preventive-jam"}));
    run_cmd->add_option("--context", run.context, "Location label for stored decisions");
    run_cmd->add_option("--threshold", run.threshold, "Divergence threshold t")
        ->check(CLI::Range(0.0, 1.0));
    run_cmd->add_option("--listen", run.listen, "host:port for dashboard clients");
    run_cmd->add_option("--log", run.log, "Event log output (JSON lines)");
    run_cmd->add_option("--policy", run.policy, "Policy store file");
    run_cmd->add_option("--jam-out", run.jam_out, "Write jam audio to this WAV");
    run_cmd->add_option("--strategy", run.strategy, "Block strategy: noise | mute")
        ->check(CLI::IsMember({"noise", "mute"}));
    run_cmd->add_option("--jam-amplitude", run.jam_amplitude, "Jam amplitude (<= 0.8)");
    run_cmd->add_option("--spectra-every", run.decimation, "Send every k-th spectrum to subscribers")
        ->check(CLI::PositiveNumber);
    run_cmd->add_option("--pace", run.pace, "auto | realtime | fast")
        ->check(CLI::IsMember({"auto", "realtime", "fast"}));
    run_cmd->add_option("--max-seconds", run.max_seconds, "Stop after this much audio");
    run_cmd->add_flag("--wait-client", run.wait_client, "Hold processing until a client connects");
    run_cmd->add_option("--seed", run.seed, "Jam noise seed");

    std::string scheme = "fsk", payload_hex, out_path, tones;
    int fs = 44100;
    double amplitude = 0.5, baud = 20.0, lead = 0.0;
    auto* enc = app.add_subcommand("encode", "Write a modem transmission to a WAV file");
    enc->add_option("--scheme", scheme, "fsk | psk | multicarrier")
        ->check(CLI::IsMember({"fsk", "psk", "multicarrier"}));
    enc->add_option("--payload", payload_hex, "Payload bytes as hex")->required();
    enc->add_option("--out", out_path, "Output WAV")->required();
    enc->add_option("--fs", fs, "Sample rate")->check(CLI::IsMember({44100, 48000}));
    enc->add_option("--amplitude", amplitude, "Peak amplitude");
    enc->add_option("--tones", tones, "Comma-separated tone/carrier frequencies in Hz");
    enc->add_option("--baud", baud, "Symbol rate");
    enc->add_option("--lead", lead, "Seconds of silence before and after");

    std::string bench_path;
    auto* bench_cmd = app.add_subcommand("bench", "Report the real-time factor on a WAV file");
    bench_cmd->add_option("wav", bench_path, "Input WAV")->required();

    std::string scenario_path, render_out;
    auto* render = app.add_subcommand("render", "Render a finite scenario to WAV");
    render->add_option("scenario", scenario_path, "Scenario file")->required();
    render->add_option("--out", render_out, "Output WAV")->required();

    std::string policy_path, context, tech = "*", decision;
    auto* pol = app.add_subcommand("policy", "Record an allow/block decision offline");
    pol->add_option("--policy", policy_path, "Policy store file")->required();
    pol->add_option("--context", context, "Context label")->required();
    pol->add_option("--class", tech, "Technology class, or * for the whole context");
    pol->add_option("decision", decision, "allow | block")
        ->required()
        ->check(CLI::IsMember({"allow", "block"}));

    std::string export_path;
    std::int64_t from_ms = std::numeric_limits<std::int64_t>::min();
    std::int64_t to_ms = std::numeric_limits<std::int64_t>::max();
    auto* exp = app.add_subcommand("export", "Print stored events and decisions as JSON lines");
    exp->add_option("--policy", export_path, "Policy store file")->required();
    exp->add_option("--from", from_ms, "Start, ms since epoch");
    exp->add_option("--to", to_ms, "End, ms since epoch");

    CLI11_PARSE(app, argc, argv);

    using namespace sonifw;
    try {
        if (*run_cmd) return do_run(run);

        if (*enc) {
            modem::ModemScheme s;
            if (scheme == "fsk") s = modem::ModemScheme::fsk();
            else if (scheme == "psk") s = modem::ModemScheme::psk();
            else s = modem::ModemScheme::multicarrier();
            if (!tones.empty()) s.tones_hz = parse_tones(tones);
            s.amplitude = amplitude;
            s.symbol_rate_baud = baud;
            s.validate(fs);
            const auto payload = modem::parse_hex(payload_hex);
            auto wave = modem::encode(payload, s, fs);
            const auto pad = static_cast<std::size_t>(lead * fs);
            std::vector<double> out(pad, 0.0);
            out.insert(out.end(), wave.begin(), wave.end());
            out.insert(out.end(), pad, 0.0);
            write_wav(out_path, out, fs);
            std::printf("%zu samples (%.3f s)\n", out.size(), static_cast<double>(out.size()) / fs);
            return 0;
        }

        if (*bench_cmd) {
            const auto r = service::bench(bench_path);
            std::printf("audio_s=%.3f wall_s=%.3f rtf=%.4f frames=%lld events=%zu\n", r.audio_seconds,
                        r.wall_seconds, r.real_time_factor(), static_cast<long long>(r.frames), r.events);
            return 0;
        }

        if (*render) {
            const auto sc = load_scenario(scenario_path);
            write_wav(render_out, render_scenario(sc), sc.sample_rate_hz);
            return 0;
        }

        if (*pol) {
            policy::PolicyStore store(policy_path);
            std::optional<detect::TechnologyClass> cls;
            if (tech != "*") {
                cls = detect::parse_technology(tech);
                if (!cls) throw ConfigError("unknown technology class " + tech);
            }
            store.record_decision(context, cls, *policy::parse_decision(decision), "");
            return 0;
        }

        if (*exp) {
            const policy::PolicyStore store(export_path);
            std::cout << store.export_log(from_ms, to_ms).to_jsonl();
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "sonifw: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "sonifw: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "sonifw: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
