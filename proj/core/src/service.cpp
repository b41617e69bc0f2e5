#include "sonifw/service.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <thread>

#include "sonifw/errors.hpp"
#include "sonifw/scenario.hpp"
#include "sonifw/tcp_server.hpp"
#include "sonifw/wav.hpp"

namespace sonifw::service {

using protocol::Json;
using Clock = std::chrono::steady_clock;

InputSpec parse_input(const std::string& text) {
    InputSpec spec;
    if (text.rfind("sim:", 0) == 0) {
        spec.kind = InputSpec::Kind::live_sim;
        spec.path = text.substr(4);
    } else {
        spec.path = text;
    }
    if (spec.path.empty()) throw ConfigError("empty input path");
    return spec;
}

namespace {

class WavSource final : public SampleSource {
public:
    explicit WavSource(WavData data) : data_(std::move(data)) {}

    std::size_t read(std::span<double> out) override {
        const std::size_t n = std::min(out.size(), data_.samples.size() - pos_);
        std::copy_n(data_.samples.begin() + static_cast<std::ptrdiff_t>(pos_), n, out.begin());
        pos_ += n;
        return n;
    }
    int sample_rate_hz() const override { return data_.sample_rate_hz; }
    bool live() const override { return false; }

private:
    WavData data_;
    std::size_t pos_ = 0;
};

class SimSource final : public SampleSource {
public:
    explicit SimSource(const Scenario& scenario) : source_(scenario) {}

    std::size_t read(std::span<double> out) override { return source_.read(out); }
    int sample_rate_hz() const override { return source_.sample_rate_hz(); }
    bool live() const override { return true; }

private:
    ScenarioSource source_;
};

class WavOutput final : public AudioOutput {
public:
    WavOutput(const std::filesystem::path& path, int fs) : writer_(path, fs) {}
    void write(std::span<const double> samples) override { writer_.write(samples); }
    void close() override { writer_.close(); }

private:
    WavWriter writer_;
};

struct JamCommand {
    enum class Kind { start, stop, advance };
    Kind kind = Kind::advance;
    std::uint64_t sample = 0;
    std::optional<jam::JamPlan> plan;
    std::uint64_t seed = 0;
};

// Writes silence or jam noise so the output stays sample-aligned with the input.
void jam_worker(Channel<JamCommand>& commands, AudioOutput& out, int sample_rate_hz) {
    std::uint64_t produced = 0;
    std::optional<jam::JamGenerator> generator;
    std::vector<double> buf;
    auto produce_to = [&](std::uint64_t target) {
        while (produced < target) {
            const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(4096, target - produced));
            buf.assign(n, 0.0);
            if (generator) generator->generate_into(buf);
            out.write(buf);
            produced += n;
        }
    };
    while (auto cmd = commands.pop()) {
        produce_to(cmd->sample);
        switch (cmd->kind) {
            case JamCommand::Kind::start:
                generator.emplace(*cmd->plan, sample_rate_hz, cmd->seed);
                break;
            case JamCommand::Kind::stop:
                generator.reset();
                break;
            case JamCommand::Kind::advance:
                break;
        }
    }
    out.close();
}

}  // namespace

std::unique_ptr<SampleSource> open_source(const InputSpec& input) {
    if (input.kind == InputSpec::Kind::live_sim) {
        return std::make_unique<SimSource>(load_scenario(input.path));
    }
    return std::make_unique<WavSource>(read_wav(input.path));
}

std::unique_ptr<AudioOutput> make_wav_output(const std::filesystem::path& path, int sample_rate_hz) {
    return std::make_unique<WavOutput>(path, sample_rate_hz);
}

void ServiceConfig::validate() const {
    detector.validate();
    if (context_label.empty()) throw ConfigError("context label must not be empty");
    if (spectra_decimation < 1) throw ConfigError("spectra decimation must be >= 1");
    if (jammer.amplitude <= 0.0 || jammer.amplitude > jammer.safety_ceiling) {
        throw ConfigError("jam amplitude must lie in (0, safety ceiling]");
    }
    if (max_seconds && *max_seconds <= 0.0) throw ConfigError("max_seconds must be positive");
    if (listen_endpoint) net::parse_endpoint(*listen_endpoint);
}

class FirewallService::Session {
public:
    Session(FirewallService& svc)
        : svc_(svc),
          cfg_(svc.config_),
          source_(open_source(cfg_.input)),
          fs_(source_->sample_rate_hz()),
          pipeline_(cfg_.pipeline, fs_),
          detector_(cfg_.detector, cfg_.pipeline, fs_, cfg_.context_label),
          clock_{fs_, cfg_.pipeline.hop_size},
          mode_(cfg_.mode) {
        cfg_.pipeline.validate(fs_);
        if (cfg_.event_log_path) {
            log_.open(*cfg_.event_log_path, std::ios::trunc);
            if (!log_) throw IoError("cannot open event log " + cfg_.event_log_path->string());
        }
        if (cfg_.listen_endpoint) {
            const auto [host, port] = net::parse_endpoint(*cfg_.listen_endpoint);
            net::ServerCallbacks cb;
            cb.on_connect = [this](int c) { svc_.client_connected(c); };
            cb.on_line = [this](int c, std::string l) { svc_.post_control(c, std::move(l)); };
            cb.on_disconnect = [this](int c) { svc_.client_disconnected(c); };
            server_ = std::make_unique<net::TcpServer>(host, port, std::move(cb));
            svc_.bound_port_ = server_->port();
        }
        if (cfg_.jam_output_path) {
            output_ = make_wav_output(*cfg_.jam_output_path, fs_);
            jam_thread_ = std::thread([this] { jam_worker(jam_commands_, *output_, fs_); });
        }
        pacing_ = cfg_.pacing == Pacing::automatic
                      ? (source_->live() ? Pacing::realtime : Pacing::fast)
                      : cfg_.pacing;
    }

    ~Session() { shutdown(); }

    RunSummary run() {
        const auto wall_start = Clock::now();
        if (svc_.on_ready) svc_.on_ready();
        if (cfg_.wait_for_client) wait_for_client();

        emit(protocol::status_state("warming-up", mode_, cfg_.context_label, 0), false, -1, true);
        const std::size_t hop = cfg_.pipeline.hop_size;
        const auto max_samples = cfg_.max_seconds
                                     ? std::optional<std::uint64_t>(static_cast<std::uint64_t>(
                                           *cfg_.max_seconds * fs_))
                                     : std::nullopt;
        std::vector<double> block(hop);
        const auto pace_start = Clock::now();
        while (!svc_.stop_) {
            drain_inbound();
            std::size_t want = hop;
            if (max_samples) {
                if (samples_ >= *max_samples) break;
                want = static_cast<std::size_t>(std::min<std::uint64_t>(hop, *max_samples - samples_));
            }
            const std::size_t n = source_->read(std::span(block.data(), want));
            if (n == 0) break;
            if (pacing_ == Pacing::realtime) {
                const auto due = pace_start + std::chrono::duration_cast<Clock::duration>(
                                                  std::chrono::duration<double>(
                                                      static_cast<double>(samples_ + n) / fs_));
                std::this_thread::sleep_until(due);
            }
            samples_ += n;
            for (const auto& frame : pipeline_.push(std::span<const double>(block.data(), n))) {
                handle_frame(frame);
            }
            if (jam_thread_.joinable()) {
                jam_commands_.push({JamCommand::Kind::advance, samples_, std::nullopt, 0});
            }
        }
        drain_inbound();
        if (auto ev = detector_.finish()) close_event(*ev);
        stop_jam(samples_);
        emit(protocol::status_state("stopped", mode_, cfg_.context_label, pipeline_.frames_emitted()),
             false, -1, true);
        shutdown();

        summary_.frames = pipeline_.frames_emitted();
        summary_.samples = samples_;
        summary_.audio_seconds = static_cast<double>(samples_) / fs_;
        summary_.wall_seconds = std::chrono::duration<double>(Clock::now() - wall_start).count();
        return std::move(summary_);
    }

private:
    struct OpenEvent {
        detect::DetectionEvent event;
        policy::Decision decision = policy::Decision::ask;
    };

    void shutdown() {
        if (jam_thread_.joinable()) {
            jam_commands_.close();
            jam_thread_.join();
        }
        if (server_) {
            server_->stop();
            server_.reset();
        }
        if (log_.is_open()) log_.close();
    }

    void wait_for_client() {
        while (!svc_.stop_) {
            auto msg = svc_.inbound_.pop_for(std::chrono::milliseconds(100));
            if (!msg) continue;
            const bool connected = msg->kind == Inbound::Kind::connect;
            handle_inbound(std::move(*msg));
            if (connected) return;
        }
    }

    // client < 0 broadcasts.
    void emit(const Json& msg, bool droppable, int client = -1, bool log = false) {
        const std::string line = protocol::to_line(msg);
        if (log && log_.is_open()) {
            log_ << line;
            log_.flush();
        }
        for (auto* sink : svc_.sinks_) sink->deliver(client, line, droppable);
        if (server_) {
            if (client < 0) {
                server_->broadcast(line, droppable);
            } else {
                server_->send(client, line, droppable);
            }
        }
    }

    void drain_inbound() {
        while (auto msg = svc_.inbound_.try_pop()) handle_inbound(std::move(*msg));
    }

    void handle_inbound(Inbound msg) {
        switch (msg.kind) {
            case Inbound::Kind::connect:
                emit(protocol::status_state(detector_.status() == detect::DetectorStatus::monitoring
                                                ? "monitoring"
                                                : "warming-up",
                                            mode_, cfg_.context_label, pipeline_.frames_emitted()),
                     false, msg.client);
                if (open_) {
                    emit(protocol::event_open(open_->event, open_->decision, clock_), false, msg.client);
                }
                return;
            case Inbound::Kind::disconnect:
                subscribers_.erase(msg.client);
                return;
            case Inbound::Kind::control:
                break;
        }
        auto parsed = protocol::parse_control(msg.line);
        if (auto* err = std::get_if<protocol::ProtocolError>(&parsed)) {
            emit(protocol::status_error(*err), false, msg.client);
            return;
        }
        handle_control(std::get<protocol::ControlMessage>(parsed), msg.client);
    }

    void handle_control(const protocol::ControlMessage& msg, int client) {
        using protocol::ControlType;
        switch (msg.type) {
            case ControlType::subscribe_spectra:
                subscribers_.insert(client);
                emit(protocol::status_reply(msg, true), false, client);
                return;
            case ControlType::unsubscribe:
                subscribers_.erase(client);
                emit(protocol::status_reply(msg, true), false, client);
                return;
            case ControlType::set_mode:
                set_mode(msg.mode);
                emit(protocol::status_reply(msg, true), false, client);
                return;
            case ControlType::allow:
            case ControlType::block:
                break;
        }
        if (!open_ || open_->event.event_id != msg.event_id) {
            emit(protocol::status_reply(msg, false, "unknown-event"), false, client);
            return;
        }
        const auto decision =
            msg.type == ControlType::block ? policy::Decision::block : policy::Decision::allow;
        open_->decision = decision;
        Json record;
        record["v"] = protocol::kVersion;
        record["type"] = "decision";
        record["event_id"] = msg.event_id;
        record["context"] = cfg_.context_label;
        record["class"] = detect::to_string(open_->event.technology_class);
        record["decision"] = policy::to_string(decision);
        record["frame_index"] = pipeline_.frames_emitted();
        if (log_.is_open()) log_ << protocol::to_line(record);

        bool stored = true;
        try {
            svc_.store_->record_decision(cfg_.context_label, open_->event.technology_class, decision,
                                         msg.event_id);
        } catch (const StorageError&) {
            stored = false;
        }
        const std::uint64_t now = samples_;
        if (decision == policy::Decision::block) {
            if (mode_ != ServiceMode::monitor && !active_jam_) {
                start_jam(plan_for(open_->event), now);
            }
        } else if (active_jam_ && mode_ == ServiceMode::reactive_jam) {
            stop_jam(now);
        }
        emit(protocol::status_reply(msg, stored, stored ? "" : "storage-failure"), false, client);
    }

    void set_mode(ServiceMode mode) {
        mode_ = mode;
        if (mode == ServiceMode::monitor) {
            stop_jam(samples_);
        } else if (mode == ServiceMode::preventive_jam && open_ && !active_jam_ &&
                   open_->decision != policy::Decision::allow) {
            start_jam(plan_for(open_->event), samples_);
        }
    }

    jam::JamPlan plan_for(const detect::DetectionEvent& event) const {
        jam::JammerConfig jc = cfg_.jammer;
        jc.mode = mode_ == ServiceMode::preventive_jam ? jam::JamMode::preventive : jam::JamMode::reactive;
        return jam::plan_jam(event, jc);
    }

    void start_jam(const jam::JamPlan& plan, std::uint64_t at_sample) {
        stop_jam(at_sample);
        active_jam_ = summary_.jams.size();
        summary_.jams.push_back({plan, at_sample, std::nullopt});
        if (jam_thread_.joinable() && cfg_.jammer.strategy == jam::BlockStrategy::noise) {
            jam_commands_.push({JamCommand::Kind::start, at_sample, plan, cfg_.jam_seed + *active_jam_});
        }
        protocol::JamStatus st;
        st.active = true;
        st.event_id = plan.event_id;
        st.band_hz = plan.band_hz;
        st.mode = jam::to_string(plan.mode);
        st.strategy = jam::to_string(cfg_.jammer.strategy);
        st.amplitude = plan.amplitude;
        st.sample = at_sample;
        emit(protocol::status_jam(st), false, -1, true);
    }

    void stop_jam(std::uint64_t at_sample) {
        if (!active_jam_) return;
        auto& interval = summary_.jams[*active_jam_];
        interval.stop_sample = at_sample;
        active_jam_.reset();
        if (jam_thread_.joinable()) {
            jam_commands_.push({JamCommand::Kind::stop, at_sample, std::nullopt, 0});
        }
        protocol::JamStatus st;
        st.active = false;
        st.event_id = interval.plan.event_id;
        st.sample = at_sample;
        emit(protocol::status_jam(st), false, -1, true);
    }

    std::uint64_t frame_end_sample(std::int64_t frame_index) const {
        return static_cast<std::uint64_t>(frame_index) * cfg_.pipeline.hop_size + cfg_.pipeline.frame_size;
    }

    void handle_frame(const dsp::SpectralFrame& frame) {
        const auto outcome = detector_.process(frame);
        if (outcome.model_rebuilt && !announced_monitoring_) {
            announced_monitoring_ = true;
            emit(protocol::status_state("monitoring", mode_, cfg_.context_label, frame.frame_index),
                 false, -1, true);
        }
        if (!subscribers_.empty() && frame.frame_index % cfg_.spectra_decimation == 0) {
            const std::string line = protocol::to_line(protocol::spectra(frame));
            for (int client : subscribers_) {
                for (auto* sink : svc_.sinks_) sink->deliver(client, line, true);
                if (server_) server_->send(client, line, true);
            }
            ++summary_.spectra_sent;
        }
        switch (outcome.change) {
            case detect::EventChange::opened: open_event(*outcome.event); break;
            case detect::EventChange::updated:
                if (open_) {
                    open_->event = *outcome.event;
                    emit(protocol::event_update(open_->event, clock_), false, -1, true);
                }
                break;
            case detect::EventChange::closed: close_event(*outcome.event); break;
            case detect::EventChange::none: break;
        }
    }

    void open_event(const detect::DetectionEvent& event) {
        const auto decision = svc_.store_->lookup(cfg_.context_label, event.technology_class);
        open_ = OpenEvent{event, decision};
        emit(protocol::event_open(event, decision, clock_), false, -1, true);
        const auto at = frame_end_sample(event.onset_frame);
        if (mode_ == ServiceMode::preventive_jam && decision != policy::Decision::allow) {
            start_jam(plan_for(event), at);
        } else if (mode_ == ServiceMode::reactive_jam && decision == policy::Decision::block) {
            start_jam(plan_for(event), at);
        }
    }

    void close_event(const detect::DetectionEvent& event) {
        const auto decision = open_ ? open_->decision : policy::Decision::ask;
        open_.reset();
        emit(protocol::event_close(event, decision, clock_), false, -1, true);
        stop_jam(std::max(samples_, frame_end_sample(event.offset_frame.value_or(event.onset_frame))));
        summary_.events.push_back(event);

        policy::EventRecord rec;
        rec.event_id = event.event_id;
        rec.context_label = cfg_.context_label;
        rec.onset_seconds = clock_.seconds(event.onset_frame);
        rec.offset_seconds = clock_.seconds(event.offset_frame.value_or(event.onset_frame));
        rec.technology = event.technology_class;
        rec.band_hz = event.active_band_hz;
        rec.peak_score = event.peak_score;
        rec.decision = decision;
        try {
            svc_.store_->record_event(rec);
        } catch (const StorageError&) {
            // The event is still in memory and in the event log.
        }
    }

    FirewallService& svc_;
    const ServiceConfig& cfg_;
    std::unique_ptr<SampleSource> source_;
    int fs_;
    dsp::SpectralPipeline pipeline_;
    detect::Detector detector_;
    protocol::StreamClock clock_;
    ServiceMode mode_;
    Pacing pacing_ = Pacing::fast;
    std::ofstream log_;
    std::unique_ptr<AudioOutput> output_;
    Channel<JamCommand> jam_commands_;
    std::thread jam_thread_;
    std::unique_ptr<net::TcpServer> server_;
    std::set<int> subscribers_;
    std::optional<OpenEvent> open_;
    std::optional<std::size_t> active_jam_;
    bool announced_monitoring_ = false;
    std::uint64_t samples_ = 0;
    RunSummary summary_;
};

FirewallService::FirewallService(ServiceConfig config, std::shared_ptr<policy::PolicyStore> store)
    : config_(std::move(config)), store_(std::move(store)) {
    config_.validate();
    if (!store_) {
        store_ = std::make_shared<policy::PolicyStore>(config_.policy_path.value_or(std::filesystem::path{}));
    }
}

FirewallService::~FirewallService() = default;

RunSummary FirewallService::run() {
    stop_ = false;
    Session session(*this);
    return session.run();
}

void FirewallService::request_stop() {
    stop_ = true;
}

void FirewallService::post_control(int client, std::string line) {
    inbound_.push({Inbound::Kind::control, client, std::move(line)});
}

void FirewallService::client_connected(int client) {
    inbound_.push({Inbound::Kind::connect, client, {}});
}

void FirewallService::client_disconnected(int client) {
    inbound_.push({Inbound::Kind::disconnect, client, {}});
}

BenchResult bench(const std::filesystem::path& wav, const dsp::PipelineConfig& pipeline,
                  const detect::DetectorConfig& detector) {
    const auto start = Clock::now();
    const WavData data = read_wav(wav);
    dsp::SpectralPipeline front(pipeline, data.sample_rate_hz);
    detect::Detector det(detector, pipeline, data.sample_rate_hz, "bench");
    BenchResult r;
    const std::size_t hop = pipeline.hop_size;
    for (std::size_t pos = 0; pos < data.samples.size(); pos += hop) {
        const std::size_t n = std::min(hop, data.samples.size() - pos);
        for (const auto& frame : front.push(std::span(data.samples).subspan(pos, n))) {
            if (det.process(frame).change == detect::EventChange::opened) ++r.events;
        }
    }
    r.frames = front.frames_emitted();
    r.audio_seconds = data.duration_seconds();
    r.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return r;
}

}  // namespace sonifw::service
