#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sonifw/channel.hpp"
#include "sonifw/detector.hpp"
#include "sonifw/dsp.hpp"
#include "sonifw/jammer.hpp"
#include "sonifw/policy_store.hpp"
#include "sonifw/protocol.hpp"

namespace sonifw::service {

using protocol::ServiceMode;

struct InputSpec {
    enum class Kind { wav, live_sim };
    Kind kind = Kind::wav;
    std::filesystem::path path;
};

// "sim:<scenario file>" selects the live simulator, anything else is a WAV path.
InputSpec parse_input(const std::string& text);

// Mono sample stream feeding the pipeline.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    // Returns the number of samples written; 0 means end of stream.
    virtual std::size_t read(std::span<double> out) = 0;
    virtual int sample_rate_hz() const = 0;
    // Live sources are paced to the wall clock unless pacing is disabled.
    virtual bool live() const = 0;
};

// Throws IoError/ConfigError when the input cannot be opened.
std::unique_ptr<SampleSource> open_source(const InputSpec& input);

// Speaker stand-in. Jam audio goes here instead of a device.
class AudioOutput {
public:
    virtual ~AudioOutput() = default;
    virtual void write(std::span<const double> samples) = 0;
    virtual void close() {}
};

std::unique_ptr<AudioOutput> make_wav_output(const std::filesystem::path& path, int sample_rate_hz);

enum class Pacing { automatic, realtime, fast };

struct ServiceConfig {
    InputSpec input;
    std::string context_label = "default";
    ServiceMode mode = ServiceMode::monitor;
    dsp::PipelineConfig pipeline;
    detect::DetectorConfig detector;
    jam::JammerConfig jammer;
    std::optional<std::string> listen_endpoint;  // "host:port"; nullopt runs headless
    int spectra_decimation = 4;
    std::optional<std::filesystem::path> event_log_path;
    std::optional<std::filesystem::path> policy_path;
    std::optional<std::filesystem::path> jam_output_path;
    Pacing pacing = Pacing::automatic;  // realtime for live-sim, fast for files
    bool wait_for_client = false;
    std::optional<double> max_seconds;
    std::uint64_t jam_seed = 1;

    // Throws ConfigError.
    void validate() const;
};

struct JamInterval {
    jam::JamPlan plan;
    std::uint64_t start_sample = 0;
    std::optional<std::uint64_t> stop_sample;
};

struct RunSummary {
    std::int64_t frames = 0;
    std::uint64_t samples = 0;
    double audio_seconds = 0.0;
    double wall_seconds = 0.0;
    std::vector<detect::DetectionEvent> events;  // closed events in order
    std::vector<JamInterval> jams;
    std::uint64_t spectra_sent = 0;
};

// Receives every outbound message. client < 0 means all clients.
class MessageSink {
public:
    virtual ~MessageSink() = default;
    virtual void deliver(int client, const std::string& line, bool droppable) = 0;
};

// Ingestion, detection, policy and jamming for one stream. run() does the
// detection work on the calling thread; jam synthesis and client I/O each
// run on their own thread and are fed through queues.
class FirewallService {
public:
    // The store is opened from config.policy_path unless one is passed in.
    explicit FirewallService(ServiceConfig config, std::shared_ptr<policy::PolicyStore> store = {});
    ~FirewallService();
    FirewallService(const FirewallService&) = delete;
    FirewallService& operator=(const FirewallService&) = delete;

    RunSummary run();
    void request_stop();

    // Thread-safe entry points, drained by run() before each hop.
    void post_control(int client, std::string line);
    void client_connected(int client);
    void client_disconnected(int client);

    // Extra in-process receiver (tests, embedding). Must outlive run().
    void attach_sink(MessageSink* sink) { sinks_.push_back(sink); }

    // Port bound for listen_endpoint, once run() has started listening.
    std::uint16_t bound_port() const { return bound_port_.load(); }
    // Fired from run() once the listener is up (or immediately when headless).
    std::function<void()> on_ready;

    policy::PolicyStore& store() { return *store_; }
    const ServiceConfig& config() const { return config_; }

private:
    struct Inbound {
        enum class Kind { control, connect, disconnect };
        Kind kind = Kind::control;
        int client = 0;
        std::string line;
    };

    class Session;

    ServiceConfig config_;
    std::shared_ptr<policy::PolicyStore> store_;
    Channel<Inbound> inbound_;
    std::vector<MessageSink*> sinks_;
    std::atomic<bool> stop_{false};
    std::atomic<std::uint16_t> bound_port_{0};
};

struct BenchResult {
    double audio_seconds = 0.0;
    double wall_seconds = 0.0;
    std::int64_t frames = 0;
    std::size_t events = 0;

    double real_time_factor() const { return audio_seconds > 0 ? wall_seconds / audio_seconds : 0.0; }
};

// Monitor-mode pass over a WAV file with no outputs, timed end to end
// including the file read.
BenchResult bench(const std::filesystem::path& wav, const dsp::PipelineConfig& pipeline = {},
                  const detect::DetectorConfig& detector = {});

}  // namespace sonifw::service
