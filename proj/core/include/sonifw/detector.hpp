#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sonifw/audio.hpp"
#include "sonifw/dsp.hpp"
#include "sonifw/running_median.hpp"

namespace sonifw::detect {

enum class TechnologyClass { narrowband_fsk_like, narrowband_psk_like, broadband, unknown };

std::string_view to_string(TechnologyClass cls);
std::optional<TechnologyClass> parse_technology(std::string_view text);

struct DetectorConfig {
    double threshold_t = 0.5;
    double buffer_seconds = 10.0;
    int debounce_window_frames = 11;
    int min_event_frames = 5;
    bool background_freeze_during_detection = true;

    void validate() const;
    // ceil(buffer_seconds * fs / hop)
    std::size_t buffer_capacity(int sample_rate_hz, std::size_t hop_size) const;
    // One rebuild per second of audio: ceil(fs / hop) frames.
    static std::size_t rebuild_interval(int sample_rate_hz, std::size_t hop_size);
};

// Ambient in-band distribution: per-bin median of the buffered frames.
struct BackgroundModel {
    std::vector<double> bins;
    std::int64_t frames_absorbed = 0;
    std::int64_t last_update_frame = -1;

    bool ready() const { return !bins.empty(); }
};

struct DivergenceScore {
    double value = 0.0;  // Jensen-Shannon, base 2, in [0, 1]
    std::int64_t frame_index = 0;
    double kl_bits = 0.0;  // KL(frame || model), diagnostics only
};

struct DetectionEvent {
    std::string event_id;
    std::int64_t onset_frame = 0;
    std::optional<std::int64_t> offset_frame;
    double peak_score = 0.0;
    double last_score = 0.0;
    FrequencyBand active_band_hz;
    TechnologyClass technology_class = TechnologyClass::unknown;
};

// Fixed-capacity cyclic buffer of SpectralFrame distributions.
class SpectralRingBuffer {
public:
    SpectralRingBuffer(std::size_t capacity, std::size_t bin_count);

    // Evicts the oldest frame once at capacity. Throws ConfigError on a bin-count mismatch.
    void push(const dsp::SpectralFrame& frame);

    std::size_t size() const { return count_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t bin_count() const { return bins_; }
    bool full() const { return count_ == capacity_; }
    std::int64_t total_pushed() const { return total_pushed_; }
    // Oldest-first access; index < size().
    std::span<const double> frame(std::size_t index) const;
    std::int64_t frame_index(std::size_t index) const;

private:
    std::size_t capacity_;
    std::size_t bins_;
    std::vector<double> storage_;
    std::vector<std::int64_t> indices_;
    std::size_t head_ = 0;  // slot of the oldest frame
    std::size_t count_ = 0;
    std::int64_t total_pushed_ = 0;
};

// Element-wise median (mean of the central pair for even counts), floored at
// epsilon_floor and renormalized. Throws NotReadyError unless the buffer is full.
BackgroundModel rebuild_background(const SpectralRingBuffer& buffer, double epsilon_floor,
                                   std::int64_t at_frame = -1);

// Throws NotReadyError if the model is empty, ConfigError on a bin-count mismatch.
DivergenceScore score(const dsp::SpectralFrame& frame, const BackgroundModel& model);

struct DebounceStep {
    bool raw = false;
    bool smoothed = false;
    bool onset = false;
    bool offset = false;
};

// Running-median smoothing of threshold crossings. An event opens once the
// smoothed flag has held for min_event_frames consecutive frames and closes
// once it has been clear for min_event_frames frames.
class Debouncer {
public:
    Debouncer(double threshold, int window_frames, int min_event_frames);

    DebounceStep step(const DivergenceScore& score);
    // Feed a pre-thresholded flag directly.
    DebounceStep step_flag(bool raw);
    void reset();

    bool smoothed() const { return smoothed_; }
    bool in_event() const { return in_event_; }

private:
    double threshold_;
    int min_event_frames_;
    RunningMedian<int> window_;
    bool smoothed_ = false;
    bool in_event_ = false;
    int true_run_ = 0;
    int false_run_ = 0;
};

struct ClassifyParams {
    int min_frames = 5;
    FrequencyBand full_band{kBandLowHz, kBandHighHz};
    double mass_fraction = 0.9;
    double broadband_width_hz = 1500.0;
};

struct BandClassification {
    FrequencyBand active_band_hz;
    TechnologyClass technology_class = TechnologyClass::unknown;
};

// Locates the excess-over-background mass of the frames and labels its
// spectral pattern. `background` has the same bin layout as the frames.
BandClassification classify_band(std::span<const dsp::SpectralFrame> frames,
                                  std::span<const double> background,
                                  const ClassifyParams& params = {});

// Deterministic identifier from (context, onset frame, band).
std::string make_event_id(std::string_view context_label, std::int64_t onset_frame,
                          const FrequencyBand& band);

enum class DetectorStatus { warming_up, monitoring };

enum class EventChange { none, opened, updated, closed };

struct FrameOutcome {
    DetectorStatus status = DetectorStatus::warming_up;
    std::int64_t frame_index = 0;
    std::optional<DivergenceScore> score;
    DebounceStep debounce;
    bool absorbed = false;
    bool model_rebuilt = false;
    EventChange change = EventChange::none;
    std::optional<DetectionEvent> event;  // snapshot when change != none
};

// Per-stream detection state: cyclic buffer, background model, debouncer and
// the currently open event. Owned by one worker.
class Detector {
public:
    Detector(const DetectorConfig& config, const dsp::PipelineConfig& pipeline, int sample_rate_hz,
             std::string context_label = {});

    FrameOutcome process(const dsp::SpectralFrame& frame);
    // Closes a still-open event at end of stream.
    std::optional<DetectionEvent> finish();

    DetectorStatus status() const {
        return model_.ready() ? DetectorStatus::monitoring : DetectorStatus::warming_up;
    }
    const BackgroundModel& model() const { return model_; }
    const SpectralRingBuffer& buffer() const { return buffer_; }
    const std::optional<DetectionEvent>& open_event() const { return event_; }
    const DetectorConfig& config() const { return config_; }
    double threshold() const { return config_.threshold_t; }

private:
    void absorb(const dsp::SpectralFrame& frame);
    void maybe_rebuild(std::int64_t frame_index, FrameOutcome& out);
    BandClassification classify_current() const;

    DetectorConfig config_;
    dsp::PipelineConfig pipeline_;
    int sample_rate_hz_;
    std::string context_label_;
    ClassifyParams classify_;
    SpectralRingBuffer buffer_;
    std::size_t rebuild_interval_;
    BackgroundModel model_;
    Debouncer debouncer_;
    bool buffer_dirty_ = false;
    std::size_t frames_since_rebuild_ = 0;
    std::deque<std::pair<dsp::SpectralFrame, double>> recent_;  // frame, score
    std::vector<dsp::SpectralFrame> event_frames_;
    std::optional<DetectionEvent> event_;
    std::int64_t last_smoothed_frame_ = -1;
    std::size_t frames_since_update_ = 0;
};

}  // namespace sonifw::detect
