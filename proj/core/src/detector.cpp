#include "sonifw/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "sonifw/divergence.hpp"
#include "sonifw/errors.hpp"

namespace sonifw::detect {

namespace {

constexpr std::size_t kMaxEventFrames = 2048;
constexpr int kToneHalfWidthBins = 2;
constexpr int kToneMassHalfWidthBins = 3;
constexpr int kMaxTones = 5;
constexpr double kToneMinShare = 0.1;
constexpr double kToneCoverage = 0.8;
constexpr double kStableMassCv = 0.25;

}  // namespace

std::string_view to_string(TechnologyClass cls) {
    switch (cls) {
        case TechnologyClass::narrowband_fsk_like: return "narrowband-fsk-like";
        case TechnologyClass::narrowband_psk_like: return "narrowband-psk-like";
        case TechnologyClass::broadband: return "broadband";
        case TechnologyClass::unknown: return "unknown";
    }
    return "unknown";
}

std::optional<TechnologyClass> parse_technology(std::string_view text) {
    for (auto cls : {TechnologyClass::narrowband_fsk_like, TechnologyClass::narrowband_psk_like,
                     TechnologyClass::broadband, TechnologyClass::unknown}) {
        if (to_string(cls) == text) return cls;
    }
    return std::nullopt;
}

void DetectorConfig::validate() const {
    if (!(threshold_t > 0.0 && threshold_t < 1.0)) throw ConfigError("threshold_t must lie in (0, 1)");
    if (!(buffer_seconds > 0.0)) throw ConfigError("buffer_seconds must be positive");
    if (debounce_window_frames < 1 || debounce_window_frames % 2 == 0) {
        throw ConfigError("debounce_window_frames must be a positive odd number");
    }
    if (min_event_frames < 1) throw ConfigError("min_event_frames must be positive");
}

std::size_t DetectorConfig::buffer_capacity(int sample_rate_hz, std::size_t hop_size) const {
    return static_cast<std::size_t>(
        std::ceil(buffer_seconds * sample_rate_hz / static_cast<double>(hop_size)));
}

std::size_t DetectorConfig::rebuild_interval(int sample_rate_hz, std::size_t hop_size) {
    return (static_cast<std::size_t>(sample_rate_hz) + hop_size - 1) / hop_size;
}

// ---------------------------------------------------------------------------

SpectralRingBuffer::SpectralRingBuffer(std::size_t capacity, std::size_t bin_count)
    : capacity_(capacity), bins_(bin_count), storage_(capacity * bin_count), indices_(capacity) {
    if (capacity == 0 || bin_count == 0) throw ConfigError("ring buffer needs capacity and bins");
}

void SpectralRingBuffer::push(const dsp::SpectralFrame& frame) {
    if (frame.bins.size() != bins_) {
        throw ConfigError("spectral frame has " + std::to_string(frame.bins.size()) +
                          " bins, buffer expects " + std::to_string(bins_));
    }
    std::size_t slot;
    if (count_ < capacity_) {
        slot = (head_ + count_) % capacity_;
        ++count_;
    } else {
        slot = head_;
        head_ = (head_ + 1) % capacity_;
    }
    std::copy(frame.bins.begin(), frame.bins.end(),
              storage_.begin() + static_cast<std::ptrdiff_t>(slot * bins_));
    indices_[slot] = frame.frame_index;
    ++total_pushed_;
}

std::span<const double> SpectralRingBuffer::frame(std::size_t index) const {
    const std::size_t slot = (head_ + index) % capacity_;
    return {storage_.data() + slot * bins_, bins_};
}

std::int64_t SpectralRingBuffer::frame_index(std::size_t index) const {
    return indices_[(head_ + index) % capacity_];
}

BackgroundModel rebuild_background(const SpectralRingBuffer& buffer, double epsilon_floor,
                                   std::int64_t at_frame) {
    if (!buffer.full()) {
        throw NotReadyError("background buffer holds " + std::to_string(buffer.size()) + " of " +
                            std::to_string(buffer.capacity()) + " frames");
    }
    const std::size_t n = buffer.size();
    const std::size_t bins = buffer.bin_count();
    BackgroundModel model;
    model.bins.resize(bins);
    model.frames_absorbed = buffer.total_pushed();
    model.last_update_frame = at_frame;

    std::vector<double> column(n);
    const std::size_t mid = n / 2;
    for (std::size_t b = 0; b < bins; ++b) {
        for (std::size_t i = 0; i < n; ++i) column[i] = buffer.frame(i)[b];
        auto upper = column.begin() + static_cast<std::ptrdiff_t>(mid);
        std::nth_element(column.begin(), upper, column.end());
        double median = *upper;
        if (n % 2 == 0) {
            const double lower = *std::max_element(column.begin(), upper);
            median = 0.5 * (lower + median);
        }
        model.bins[b] = median;
    }

    double floored = 0.0;
    for (double& v : model.bins) {
        v = std::max(v, epsilon_floor);
        floored += v;
    }
    for (double& v : model.bins) v /= floored;
    return model;
}

DivergenceScore score(const dsp::SpectralFrame& frame, const BackgroundModel& model) {
    if (!model.ready()) throw NotReadyError("background model not built yet");
    if (frame.bins.size() != model.bins.size()) {
        throw ConfigError("frame and background model differ in bin count");
    }
    DivergenceScore s;
    s.frame_index = frame.frame_index;
    s.value = jensen_shannon(frame.bins, model.bins);
    s.kl_bits = kl_divergence(frame.bins, model.bins);
    return s;
}

// ---------------------------------------------------------------------------

Debouncer::Debouncer(double threshold, int window_frames, int min_event_frames)
    : threshold_(threshold),
      min_event_frames_(min_event_frames),
      window_(static_cast<std::size_t>(window_frames)) {
    window_.fill(0);
}

DebounceStep Debouncer::step(const DivergenceScore& score) {
    return step_flag(score.value > threshold_);
}

DebounceStep Debouncer::step_flag(bool raw) {
    window_.insert(raw ? 1 : 0);
    DebounceStep out;
    out.raw = raw;
    smoothed_ = window_.median() == 1;
    out.smoothed = smoothed_;
    if (smoothed_) {
        ++true_run_;
        false_run_ = 0;
    } else {
        ++false_run_;
        true_run_ = 0;
    }
    if (!in_event_ && true_run_ >= min_event_frames_) {
        in_event_ = true;
        out.onset = true;
    } else if (in_event_ && false_run_ >= min_event_frames_) {
        in_event_ = false;
        out.offset = true;
    }
    return out;
}

void Debouncer::reset() {
    window_.fill(0);
    smoothed_ = false;
    in_event_ = false;
    true_run_ = 0;
    false_run_ = 0;
}

// ---------------------------------------------------------------------------

namespace {

struct Tone {
    std::size_t center = 0;
    std::vector<std::size_t> frames;
};

// Greedy grouping of per-frame dominant bins into at most kMaxTones tones.
std::vector<Tone> group_dominant_bins(const std::vector<std::size_t>& dominant) {
    std::vector<Tone> tones;
    std::vector<bool> assigned(dominant.size(), false);
    std::size_t remaining = dominant.size();
    while (remaining > 0 && static_cast<int>(tones.size()) < kMaxTones) {
        std::vector<std::size_t> hist;
        for (std::size_t f = 0; f < dominant.size(); ++f) {
            if (assigned[f]) continue;
            if (dominant[f] >= hist.size()) hist.resize(dominant[f] + 1, 0);
            ++hist[dominant[f]];
        }
        const auto center = static_cast<std::size_t>(
            std::max_element(hist.begin(), hist.end()) - hist.begin());
        Tone tone{center, {}};
        for (std::size_t f = 0; f < dominant.size(); ++f) {
            if (assigned[f]) continue;
            const auto d = static_cast<long>(dominant[f]) - static_cast<long>(center);
            if (std::labs(d) <= kToneHalfWidthBins) {
                assigned[f] = true;
                tone.frames.push_back(f);
                --remaining;
            }
        }
        tones.push_back(std::move(tone));
    }
    return tones;
}

}  // namespace

BandClassification classify_band(std::span<const dsp::SpectralFrame> frames,
                                  std::span<const double> background,
                                  const ClassifyParams& params) {
    BandClassification full{params.full_band, TechnologyClass::unknown};
    if (static_cast<int>(frames.size()) < params.min_frames || background.empty()) return full;
    const std::size_t n = background.size();
    for (const auto& f : frames) {
        if (f.bins.size() != n) throw ConfigError("classify_band: bin-count mismatch");
    }

    std::vector<double> excess(n, 0.0);
    std::vector<std::size_t> dominant(frames.size(), 0);
    for (std::size_t f = 0; f < frames.size(); ++f) {
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = frames[f].bins[i] - background[i];
            if (e > 0.0) excess[i] += e;
            if (e > best) {
                best = e;
                dominant[f] = i;
            }
        }
    }
    const double total = std::accumulate(excess.begin(), excess.end(), 0.0);
    if (total <= 0.0) return full;

    // Smallest contiguous bin interval holding mass_fraction of the excess.
    const double need = params.mass_fraction * total;
    std::size_t best_lo = 0, best_hi = n - 1;
    double window = 0.0;
    std::size_t lo = 0;
    for (std::size_t hi = 0; hi < n; ++hi) {
        window += excess[hi];
        while (lo < hi && window - excess[lo] >= need) window -= excess[lo++];
        if (window >= need && hi - lo < best_hi - best_lo) {
            best_lo = lo;
            best_hi = hi;
        }
    }

    const double f_low = frames.front().bin_freq_low_hz;
    const double f_high = frames.front().bin_freq_high_hz;
    const double bin_hz = n > 1 ? (f_high - f_low) / static_cast<double>(n - 1) : 1.0;
    const double core_low = f_low + bin_hz * (static_cast<double>(best_lo) - 0.5);
    const double core_high = f_low + bin_hz * (static_cast<double>(best_hi) + 0.5);
    const double pad = std::max(bin_hz, 0.2 * (core_high - core_low));

    BandClassification out;
    out.active_band_hz.low_hz = std::max(params.full_band.low_hz, core_low - pad);
    out.active_band_hz.high_hz = std::min(params.full_band.high_hz, core_high + pad);
    if (out.active_band_hz.width() > params.broadband_width_hz) {
        out.technology_class = TechnologyClass::broadband;
        return out;
    }

    const auto tones = group_dominant_bins(dominant);
    const double count = static_cast<double>(frames.size());
    std::vector<int> tone_of_frame(frames.size(), -1);
    int qualifying = 0;
    double coverage = 0.0;
    for (std::size_t t = 0; t < tones.size(); ++t) {
        const double share = static_cast<double>(tones[t].frames.size()) / count;
        if (share < kToneMinShare) continue;
        ++qualifying;
        coverage += share;
        for (std::size_t f : tones[t].frames) tone_of_frame[f] = static_cast<int>(t);
    }
    if (coverage < kToneCoverage) {
        out.technology_class = TechnologyClass::unknown;
        return out;
    }

    if (qualifying == 1) {
        const Tone& tone = tones.front();
        std::vector<double> mass;
        for (std::size_t f : tone.frames) {
            double m = 0.0;
            const long c = static_cast<long>(tone.center);
            for (long i = std::max(0L, c - kToneMassHalfWidthBins);
                 i <= std::min(static_cast<long>(n) - 1, c + kToneMassHalfWidthBins); ++i) {
                m += frames[f].bins[static_cast<std::size_t>(i)];
            }
            mass.push_back(m);
        }
        const double mean = std::accumulate(mass.begin(), mass.end(), 0.0) / mass.size();
        double var = 0.0;
        for (double m : mass) var += (m - mean) * (m - mean);
        const double cv = mean > 0.0 ? std::sqrt(var / mass.size()) / mean : 1.0;
        out.technology_class =
            cv < kStableMassCv ? TechnologyClass::narrowband_psk_like : TechnologyClass::unknown;
        return out;
    }

    if (qualifying >= 2 && qualifying <= 4) {
        int transitions = 0;
        int previous = -1;
        for (int t : tone_of_frame) {
            if (t < 0) continue;
            if (previous >= 0 && t != previous) ++transitions;
            previous = t;
        }
        if (transitions >= 2) {
            out.technology_class = TechnologyClass::narrowband_fsk_like;
            return out;
        }
    }
    out.technology_class = TechnologyClass::unknown;
    return out;
}

std::string make_event_id(std::string_view context_label, std::int64_t onset_frame,
                          const FrequencyBand& band) {
    // FNV-1a, 64 bit.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::string_view text) {
        for (unsigned char c : text) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    mix(context_label);
    mix("|");
    mix(std::to_string(onset_frame));
    mix("|");
    mix(std::to_string(std::llround(band.low_hz)));
    mix("|");
    mix(std::to_string(std::llround(band.high_hz)));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------

Detector::Detector(const DetectorConfig& config, const dsp::PipelineConfig& pipeline,
                   int sample_rate_hz, std::string context_label)
    : config_((config.validate(), config)),
      pipeline_((pipeline.validate(sample_rate_hz), pipeline)),
      sample_rate_hz_(sample_rate_hz),
      context_label_(std::move(context_label)),
      buffer_(config.buffer_capacity(sample_rate_hz, pipeline.hop_size),
              dsp::band_bins(pipeline.band_low_hz, pipeline.band_high_hz, pipeline.frame_size,
                             sample_rate_hz)
                  .count()),
      rebuild_interval_(DetectorConfig::rebuild_interval(sample_rate_hz, pipeline.hop_size)),
      debouncer_(config.threshold_t, config.debounce_window_frames, config.min_event_frames) {
    classify_.min_frames = config.min_event_frames;
    classify_.full_band = {pipeline.band_low_hz, pipeline.band_high_hz};
}

void Detector::absorb(const dsp::SpectralFrame& frame) {
    buffer_.push(frame);
    buffer_dirty_ = true;
}

void Detector::maybe_rebuild(std::int64_t frame_index, FrameOutcome& out) {
    ++frames_since_rebuild_;
    if (frames_since_rebuild_ < rebuild_interval_ || !buffer_dirty_) return;
    model_ = rebuild_background(buffer_, pipeline_.epsilon_floor, frame_index);
    buffer_dirty_ = false;
    frames_since_rebuild_ = 0;
    out.model_rebuilt = true;
}

BandClassification Detector::classify_current() const {
    return classify_band(event_frames_, model_.bins, classify_);
}

FrameOutcome Detector::process(const dsp::SpectralFrame& frame) {
    if (frame.bins.size() != buffer_.bin_count()) {
        throw ConfigError("spectral frame bin count does not match detector configuration");
    }
    FrameOutcome out;
    out.frame_index = frame.frame_index;

    if (!model_.ready()) {
        out.status = DetectorStatus::warming_up;
        absorb(frame);
        out.absorbed = true;
        if (buffer_.full()) {
            model_ = rebuild_background(buffer_, pipeline_.epsilon_floor, frame.frame_index);
            buffer_dirty_ = false;
            frames_since_rebuild_ = 0;
            out.model_rebuilt = true;
        }
        return out;
    }

    out.status = DetectorStatus::monitoring;
    const DivergenceScore s = score(frame, model_);
    out.score = s;
    out.debounce = debouncer_.step(s);

    recent_.emplace_back(frame, s.value);
    const auto recent_cap =
        static_cast<std::size_t>(config_.debounce_window_frames + config_.min_event_frames);
    while (recent_.size() > recent_cap) recent_.pop_front();

    if (event_) {
        event_->peak_score = std::max(event_->peak_score, s.value);
        event_->last_score = s.value;
        if (out.debounce.smoothed) {
            last_smoothed_frame_ = frame.frame_index;
            if (event_frames_.size() < kMaxEventFrames) event_frames_.push_back(frame);
        }
    }

    if (out.debounce.onset) {
        event_frames_.clear();
        double peak = 0.0;
        for (const auto& [f, value] : recent_) {
            if (value > config_.threshold_t) {
                event_frames_.push_back(f);
                peak = std::max(peak, value);
            }
        }
        const BandClassification cls = classify_current();
        DetectionEvent ev;
        ev.onset_frame = frame.frame_index;
        ev.peak_score = peak;
        ev.last_score = s.value;
        ev.active_band_hz = cls.active_band_hz;
        ev.technology_class = cls.technology_class;
        ev.event_id = make_event_id(context_label_, ev.onset_frame, ev.active_band_hz);
        event_ = ev;
        last_smoothed_frame_ = frame.frame_index;
        frames_since_update_ = 0;
        out.change = EventChange::opened;
        out.event = event_;
    } else if (event_ && out.debounce.offset) {
        const BandClassification cls = classify_current();
        event_->active_band_hz = cls.active_band_hz;
        event_->technology_class = cls.technology_class;
        event_->offset_frame = last_smoothed_frame_;
        out.change = EventChange::closed;
        out.event = event_;
        event_.reset();
        event_frames_.clear();
    } else if (event_ && ++frames_since_update_ >= rebuild_interval_) {
        const BandClassification cls = classify_current();
        event_->active_band_hz = cls.active_band_hz;
        event_->technology_class = cls.technology_class;
        frames_since_update_ = 0;
        out.change = EventChange::updated;
        out.event = event_;
    }

    const bool frozen =
        config_.background_freeze_during_detection && (event_.has_value() || out.debounce.smoothed);
    if (!frozen) {
        absorb(frame);
        out.absorbed = true;
    }
    maybe_rebuild(frame.frame_index, out);
    return out;
}

std::optional<DetectionEvent> Detector::finish() {
    if (!event_) return std::nullopt;
    const BandClassification cls = classify_current();
    event_->active_band_hz = cls.active_band_hz;
    event_->technology_class = cls.technology_class;
    event_->offset_frame = last_smoothed_frame_;
    auto closed = event_;
    event_.reset();
    event_frames_.clear();
    debouncer_.reset();
    return closed;
}

}  // namespace sonifw::detect
