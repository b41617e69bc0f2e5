#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

namespace sonifw {

enum class SampleFormat { pcm16, float32 };

// Mono view of a WAV file. Multichannel input keeps only the first channel.
struct WavData {
    int sample_rate_hz = 44100;
    SampleFormat format = SampleFormat::pcm16;
    std::vector<double> samples;

    double duration_seconds() const {
        return static_cast<double>(samples.size()) / sample_rate_hz;
    }
};

WavData read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate_hz, SampleFormat format = SampleFormat::pcm16);

// Incremental mono writer; the header is patched with final sizes on close().
class WavWriter {
public:
    WavWriter(const std::filesystem::path& path, int sample_rate_hz,
              SampleFormat format = SampleFormat::pcm16);
    ~WavWriter();
    WavWriter(const WavWriter&) = delete;
    WavWriter& operator=(const WavWriter&) = delete;

    void write(std::span<const double> samples);
    void close();
    std::uint64_t samples_written() const { return samples_written_; }

private:
    void write_header();

    std::ofstream out_;
    int sample_rate_hz_;
    SampleFormat format_;
    std::uint64_t samples_written_ = 0;
    bool closed_ = false;
};

}  // namespace sonifw
