#include "sonifw/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "sonifw/errors.hpp"

namespace sonifw {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::ostream& out, std::uint16_t v) {
    const std::array<char, 2> b{static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
    out.write(b.data(), 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                static_cast<char>((v >> 16) & 0xFF),
                                static_cast<char>((v >> 24) & 0xFF)};
    out.write(b.data(), 4);
}

std::int16_t to_pcm16(double s) {
    // Same scale as the reader, so a round trip is off by at most half a step.
    const long v = std::lround(std::clamp(s, -1.0, 1.0) * 32768.0);
    return static_cast<std::int16_t>(std::clamp(v, -32768L, 32767L));
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open WAV file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw IoError("not a RIFF/WAVE file: " + path.string());
    }

    std::uint16_t format_tag = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
    const std::uint8_t* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* chunk = bytes.data() + pos;
        const std::uint32_t size = read_u32(chunk + 4);
        const std::size_t body = pos + 8;
        const std::size_t available = std::min<std::size_t>(size, bytes.size() - body);
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (available < 16) throw IoError("truncated fmt chunk");
            format_tag = read_u16(chunk + 8);
            channels = read_u16(chunk + 10);
            sample_rate = read_u32(chunk + 12);
            bits = read_u16(chunk + 22);
            if (format_tag == kFormatExtensible && available >= 26) {
                // First two bytes of the sub-format GUID carry the real tag.
                format_tag = read_u16(chunk + 8 + 24);
            }
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = chunk + 8;
            data_size = available;
        }
        pos = body + size + (size & 1U);
    }

    if (channels == 0 || sample_rate == 0) throw IoError("missing fmt chunk: " + path.string());
    if (data == nullptr) throw IoError("missing data chunk: " + path.string());
    if (sample_rate != 44100 && sample_rate != 48000) {
        throw ConfigError("unsupported sample rate " + std::to_string(sample_rate) +
                          " Hz (expected 44100 or 48000)");
    }

    WavData wav;
    wav.sample_rate_hz = static_cast<int>(sample_rate);
    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t stride = bytes_per_sample * channels;
    const std::size_t frames = stride == 0 ? 0 : data_size / stride;
    wav.samples.resize(frames);

    if (format_tag == kFormatPcm && bits == 16) {
        wav.format = SampleFormat::pcm16;
        for (std::size_t i = 0; i < frames; ++i) {
            const auto v = static_cast<std::int16_t>(read_u16(data + i * stride));
            wav.samples[i] = static_cast<double>(v) / 32768.0;
        }
    } else if (format_tag == kFormatFloat && bits == 32) {
        wav.format = SampleFormat::float32;
        for (std::size_t i = 0; i < frames; ++i) {
            float v;
            std::memcpy(&v, data + i * stride, sizeof v);
            wav.samples[i] = static_cast<double>(v);
        }
    } else {
        throw ConfigError("unsupported WAV encoding (format " + std::to_string(format_tag) +
                          ", " + std::to_string(bits) + " bits)");
    }
    return wav;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate_hz, SampleFormat format) {
    WavWriter writer(path, sample_rate_hz, format);
    writer.write(samples);
    writer.close();
}

WavWriter::WavWriter(const std::filesystem::path& path, int sample_rate_hz, SampleFormat format)
    : out_(path, std::ios::binary | std::ios::trunc),
      sample_rate_hz_(sample_rate_hz),
      format_(format) {
    if (!out_) throw IoError("cannot create WAV file: " + path.string());
    write_header();
}

WavWriter::~WavWriter() {
    try {
        close();
    } catch (...) {
    }
}

void WavWriter::write_header() {
    const std::uint16_t bits = format_ == SampleFormat::pcm16 ? 16 : 32;
    const std::uint16_t tag = format_ == SampleFormat::pcm16 ? kFormatPcm : kFormatFloat;
    const std::uint32_t block_align = bits / 8;
    const auto data_bytes = static_cast<std::uint32_t>(samples_written_ * block_align);

    out_.seekp(0);
    out_.write("RIFF", 4);
    put_u32(out_, 36 + data_bytes);
    out_.write("WAVE", 4);
    out_.write("fmt ", 4);
    put_u32(out_, 16);
    put_u16(out_, tag);
    put_u16(out_, 1);
    put_u32(out_, static_cast<std::uint32_t>(sample_rate_hz_));
    put_u32(out_, static_cast<std::uint32_t>(sample_rate_hz_) * block_align);
    put_u16(out_, static_cast<std::uint16_t>(block_align));
    put_u16(out_, bits);
    out_.write("data", 4);
    put_u32(out_, data_bytes);
}

void WavWriter::write(std::span<const double> samples) {
    if (closed_) throw IoError("write to closed WAV writer");
    if (format_ == SampleFormat::pcm16) {
        for (double s : samples) put_u16(out_, static_cast<std::uint16_t>(to_pcm16(s)));
    } else {
        for (double s : samples) {
            const auto f = static_cast<float>(s);
            std::uint32_t raw;
            std::memcpy(&raw, &f, sizeof raw);
            put_u32(out_, raw);
        }
    }
    samples_written_ += samples.size();
    if (!out_) throw IoError("WAV write failed");
}

void WavWriter::close() {
    if (closed_) return;
    closed_ = true;
    write_header();
    out_.flush();
    out_.close();
}

}  // namespace sonifw
