#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <unistd.h>

#include "sonifw/scenario.hpp"
#include "sonifw/wav.hpp"

namespace fixture {

inline std::filesystem::path source_dir() { return SONIFW_SOURCE_DIR; }

inline std::filesystem::path scenario_path(const std::string& name) {
    return source_dir() / "fixtures" / (name + ".scenario");
}

// Per process, since ctest runs cases from one binary concurrently; removed at exit.
inline std::filesystem::path scratch_dir() {
    static const struct Dir {
        std::filesystem::path path = std::filesystem::temp_directory_path() /
                                     ("sonifw_unit_" + std::to_string(::getpid()));
        Dir() { std::filesystem::create_directories(path); }
        ~Dir() {
            std::error_code ec;
            std::filesystem::remove_all(path, ec);
        }
    } dir;
    return dir.path;
}

// Renders fixtures/<name>.scenario to a float32 WAV once per process,
// optionally cut to the first `seconds`.
inline std::filesystem::path wav(const std::string& name, std::optional<double> seconds = std::nullopt) {
    const auto tag = seconds ? name + "_" + std::to_string(static_cast<int>(*seconds)) : name;
    const auto out = scratch_dir() / (tag + ".wav");
    static std::map<std::string, bool> done;
    if (!done[tag]) {
        auto scenario = sonifw::load_scenario(scenario_path(name));
        if (seconds) scenario.duration_seconds = *seconds;
        sonifw::write_wav(out, sonifw::render_scenario(scenario), scenario.sample_rate_hz,
                          sonifw::SampleFormat::float32);
        done[tag] = true;
    }
    return out;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace fixture
