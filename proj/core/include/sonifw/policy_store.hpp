#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonifw/audio.hpp"
#include "sonifw/detector.hpp"

namespace sonifw::policy {

enum class Decision { allow, block, ask };

std::string_view to_string(Decision decision);
std::optional<Decision> parse_decision(std::string_view text);

struct PolicyRecord {
    std::string context_label;
    // nullopt: applies to every technology in the context.
    std::optional<detect::TechnologyClass> technology;
    Decision decision = Decision::ask;
    std::int64_t created_at_ms = 0;
    std::uint64_t sequence = 0;
    std::string event_ref;
};

struct EventRecord {
    std::string event_id;
    std::string context_label;
    std::int64_t created_at_ms = 0;
    std::uint64_t sequence = 0;
    double onset_seconds = 0.0;
    double offset_seconds = 0.0;
    detect::TechnologyClass technology = detect::TechnologyClass::unknown;
    FrequencyBand band_hz;
    double peak_score = 0.0;
    Decision decision = Decision::ask;
};

// Line-delimited JSON records in chronological order.
struct LogDocument {
    std::vector<nlohmann::ordered_json> entries;
    std::string to_jsonl() const;
};

// Append-only store of detections and allow/block decisions keyed by context
// label. Loading replays the file; the latest decision per key wins.
class PolicyStore {
public:
    using Clock = std::function<std::int64_t()>;  // milliseconds since epoch

    // Empty path: memory only.
    explicit PolicyStore(std::filesystem::path path = {}, Clock clock = {});

    // Throws ContractViolation for Decision::ask. On a write failure the record
    // stays in memory and StorageError is thrown.
    PolicyRecord record_decision(std::string_view context,
                                 std::optional<detect::TechnologyClass> technology,
                                 Decision decision, std::string_view event_id);

    // Exact (context, technology) decision, else a context-wide one, else ask.
    Decision lookup(std::string_view context, detect::TechnologyClass technology) const;

    void record_event(EventRecord event);

    // Everything with created_at in [from_ms, to_ms].
    LogDocument export_log(std::int64_t from_ms, std::int64_t to_ms) const;

    const std::filesystem::path& path() const { return path_; }
    std::size_t decision_count() const;
    std::size_t event_count() const;

private:
    void load();
    void append(const nlohmann::ordered_json& record);
    std::int64_t next_timestamp();

    std::filesystem::path path_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, std::string>, PolicyRecord> latest_;
    std::vector<nlohmann::ordered_json> history_;
    std::int64_t last_timestamp_ = 0;
    std::uint64_t next_sequence_ = 1;
};

nlohmann::ordered_json to_json(const PolicyRecord& record);
nlohmann::ordered_json to_json(const EventRecord& record);

}  // namespace sonifw::policy
