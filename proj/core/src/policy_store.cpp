#include "sonifw/policy_store.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include "sonifw/errors.hpp"

namespace sonifw::policy {

namespace {

constexpr std::string_view kAnyTechnology = "*";

std::int64_t system_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string tech_key(std::optional<detect::TechnologyClass> tech) {
    return tech ? std::string(detect::to_string(*tech)) : std::string(kAnyTechnology);
}

}  // namespace

std::string_view to_string(Decision decision) {
    switch (decision) {
        case Decision::allow: return "allow";
        case Decision::block: return "block";
        case Decision::ask: return "ask";
    }
    return "ask";
}

std::optional<Decision> parse_decision(std::string_view text) {
    if (text == "allow") return Decision::allow;
    if (text == "block") return Decision::block;
    if (text == "ask") return Decision::ask;
    return std::nullopt;
}

std::string LogDocument::to_jsonl() const {
    std::string out;
    for (const auto& e : entries) {
        out += e.dump();
        out += '\n';
    }
    return out;
}

nlohmann::ordered_json to_json(const PolicyRecord& r) {
    nlohmann::ordered_json j;
    j["kind"] = "decision";
    j["v"] = 1;
    j["seq"] = r.sequence;
    j["ts"] = r.created_at_ms;
    j["context"] = r.context_label;
    j["tech"] = tech_key(r.technology);
    j["decision"] = to_string(r.decision);
    j["event_id"] = r.event_ref;
    return j;
}

nlohmann::ordered_json to_json(const EventRecord& r) {
    nlohmann::ordered_json j;
    j["kind"] = "event";
    j["v"] = 1;
    j["seq"] = r.sequence;
    j["ts"] = r.created_at_ms;
    j["context"] = r.context_label;
    j["event_id"] = r.event_id;
    j["onset_s"] = r.onset_seconds;
    j["offset_s"] = r.offset_seconds;
    j["class"] = detect::to_string(r.technology);
    j["band_hz"] = {r.band_hz.low_hz, r.band_hz.high_hz};
    j["peak_score"] = r.peak_score;
    j["decision"] = to_string(r.decision);
    return j;
}

PolicyStore::PolicyStore(std::filesystem::path path, Clock clock)
    : path_(std::move(path)), clock_(clock ? std::move(clock) : Clock(system_clock_ms)) {
    if (!path_.empty()) load();
}

void PolicyStore::load() {
    std::ifstream in(path_);
    if (!in) return;  // no history yet
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        // A torn final line from a crash is skipped.
        auto j = nlohmann::ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("kind")) continue;
        const auto seq = j.value("seq", std::uint64_t{0});
        const auto ts = j.value("ts", std::int64_t{0});
        next_sequence_ = std::max(next_sequence_, seq + 1);
        last_timestamp_ = std::max(last_timestamp_, ts);
        if (j["kind"] == "decision") {
            PolicyRecord r;
            r.context_label = j.value("context", "");
            const std::string tech = j.value("tech", std::string(kAnyTechnology));
            if (tech != kAnyTechnology) {
                r.technology = detect::parse_technology(tech);
                if (!r.technology) continue;
            }
            const auto decision = parse_decision(j.value("decision", ""));
            if (!decision || *decision == Decision::ask) continue;
            r.decision = *decision;
            r.created_at_ms = ts;
            r.sequence = seq;
            r.event_ref = j.value("event_id", "");
            latest_[{r.context_label, tech}] = r;
        }
        history_.push_back(std::move(j));
    }
}

std::int64_t PolicyStore::next_timestamp() {
    last_timestamp_ = std::max(last_timestamp_, clock_());
    return last_timestamp_;
}

void PolicyStore::append(const nlohmann::ordered_json& record) {
    history_.push_back(record);
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::app);
    out << record.dump() << '\n';
    out.flush();
    if (!out) throw StorageError("cannot append to policy log " + path_.string());
}

PolicyRecord PolicyStore::record_decision(std::string_view context,
                                          std::optional<detect::TechnologyClass> technology,
                                          Decision decision, std::string_view event_id) {
    if (decision == Decision::ask) throw ContractViolation("only allow or block can be recorded");
    std::lock_guard lock(mutex_);
    PolicyRecord r;
    r.context_label = std::string(context);
    r.technology = technology;
    r.decision = decision;
    r.created_at_ms = next_timestamp();
    r.sequence = next_sequence_++;
    r.event_ref = std::string(event_id);
    latest_[{r.context_label, tech_key(technology)}] = r;
    append(to_json(r));
    return r;
}

Decision PolicyStore::lookup(std::string_view context, detect::TechnologyClass technology) const {
    std::lock_guard lock(mutex_);
    const std::string ctx(context);
    if (auto it = latest_.find({ctx, tech_key(technology)}); it != latest_.end()) {
        return it->second.decision;
    }
    if (auto it = latest_.find({ctx, std::string(kAnyTechnology)}); it != latest_.end()) {
        return it->second.decision;
    }
    return Decision::ask;
}

void PolicyStore::record_event(EventRecord event) {
    std::lock_guard lock(mutex_);
    event.created_at_ms = next_timestamp();
    event.sequence = next_sequence_++;
    append(to_json(event));
}

LogDocument PolicyStore::export_log(std::int64_t from_ms, std::int64_t to_ms) const {
    std::lock_guard lock(mutex_);
    LogDocument doc;
    for (const auto& j : history_) {
        const auto ts = j.value("ts", std::int64_t{0});
        if (ts >= from_ms && ts <= to_ms) doc.entries.push_back(j);
    }
    std::stable_sort(doc.entries.begin(), doc.entries.end(), [](const auto& a, const auto& b) {
        const auto ka = std::pair{a.value("ts", std::int64_t{0}), a.value("seq", std::uint64_t{0})};
        const auto kb = std::pair{b.value("ts", std::int64_t{0}), b.value("seq", std::uint64_t{0})};
        return ka < kb;
    });
    return doc;
}

std::size_t PolicyStore::decision_count() const {
    std::lock_guard lock(mutex_);
    return latest_.size();
}

std::size_t PolicyStore::event_count() const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(history_.begin(), history_.end(), [](const auto& j) {
        return j.value("kind", "") == "event";
    }));
}

}  // namespace sonifw::policy
