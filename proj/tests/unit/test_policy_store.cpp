#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "sonifw/errors.hpp"
#include "sonifw/policy_store.hpp"

using namespace sonifw;
using namespace sonifw::policy;
using detect::TechnologyClass;
namespace fs = std::filesystem;

namespace {

fs::path fresh(const std::string& name) {
    const auto p = fixture::scratch_dir() / name;
    fs::remove(p);
    return p;
}

// Deterministic clock advancing by `step` ms per call.
PolicyStore::Clock ticking(std::int64_t start, std::int64_t step = 10) {
    auto t = std::make_shared<std::int64_t>(start);
    return [t, step] {
        const auto now = *t;
        *t += step;
        return now;
    };
}

EventRecord event(const std::string& id) {
    EventRecord e;
    e.event_id = id;
    e.context_label = "office";
    e.technology = TechnologyClass::broadband;
    e.band_hz = {18000, 22000};
    e.peak_score = 0.8;
    return e;
}

}  // namespace

TEST(PolicyStore, WriteThenRead) {
    PolicyStore s;
    s.record_decision("office", TechnologyClass::broadband, Decision::block, "e1");
    EXPECT_EQ(s.lookup("office", TechnologyClass::broadband), Decision::block);
}

TEST(PolicyStore, LatestWins) {
    PolicyStore s({}, ticking(0));
    s.record_decision("office", TechnologyClass::broadband, Decision::block, "e1");
    s.record_decision("office", TechnologyClass::broadband, Decision::allow, "e2");
    EXPECT_EQ(s.lookup("office", TechnologyClass::broadband), Decision::allow);
    EXPECT_EQ(s.decision_count(), 1u);
}

TEST(PolicyStore, DefaultsToAsk) {
    PolicyStore s;
    EXPECT_EQ(s.lookup("home", TechnologyClass::narrowband_fsk_like), Decision::ask);
    s.record_decision("office", TechnologyClass::broadband, Decision::block, "e1");
    EXPECT_EQ(s.lookup("home", TechnologyClass::broadband), Decision::ask);
}

TEST(PolicyStore, ContextWideFallbackAndExactPrecedence) {
    PolicyStore s;
    s.record_decision("cafe", std::nullopt, Decision::block, "");
    EXPECT_EQ(s.lookup("cafe", TechnologyClass::narrowband_psk_like), Decision::block);
    s.record_decision("cafe", TechnologyClass::narrowband_psk_like, Decision::allow, "e9");
    EXPECT_EQ(s.lookup("cafe", TechnologyClass::narrowband_psk_like), Decision::allow);
    EXPECT_EQ(s.lookup("cafe", TechnologyClass::broadband), Decision::block);
}

TEST(PolicyStore, AskCannotBeRecorded) {
    PolicyStore s;
    EXPECT_THROW(s.record_decision("x", std::nullopt, Decision::ask, ""), ContractViolation);
}

TEST(PolicyStore, SurvivesRestart) {
    const auto p = fresh("restart.jsonl");
    {
        PolicyStore s(p, ticking(1000));
        s.record_decision("office", TechnologyClass::broadband, Decision::block, "e1");
        s.record_decision("home", std::nullopt, Decision::allow, "");
        s.record_decision("office", TechnologyClass::broadband, Decision::allow, "e2");
        s.record_event(event("e3"));
    }
    PolicyStore again(p, ticking(0));
    EXPECT_EQ(again.lookup("office", TechnologyClass::broadband), Decision::allow);
    EXPECT_EQ(again.lookup("home", TechnologyClass::unknown), Decision::allow);
    EXPECT_EQ(again.event_count(), 1u);
    // Timestamps keep increasing even though the new clock starts earlier.
    const auto r = again.record_decision("lab", std::nullopt, Decision::block, "");
    EXPECT_GE(r.created_at_ms, 1030);
    EXPECT_EQ(r.sequence, 5u);
}

TEST(PolicyStore, TornFinalLineIgnored) {
    const auto p = fresh("torn.jsonl");
    {
        PolicyStore s(p);
        s.record_decision("office", TechnologyClass::broadband, Decision::block, "e1");
    }
    std::ofstream(p, std::ios::app) << R"({"kind":"decision","v":1,"seq":2,"ts":5,"conte)";
    PolicyStore again(p);
    EXPECT_EQ(again.lookup("office", TechnologyClass::broadband), Decision::block);
}

TEST(PolicyStore, StorageFailureKeepsMemoryState) {
    PolicyStore s("/nonexistent-dir/policy.jsonl");
    EXPECT_THROW(s.record_decision("office", TechnologyClass::broadband, Decision::block, "e1"), StorageError);
    EXPECT_EQ(s.lookup("office", TechnologyClass::broadband), Decision::block);
    EXPECT_THROW(s.record_event(event("e2")), StorageError);
    EXPECT_EQ(s.event_count(), 1u);
}

TEST(ExportLog, EmptyStore) {
    PolicyStore s;
    EXPECT_TRUE(s.export_log(0, 1'000'000).entries.empty());
    EXPECT_EQ(s.export_log(0, 1).to_jsonl(), "");
}

TEST(ExportLog, ChronologicalAndRanged) {
    PolicyStore s({}, ticking(100, 10));
    s.record_event(event("a"));   // ts 100
    s.record_decision("office", TechnologyClass::broadband, Decision::block, "a");  // 110
    s.record_event(event("b"));   // 120
    s.record_event(event("c"));   // 130
    const auto all = s.export_log(0, 1000);
    ASSERT_EQ(all.entries.size(), 4u);
    for (std::size_t i = 1; i < all.entries.size(); ++i) {
        EXPECT_LT(all.entries[i - 1]["ts"].get<std::int64_t>(), all.entries[i]["ts"].get<std::int64_t>());
    }
    int events = 0;
    for (const auto& e : all.entries) events += e["kind"] == "event";
    EXPECT_EQ(events, 3);
    EXPECT_EQ(s.export_log(115, 125).entries.size(), 1u);
    EXPECT_TRUE(s.export_log(200, 300).entries.empty());
}

TEST(ExportLog, EqualTimestampsOrderedBySequence) {
    PolicyStore s({}, [] { return std::int64_t{42}; });
    s.record_event(event("x"));
    s.record_event(event("y"));
    const auto doc = s.export_log(42, 42);
    ASSERT_EQ(doc.entries.size(), 2u);
    EXPECT_EQ(doc.entries[0]["event_id"], "x");
    EXPECT_EQ(doc.entries[1]["event_id"], "y");
}

TEST(ExportLog, RecordFieldLayout) {
    PolicyStore s({}, [] { return std::int64_t{7}; });
    s.record_decision("office", TechnologyClass::narrowband_fsk_like, Decision::block, "abc");
    EXPECT_EQ(s.export_log(0, 10).to_jsonl(),
              R"({"kind":"decision","v":1,"seq":1,"ts":7,"context":"office","tech":"narrowband-fsk-like","decision":"block","event_id":"abc"})"
              "\n");
}

TEST(Decision, StringRoundTrip) {
    for (auto d : {Decision::allow, Decision::block, Decision::ask}) EXPECT_EQ(parse_decision(to_string(d)), d);
    EXPECT_FALSE(parse_decision("deny"));
}
