#include <gtest/gtest.h>

#include <set>

#include "sdpost/mock_scenarios.hpp"
#include "sdpost/pipeline.hpp"

using namespace sdpost;

namespace {

struct Run {
    mock::Script script;
    PipelineResult result;
};

Run run(const mock::Script& s, const PipelineConfig& cfg = {}) {
    return {s, run_pipeline(mock::audio_ref(s), mock::make_backends(s), cfg)};
}

std::set<std::string> scripted_identities(const mock::Script& s) {
    std::set<std::string> out;
    for (const auto& t : s.turns)
        if (t.in_reference) out.insert(t.identity);
    return out;
}

}  // namespace

TEST(Pipeline, CleanScenarioIsPerfect) {
    const auto r = run(mock::clean_scenario());
    const auto ref = mock::reference_annotation(r.script);
    EXPECT_DOUBLE_EQ(der(ref, to_annotation(r.result.segments), 0.25).der, 0.0);
    std::set<std::string> ids;
    for (const auto& f : r.result.segments) ids.insert(f.identity.value);
    EXPECT_EQ(ids, scripted_identities(r.script));
    // identity names line up with the scripted speakers turn by turn
    for (const auto& f : r.result.segments) {
        const auto t = mock::dominant_turn(r.script, f.interval);
        ASSERT_TRUE(t);
        EXPECT_EQ(f.identity.value, r.script.turns[*t].identity);
    }
}

TEST(Pipeline, SplitSpeakerMergedByIdentityMap) {
    const auto r = run(mock::split_speaker_scenario());
    const auto ref = mock::reference_annotation(r.script);
    const auto baseline = der(ref, to_annotation(r.result.reconciled), 0.25);
    const auto final_ = der(ref, to_annotation(r.result.segments), 0.25);
    EXPECT_GT(baseline.confusion, 0.0);
    EXPECT_LT(final_.confusion, baseline.confusion);
    EXPECT_DOUBLE_EQ(final_.confusion, 0.0);
    EXPECT_EQ(r.result.identity_map.distinct_identities().size(), scripted_identities(r.script).size());
}

TEST(Pipeline, MessyScenarioRecoversWords) {
    const auto r = run(mock::messy_scenario());
    const auto ref = mock::reference_annotation(r.script);
    const auto final_ = der(ref, to_annotation(r.result.segments), 0.25);
    const auto baseline = der(ref, to_annotation(r.result.reconciled), 0.25);
    EXPECT_LE(final_.der, baseline.der);
    // every scripted word of the turn lost by the first ASR pass is back
    std::size_t words = 0;
    for (const auto& f : r.result.segments) words += f.words.size();
    std::size_t scripted = 0;
    for (const auto& t : r.script.turns) scripted += t.words.size();
    EXPECT_EQ(words, scripted);
}

TEST(Pipeline, UnreachableLlmAttributedToIdentityStage) {
    auto s = mock::clean_scenario();
    s.llm.unreachable = true;
    std::vector<std::string> sunk;
    try {
        run_pipeline(mock::audio_ref(s), mock::make_backends(s), {},
                     [&](std::size_t, const std::string& stage, const nlohmann::json&) { sunk.push_back(stage); });
        FAIL() << "expected StageError";
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "detect_identities");
        std::vector<std::string> names;
        for (const auto& [n, snap] : e.trace().stages) names.push_back(n);
        EXPECT_EQ(names, (std::vector<std::string>{"diarize", "transcribe", "align", "rerun", "reverify"}));
        EXPECT_EQ(sunk, names);
    }
}

TEST(Pipeline, DeterministicOutput) {
    const auto s = mock::messy_scenario();
    PipelineConfig cfg;
    const auto a = output_json(s.recording_id, run(s, cfg).result, cfg).dump(2);
    const auto b = output_json(s.recording_id, run(s, cfg).result, cfg).dump(2);
    EXPECT_EQ(a, b);
}

TEST(Pipeline, TraceCoversEveryFinalSegment) {
    const auto r = run(mock::messy_scenario());
    const auto& trace = r.result.trace;
    for (const auto* stage : {"rerun", "reverify", "refine", "merge", "clean_duplicates"})
        ASSERT_NE(trace.find(stage), nullptr) << stage;
    std::set<std::size_t> reverified, refined;
    for (const auto& x : *trace.find("reverify")) reverified.insert(x["id"].get<std::size_t>());
    for (const auto& x : *trace.find("refine")) refined.insert(x["id"].get<std::size_t>());
    const auto& rerun_segments = (*trace.find("rerun"))["segments"];
    std::set<std::size_t> reconciled;
    for (const auto& x : rerun_segments) reconciled.insert(x["id"].get<std::size_t>());
    std::set<std::size_t> merged;
    for (const auto& x : *trace.find("merge"))
        for (auto id : x["source_ids"]) merged.insert(id.get<std::size_t>());
    for (const auto& f : r.result.segments) {
        ASSERT_FALSE(f.source_ids.empty());
        for (auto id : f.source_ids) {
            EXPECT_TRUE(reconciled.count(id));
            EXPECT_TRUE(reverified.count(id));
            EXPECT_TRUE(refined.count(id));
            EXPECT_TRUE(merged.count(id));
        }
    }
}

TEST(Pipeline, IdentityMergeProperty) {
    const auto r = run(mock::split_speaker_scenario());
    // labels the map declares equal never end up as different final identities
    std::set<std::string> final_ids;
    for (const auto& f : r.result.segments) final_ids.insert(f.identity.value);
    std::set<std::string> mapped;
    for (const auto& id : r.result.identity_map.distinct_identities()) mapped.insert(id.value);
    for (const auto& id : final_ids) EXPECT_TRUE(id == kUnknown || mapped.count(id)) << id;
}

TEST(Pipeline, ConfigValidation) {
    PipelineConfig c;
    c.llm_confidence_threshold = 1.5;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.overlap = 0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.label_prompt_template = "no placeholder";
    EXPECT_THROW(c.validate(), InvalidArgument);
    EXPECT_NO_THROW(PipelineConfig{}.validate());
    EXPECT_FALSE(PipelineConfig{}.echo().dump().find("token") != std::string::npos);
}

TEST(Pipeline, OutputDocumentShape) {
    const auto r = run(mock::clean_scenario());
    const auto doc = output_json("clean", r.result, {});
    EXPECT_EQ(doc["recording_id"], "clean");
    ASSERT_FALSE(doc["segments"].empty());
    for (const auto* k : {"start", "end", "identity", "provenance", "words"})
        EXPECT_TRUE(doc["segments"][0].contains(k)) << k;
    EXPECT_TRUE(doc.contains("identity_map"));
    EXPECT_TRUE(doc.contains("config_echo"));
    const auto rttm = output_rttm("clean", r.result.segments);
    const auto parsed = parse_rttm(rttm);
    EXPECT_EQ(parsed.at("clean").segments.size(), r.result.segments.size());
    EXPECT_NE(rttm.find("Physical_Therapist"), std::string::npos);
}

TEST(Sweep, ChunkLengthTable) {
    const auto s = mock::drift_scenario();
    std::vector<SweepItem> items{{mock::audio_ref(s), mock::make_backends(s), mock::reference_annotation(s)}};
    const auto rows = sweep_chunks(items, {90, 250}, {});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_LE(rows[1].report.der, rows[0].report.der);
    EXPECT_EQ(sweep_chunks(items, {250}, {}).size(), 1u);
    EXPECT_TRUE(sweep_chunks({}, {90, 250}, {}).empty());
    EXPECT_THROW(sweep_chunks(items, {}, {}), InvalidArgument);
}
