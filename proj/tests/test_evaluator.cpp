#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <string>
#include <vector>

#include "fch/corpus.hpp"
#include "fch/evaluator.hpp"
#include "fch/toy_bridge.hpp"
#include "fch/util.hpp"

using namespace fch;
using namespace fch::evaluator;

namespace {

const std::string kData = std::string(FCH_DATA_DIR);
const std::string kTestData = std::string(FCH_TEST_DATA_DIR);

adapters::AdapterProfile profile_named(const std::string& name) {
    return adapters::AdapterProfile::load(kData + "/profiles/" + name + ".json");
}

std::string parse_kind_string(adapters::ParseResult::Kind kind) {
    switch (kind) {
        case adapters::ParseResult::Kind::Ok: return "ok";
        case adapters::ParseResult::Kind::NoToolCall: return "no_tool_call";
        case adapters::ParseResult::Kind::Malformed: return "malformed";
    }
    return "?";
}

EvalRecord make_record(const std::string& id, size_t epoch, bool fn, bool slot) {
    EvalRecord r;
    r.payload_id = id;
    r.query = "q";
    r.epoch = epoch;
    r.fn_match = fn;
    r.slot_valid = slot;
    return r;
}

}  // namespace

TEST_CASE("every hand-labeled output case scores exactly as labeled") {
    const json doc = json::parse(util::read_file(kTestData + "/metric_cases.json"));
    std::map<std::string, adapters::AdapterProfile> profiles;
    std::map<std::string, FunctionSpec> references;
    for (const auto& [key, fj] : doc.at("references").items())
        references.emplace(key, FunctionSpec::from_json(fj));

    const auto& cases = doc.at("cases");
    REQUIRE(cases.size() == 30);

    size_t checked = 0;
    for (const auto& c : cases) {
        const std::string id = c.at("id").get<std::string>();
        CAPTURE(id);
        const std::string pname = c.at("profile").get<std::string>();
        if (!profiles.count(pname)) profiles.emplace(pname, profile_named(pname));
        const adapters::AdapterProfile& profile = profiles.at(pname);
        const FunctionSpec& ref = references.at(c.at("reference").get<std::string>());
        const std::string raw = c.at("raw_output").get<std::string>();
        const json& expect = c.at("expect");

        const auto parsed = adapters::parse_tool_call(profile, raw);
        const bool fn = parsed.ok() && match_function_name(parsed.call, ref.name);
        const bool slot = parsed.ok() && validate_slot_filling(parsed.call, ref);
        const auto think = check_thinking_suppressed(raw, profile);

        CHECK(parse_kind_string(parsed.kind) == expect.at("parse_kind").get<std::string>());
        CHECK(fn == expect.at("fn_match").get<bool>());
        CHECK(slot == expect.at("slot_valid").get<bool>());
        if (expect.at("thinking_suppressed").is_null()) {
            CHECK_FALSE(think.has_value());
        } else {
            REQUIRE(think.has_value());
            CHECK(*think == expect.at("thinking_suppressed").get<bool>());
        }
        // Slot-filling success presupposes the right function: SF implies FN.
        const bool sf_success = fn && slot;
        if (sf_success) CHECK(fn);
        ++checked;
    }
    CHECK(checked == 30);
}

TEST_CASE("cumulative curves count a sample from its first success onward") {
    std::vector<EvalRecord> records;
    // Sample a: hits at epoch 10 (fn only), full success at 20.
    records.push_back(make_record("a", 0, false, false));
    records.push_back(make_record("a", 10, true, false));
    records.push_back(make_record("a", 20, true, true));
    // Sample b: flickers: success at 10, failure again at 20 (still counted).
    records.push_back(make_record("b", 0, false, false));
    records.push_back(make_record("b", 10, true, true));
    records.push_back(make_record("b", 20, false, false));

    const AsrCurve curve = compute_asr_curve(records, CurveMode::CumulativeBest, "demo");
    CHECK(curve.label == "demo");
    REQUIRE(curve.points.size() == 3);
    CHECK(curve.points[0].epoch == 0);
    CHECK(curve.points[0].fn_asr == 0.0);
    CHECK(curve.points[0].n == 2);
    CHECK(curve.points[1].fn_asr == 1.0);  // both samples hit by epoch 10
    CHECK(curve.points[1].sf_asr == 0.5);
    CHECK(curve.points[2].fn_asr == 1.0);  // monotone despite b's regression
    CHECK(curve.points[2].sf_asr == 1.0);

    // Monotonicity is a structural property of the cumulative mode.
    for (size_t i = 1; i < curve.points.size(); ++i) {
        CHECK(curve.points[i].fn_asr >= curve.points[i - 1].fn_asr);
        CHECK(curve.points[i].sf_asr >= curve.points[i - 1].sf_asr);
    }
    // SF never exceeds FN.
    for (const auto& pt : curve.points) CHECK(pt.sf_asr <= pt.fn_asr);
}

TEST_CASE("instantaneous curves may dip and count per-epoch populations") {
    std::vector<EvalRecord> records;
    records.push_back(make_record("a", 0, true, true));
    records.push_back(make_record("b", 0, false, false));
    records.push_back(make_record("a", 10, false, false));
    records.push_back(make_record("b", 10, false, false));

    const AsrCurve curve = compute_asr_curve(records, CurveMode::Instantaneous);
    REQUIRE(curve.points.size() == 2);
    CHECK(curve.points[0].fn_asr == 0.5);
    CHECK(curve.points[1].fn_asr == 0.0);  // dips: transfer-style curve
    CHECK(curve.points[0].n == 2);
    CHECK(curve.points[1].n == 2);

    CHECK_THROWS_AS(compute_asr_curve({}, CurveMode::Instantaneous), std::invalid_argument);
}

TEST_CASE("hijacking index is the first function-match epoch per sample") {
    std::vector<EvalRecord> records;
    records.push_back(make_record("a", 0, false, false));
    records.push_back(make_record("a", 30, true, false));
    records.push_back(make_record("a", 10, true, false));  // out of order on purpose
    records.push_back(make_record("b", 0, false, false));

    const auto idx = hijacking_indices(records);
    REQUIRE(idx.size() == 2);
    for (const auto& [key, value] : idx) {
        if (key.rfind("a", 0) == 0) {
            REQUIRE(value.has_value());
            CHECK(*value == 10);
        } else {
            CHECK_FALSE(value.has_value());
        }
    }
}

TEST_CASE("suffix checkpoints round-trip through json") {
    SuffixCheckpoint cp;
    cp.epoch = 40;
    cp.suffix_tokens = {32, 120, 33};
    cp.suffix_text = " x!";
    cp.item_losses = {1.5, 2.25};
    const SuffixCheckpoint back = SuffixCheckpoint::from_json(cp.to_json());
    CHECK(back.epoch == cp.epoch);
    CHECK(back.suffix_tokens == cp.suffix_tokens);
    CHECK(back.suffix_text == cp.suffix_text);
    CHECK(back.item_losses == cp.item_losses);
}

TEST_CASE("evaluation records carry the full verdict and round-trip") {
    lmbridge::ToyDims dims;
    dims.layers = 1;
    dims.dim = 16;
    auto bridge = lmbridge::make_toy_bridge(3, 257, dims);
    const auto profile = profile_named("toy");
    const Payload payload =
        corpus::select_target(corpus::load_payload(kData + "/fixtures/mcp_slack.json"));

    EvalOptions options;
    options.max_new_tokens = 8;

    SUBCASE("attack mode scores against the target") {
        const EvalRecord rec =
            evaluate_payload(payload, std::string("test suffix"), *bridge, profile,
                             EvalMode::Attack, options);
        CHECK(rec.payload_id == payload.id);
        CHECK(rec.mode == "attack");
        CHECK(rec.reference_name == payload.target().name);
        CHECK(rec.error.empty());
        CHECK_FALSE(rec.raw_output.empty());
        CHECK_FALSE(rec.thinking_suppressed.has_value());  // toy is not a reasoning family

        const EvalRecord back = EvalRecord::from_json(rec.to_json());
        CHECK(back.payload_id == rec.payload_id);
        CHECK(back.parse_kind == rec.parse_kind);
        CHECK(back.fn_match == rec.fn_match);
        CHECK(back.slot_valid == rec.slot_valid);
        CHECK(back.raw_output == rec.raw_output);
        CHECK(back.epoch == rec.epoch);
    }
    SUBCASE("standard mode scores against the ground truth, no suffix") {
        const EvalRecord rec = evaluate_payload(payload, std::nullopt, *bridge, profile,
                                                EvalMode::Standard, options);
        CHECK(rec.mode == "standard");
        CHECK(rec.reference_name == payload.ground_truth().name);
        CHECK(rec.error.empty());
    }
    SUBCASE("a payload with no target yields an error record, not a throw") {
        Payload bare = corpus::load_payload(kData + "/fixtures/mcp_slack.json");
        bare.target_index.reset();
        const EvalRecord rec = evaluate_payload(bare, std::string("sfx"), *bridge, profile,
                                                EvalMode::Attack, options);
        CHECK_FALSE(rec.error.empty());
        CHECK_FALSE(rec.fn_match);
    }
}

TEST_CASE("records with arbitrary output bytes survive JSON transport") {
    EvalRecord rec;
    rec.payload_id = "bytes";
    rec.mode = "attack";
    std::string raw;
    for (int b = 0; b < 256; ++b) raw += static_cast<char>(b);
    rec.raw_output = raw;

    const json j = rec.to_json();
    CHECK_NOTHROW(j.dump());  // the transport form must be valid UTF-8
    const EvalRecord back = EvalRecord::from_json(json::parse(j.dump()));
    CHECK(back.raw_output == raw);

    // Plain text passes through unchanged on the wire.
    rec.raw_output = "plain ascii output";
    CHECK(rec.to_json()["raw_output"] == "plain ascii output");
}

TEST_CASE("transfer evaluation respects the checkpoint cadence") {
    lmbridge::ToyDims dims;
    dims.layers = 1;
    dims.dim = 16;
    auto bridge = lmbridge::make_toy_bridge(9, 257, dims);
    const auto profile = profile_named("toy");
    const Payload payload =
        corpus::select_target(corpus::load_payload(kData + "/fixtures/mcp_slack.json"));

    std::vector<SuffixCheckpoint> checkpoints;
    for (size_t e : {0, 10, 20, 25}) {  // 25 violates a cadence of 10
        SuffixCheckpoint cp;
        cp.epoch = e;
        cp.suffix_text = "ck " + std::to_string(e);
        cp.suffix_tokens = bridge->codec().encode(cp.suffix_text);
        checkpoints.push_back(cp);
    }

    EvalSet set_a{"level_a", {payload}};
    Payload second = payload;
    second.id = "slack_b";
    second.query = "Another channel question";
    EvalSet set_b{"level_b", {payload, second}};

    EvalOptions options;
    options.max_new_tokens = 4;
    const auto results = transfer_evaluate(checkpoints, {set_a, set_b}, 10, *bridge, profile,
                                           options);
    REQUIRE(results.size() == 2);
    CHECK(results[0].curve.label == "level_a");
    CHECK(results[0].records.size() == 3);      // epochs 0, 10, 20
    CHECK(results[1].records.size() == 6);      // two items per matching epoch
    REQUIRE(results[1].curve.points.size() == 3);
    CHECK(results[1].curve.points[0].n == 2);
    for (const auto& rec : results[0].records) CHECK(rec.mode == "attack");

    CHECK_THROWS_AS(transfer_evaluate(checkpoints, {set_a}, 0, *bridge, profile, options),
                    std::invalid_argument);
}
