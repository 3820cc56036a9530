#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "fch/parse.hpp"
#include "fch/profile.hpp"

using namespace fch;
using namespace fch::adapters;

namespace {

AdapterProfile profile_named(const std::string& name) {
    return AdapterProfile::load(std::string(FCH_DATA_DIR) + "/profiles/" + name + ".json");
}

}  // namespace

TEST_CASE("the marker is found anywhere in the output") {
    const AdapterProfile llama = profile_named("llama");
    const auto r = parse_tool_call(
        llama, "Let me call that.\n<|python_tag|>{\"name\": \"f\", \"parameters\": {}}");
    REQUIRE(r.ok());
    CHECK(r.call.name == "f");
    CHECK(r.call.arguments == json::object());
}

TEST_CASE("balanced scanning ignores braces inside strings") {
    const AdapterProfile llama = profile_named("llama");
    const auto r = parse_tool_call(
        llama, "<|python_tag|>{\"name\": \"f\", \"parameters\": {\"note\": \"a } b { c\"}} trailing");
    REQUIRE(r.ok());
    CHECK(r.call.arguments.at("note") == "a } b { c");
}

TEST_CASE("escaped quotes do not terminate strings") {
    const AdapterProfile llama = profile_named("llama");
    const auto r = parse_tool_call(
        llama, "<|python_tag|>{\"name\": \"f\", \"parameters\": {\"q\": \"say \\\"hi\\\"\"}}");
    REQUIRE(r.ok());
    CHECK(r.call.arguments.at("q") == "say \"hi\"");
}

TEST_CASE("first argument key in the profile order wins") {
    const AdapterProfile llama = profile_named("llama");  // parameters, then arguments
    const auto r = parse_tool_call(
        llama,
        "<|python_tag|>{\"name\": \"f\", \"parameters\": {\"a\": 1}, \"arguments\": {\"b\": 2}}");
    REQUIRE(r.ok());
    CHECK(r.call.arguments.contains("a"));
    CHECK_FALSE(r.call.arguments.contains("b"));
}

TEST_CASE("malformed results carry an error and offset") {
    const AdapterProfile llama = profile_named("llama");
    const auto r = parse_tool_call(llama, "<|python_tag|>{\"name\": \"f\", ");
    CHECK(r.kind == ParseResult::Kind::Malformed);
    CHECK_FALSE(r.ok());
    CHECK_FALSE(r.error.empty());
}

TEST_CASE("reasoning outputs are parsed after the think block") {
    const AdapterProfile qwen = profile_named("qwen");

    SUBCASE("a marker inside the think block is not a call") {
        const auto r = parse_tool_call(
            qwen, "<think>\nmaybe <tool_call>? no, stay in prose\n</think>\n\nNothing to call.");
        CHECK(r.kind == ParseResult::Kind::NoToolCall);
        REQUIRE(r.thinking_suppressed.has_value());
        CHECK_FALSE(*r.thinking_suppressed);
    }
    SUBCASE("suppressed thinking is the exact empty block") {
        const auto r = parse_tool_call(
            qwen, "<think>\n\n</think>\n\n<tool_call>{\"name\": \"f\", \"arguments\": {}}</tool_call>");
        REQUIRE(r.ok());
        CHECK(*r.thinking_suppressed);
    }
    SUBCASE("whitespace inside the think block is not suppression") {
        const auto r = parse_tool_call(
            qwen, "<think>\n \n</think>\n\n<tool_call>{\"name\": \"f\", \"arguments\": {}}</tool_call>");
        REQUIRE(r.ok());
        CHECK_FALSE(*r.thinking_suppressed);
    }
}

TEST_CASE("record-list families unwrap the first record") {
    const AdapterProfile mistral = profile_named("mistral");
    const auto r = parse_tool_call(
        mistral,
        "[TOOL_CALLS] [{\"name\": \"a\", \"arguments\": {\"x\": 1}}, {\"name\": \"b\"}]");
    REQUIRE(r.ok());
    CHECK(r.call.name == "a");
}

TEST_CASE("extract_first_json finds balanced values in prose") {
    CHECK(extract_first_json("text {\"a\": [1, 2, {\"b\": \"}\"}]} tail") ==
          "{\"a\": [1, 2, {\"b\": \"}\"}]}");
    CHECK(extract_first_json("pick [1, 2] then {\"a\": 3}") == "[1, 2]");
    CHECK(extract_first_json("no json here") == std::nullopt);
    CHECK(extract_first_json("never closes {\"a\": 1") == std::nullopt);
    // `from` skips an earlier value.
    const std::string text = "{\"first\": 1} and {\"second\": 2}";
    CHECK(extract_first_json(text, 12) == "{\"second\": 2}");
}
