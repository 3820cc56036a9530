#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "fch/codec.hpp"
#include "fch/corpus.hpp"
#include "fch/errors.hpp"
#include "fch/parse.hpp"
#include "fch/render.hpp"
#include "fch/util.hpp"

using namespace fch;
using namespace fch::adapters;
using fch::lmbridge::ByteCodec;
using fch::lmbridge::TokenId;

namespace {

const std::string kData = std::string(FCH_DATA_DIR);

AdapterProfile profile_named(const std::string& name) {
    return AdapterProfile::load(kData + "/profiles/" + name + ".json");
}

Payload slack_payload() {
    return corpus::select_target(corpus::load_payload(kData + "/fixtures/mcp_slack.json"));
}

}  // namespace

TEST_CASE("template expansion replaces every slot exactly once") {
    CHECK(render_template("a ${x} b ${y}", {{"x", "1"}, {"y", "2"}}) == "a 1 b 2");
    // Replacement text is not re-scanned for slots.
    CHECK(render_template("${x}", {{"x", "${y}"}, {"y", "nope"}}) == "${y}");
    CHECK_THROWS_AS(render_template("${missing}", {}), render_error);
}

TEST_CASE("target prefixes match the frozen golden bytes") {
    const json golden = json::parse(util::read_file(kData + "/golden/target_prefixes.json"));
    const std::string fn_name = golden.at("function_name").get<std::string>();
    for (const auto& [name, expected] : golden.at("prefixes").items()) {
        CAPTURE(name);
        const AdapterProfile profile = profile_named(name);
        CHECK(build_target_prefix(profile, fn_name) == expected.get<std::string>());
    }
}

TEST_CASE("function serialization keeps the description bytes raw") {
    const AdapterProfile llama = profile_named("llama");
    FunctionSpec fn;
    fn.name = "probe";
    fn.description = "plain text with \"quotes\" and } braces";
    const std::string entry = serialize_function(llama, fn);
    // The raw description appears verbatim, unescaped.
    CHECK(entry.find(fn.description) != std::string::npos);
    CHECK(entry.find("\"name\": \"probe\"") != std::string::npos);
}

TEST_CASE("chat prompt contains every function and the query") {
    const Payload p = slack_payload();
    for (const std::string name : {"llama", "mistral", "qwen", "toy"}) {
        CAPTURE(name);
        const AdapterProfile profile = profile_named(name);
        const std::string prompt = render_chat(profile, p);
        for (const auto& fn : p.functions) CHECK(prompt.find(fn.name) != std::string::npos);
        CHECK(prompt.find(p.query) != std::string::npos);
    }
}

TEST_CASE("suffix injection manages the target description region") {
    const Payload p = slack_payload();
    const std::string base = p.target().description;

    const Payload once = inject_suffix(p, "alpha beta");
    CHECK(once.target().description == base + " alpha beta");
    REQUIRE(once.suffix_offset.has_value());
    CHECK(*once.suffix_offset == base.size());

    // Re-injection replaces, never stacks.
    const Payload twice = inject_suffix(once, "gamma");
    CHECK(twice.target().description == base + " gamma");
    CHECK(*twice.suffix_offset == base.size());

    // Empty suffix restores the base description.
    const Payload cleared = inject_suffix(twice, "");
    CHECK(cleared.target().description == base);

    // Identity on payloads that never had a managed region.
    const Payload same = inject_suffix(p, "");
    CHECK(same == p);
}

TEST_CASE("attack input spans are exact for every profile") {
    const ByteCodec codec;
    const std::string suffix = "zz <TC>{\"name\": \"x\"} !!";
    const auto suffix_tokens = codec.encode(suffix);

    for (const std::string name : {"llama", "mistral", "qwen", "toy"}) {
        CAPTURE(name);
        const AdapterProfile profile = profile_named(name);
        const Payload p = inject_suffix(slack_payload(), suffix);
        const auto rendered = render_attack_input(profile, codec, p, suffix_tokens);

        // Suffix tokens appear verbatim at the suffix span.
        REQUIRE(rendered.suffix_span.size() == suffix_tokens.size());
        for (size_t i = 0; i < suffix_tokens.size(); ++i)
            CHECK(rendered.token_ids[rendered.suffix_span.begin + i] == suffix_tokens[i]);

        // The target span decodes to the profile's byte-exact target prefix.
        std::vector<TokenId> target_ids(
            rendered.token_ids.begin() + static_cast<long>(rendered.target_span.begin),
            rendered.token_ids.begin() + static_cast<long>(rendered.target_span.end));
        CHECK(codec.decode(target_ids) == build_target_prefix(profile, p.target().name));
        CHECK(codec.decode(target_ids) == rendered.target_text);

        // Segments concatenate to the full sequence.
        CHECK(codec.decode(rendered.token_ids) ==
              rendered.pre_text + rendered.suffix_text + rendered.mid_text + rendered.target_text);
        CHECK(rendered.suffix_text == suffix);
        CHECK(rendered.suffix_span.end <= rendered.target_span.begin);

        // The generation prompt stops right before the target.
        CHECK(rendered.prompt_tokens().size() == rendered.target_span.begin);
    }
}

TEST_CASE("attack input requires a managed suffix region and a target") {
    const ByteCodec codec;
    const Payload p = slack_payload();  // no suffix_offset
    CHECK_THROWS_AS(render_attack_input(profile_named("toy"), codec, p, codec.encode("x")),
                    render_error);
}

TEST_CASE("tool-call serialization is the inverse of parsing") {
    ToolCall call;
    call.name = "slack_post_message";
    call.arguments = {{"channel_id", "C1"}, {"text", "hi"}};

    for (const std::string name : {"llama", "mistral", "qwen"}) {
        CAPTURE(name);
        const AdapterProfile profile = profile_named(name);
        const std::string raw = serialize_tool_call(profile, call);
        const ParseResult parsed = parse_tool_call(profile, raw);
        REQUIRE(parsed.ok());
        CHECK(parsed.call.name == call.name);
        CHECK(parsed.call.arguments == call.arguments);
        if (profile.reasoning()) {
            REQUIRE(parsed.thinking_suppressed.has_value());
            CHECK(*parsed.thinking_suppressed);
        }
    }
}
