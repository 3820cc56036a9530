#pragma once

#include <map>
#include <string>
#include <vector>

#include "fch/codec.hpp"
#include "fch/payload.hpp"
#include "fch/profile.hpp"

namespace fch::adapters {

// The tokenized attack input. Segments are tokenized independently and
// concatenated, so cross-segment merges cannot occur and the spans are exact:
//   token_ids = pre ++ suffix ++ mid ++ target
// suffix_span and target_span are disjoint and suffix_span ends first.
struct RenderedAttackInput {
    std::vector<lmbridge::TokenId> token_ids;
    lmbridge::SpanRange suffix_span;
    lmbridge::SpanRange target_span;
    std::string pre_text;
    std::string suffix_text;
    std::string mid_text;
    std::string target_text;

    // Tokens up to the assistant-turn boundary (everything before the target
    // segment) — the generation prompt.
    std::vector<lmbridge::TokenId> prompt_tokens() const {
        return {token_ids.begin(), token_ids.begin() + static_cast<long>(target_span.begin)};
    }
};

// Single-pass ${slot} expansion; unknown slot -> render_error naming it.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& slots);

// The byte-exact decoding prefix that forces a call to `target_fn_name`.
std::string build_target_prefix(const AdapterProfile& profile, const std::string& target_fn_name);

// One function entry as it appears in the rendered prompt. The description is
// inserted raw (no JSON escaping) so an injected suffix keeps its exact bytes.
std::string serialize_function(const AdapterProfile& profile, const FunctionSpec& fn);

// Full chat prompt up to (and including) the assistant header.
std::string render_chat(const AdapterProfile& profile, const Payload& payload);

// Appends `suffix_text` to the target function's description, separated by one
// ASCII space, and records the managed-region boundary. Re-injection replaces
// the previous suffix. Empty suffix restores the base description (and is the
// identity on payloads that never had a suffix).
Payload inject_suffix(const Payload& payload, const std::string& suffix_text);

// What a well-formed call from this family looks like (inverse of parse).
std::string serialize_tool_call(const AdapterProfile& profile, const ToolCall& call);

// Renders payload+suffix+target into tokens with exact spans. Requires the
// payload to carry a managed suffix region (see inject_suffix) and a target.
RenderedAttackInput render_attack_input(const AdapterProfile& profile,
                                        const lmbridge::TokenCodec& codec,
                                        const Payload& payload,
                                        const std::vector<lmbridge::TokenId>& suffix_tokens);

}  // namespace fch::adapters
