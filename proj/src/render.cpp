#include "fch/render.hpp"

#include <stdexcept>

#include "fch/errors.hpp"
#include "fch/util.hpp"

namespace fch::adapters {

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(tmpl.size());
    for (size_t i = 0; i < tmpl.size();) {
        if (tmpl[i] == '$' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
            const size_t close = tmpl.find('}', i + 2);
            if (close == std::string::npos) throw render_error("unterminated ${ in template");
            const std::string slot = tmpl.substr(i + 2, close - i - 2);
            auto it = slots.find(slot);
            if (it == slots.end()) throw render_error("unknown template slot ${" + slot + "}");
            out += it->second;  // substituted values are never rescanned
            i = close + 1;
        } else {
            out += tmpl[i++];
        }
    }
    return out;
}

std::string build_target_prefix(const AdapterProfile& profile, const std::string& target_fn_name) {
    if (target_fn_name.empty()) throw std::invalid_argument("target function name must be non-empty");
    return render_template(profile.target_template, {{"name", target_fn_name}});
}

std::string serialize_function(const AdapterProfile& profile, const FunctionSpec& fn) {
    std::string param_names;
    for (const auto& [key, spec] : fn.properties) {
        if (!param_names.empty()) param_names += ", ";
        param_names += key;
    }
    const json schema = fn.to_json()["parameters"];
    return render_template(profile.function_template, {
                                                          {"name", fn.name},
                                                          {"description", fn.description},
                                                          {"parameters", schema.dump()},
                                                          {"param_names", param_names},
                                                      });
}

std::string render_chat(const AdapterProfile& profile, const Payload& payload) {
    payload.validate();
    std::string functions;
    for (size_t i = 0; i < payload.functions.size(); ++i) {
        if (i) functions += profile.function_separator;
        functions += serialize_function(profile, payload.functions[i]);
    }
    return render_template(profile.prompt_template,
                           {{"functions", functions}, {"query", payload.query}});
}

Payload inject_suffix(const Payload& payload, const std::string& suffix_text) {
    if (!payload.target_index)
        throw std::invalid_argument("payload '" + payload.id + "': cannot inject suffix without a target");
    if (suffix_text.empty() && !payload.suffix_offset) return payload;  // identity

    Payload out = payload;
    FunctionSpec& target = out.functions[*out.target_index];
    const std::string base = payload.suffix_offset
                                 ? target.description.substr(0, *payload.suffix_offset)
                                 : target.description;
    target.description = suffix_text.empty() ? base : base + " " + suffix_text;
    out.suffix_offset = base.size();
    out.validate();
    return out;
}

std::string serialize_tool_call(const AdapterProfile& profile, const ToolCall& call) {
    std::string record = "{\"name\": " + json(call.name).dump() + ", \"" +
                         profile.argument_keys.front() + "\": " + call.arguments.dump() + "}";
    if (profile.call_shape == AdapterProfile::CallShape::RecordList) record = "[" + record + "]";
    std::string out = profile.toolcall_open + record + profile.toolcall_close;
    if (profile.reasoning()) out = profile.empty_think() + "\n\n" + out;
    return out;
}

namespace {

// Round-trips one segment through the codec; the concatenation of segments is
// what the bridge sees, so each segment must survive encode/decode exactly.
std::vector<lmbridge::TokenId> encode_checked(const lmbridge::TokenCodec& codec,
                                              const std::string& text, const char* segment) {
    const auto ids = codec.encode(text);
    if (codec.decode(ids) != text)
        throw render_error(std::string("segment '") + segment + "' does not round-trip the codec");
    return ids;
}

}  // namespace

RenderedAttackInput render_attack_input(const AdapterProfile& profile,
                                        const lmbridge::TokenCodec& codec,
                                        const Payload& payload,
                                        const std::vector<lmbridge::TokenId>& suffix_tokens) {
    payload.validate();
    if (!payload.target_index)
        throw render_error("payload '" + payload.id + "' has no target function");
    if (!payload.suffix_offset)
        throw render_error("payload '" + payload.id +
                           "' has no managed suffix region; inject_suffix first");

    const FunctionSpec& target = payload.target();
    const std::string base = target.description.substr(0, *payload.suffix_offset);

    // Render once with a marker in place of the suffix, then split. The marker
    // is grown until it appears nowhere else in the rendered text.
    std::string marker = "\x01SFX\x01";
    Payload marked = payload;
    std::string rendered;
    for (int attempt = 0;; ++attempt) {
        marked.functions[*payload.target_index].description = base + marker;
        marked.suffix_offset.reset();
        rendered = render_chat(profile, marked);
        const size_t first = rendered.find(marker);
        if (first != std::string::npos && rendered.find(marker, first + 1) == std::string::npos) break;
        if (attempt > 8) throw render_error("could not isolate suffix marker in rendered prompt");
        marker += std::to_string(attempt);
    }

    RenderedAttackInput out;
    const size_t cut = rendered.find(marker);
    out.pre_text = rendered.substr(0, cut);
    out.mid_text = rendered.substr(cut + marker.size());
    if (!suffix_tokens.empty()) out.pre_text += " ";  // separator owned by the pre segment
    out.suffix_text = codec.decode(suffix_tokens);
    out.target_text = build_target_prefix(profile, target.name);

    const auto pre_ids = encode_checked(codec, out.pre_text, "pre");
    const auto mid_ids = encode_checked(codec, out.mid_text, "mid");
    const auto target_ids = encode_checked(codec, out.target_text, "target");

    out.token_ids = pre_ids;
    out.token_ids.insert(out.token_ids.end(), suffix_tokens.begin(), suffix_tokens.end());
    out.suffix_span = {pre_ids.size(), pre_ids.size() + suffix_tokens.size()};
    out.token_ids.insert(out.token_ids.end(), mid_ids.begin(), mid_ids.end());
    const size_t target_begin = out.token_ids.size();
    out.token_ids.insert(out.token_ids.end(), target_ids.begin(), target_ids.end());
    out.target_span = {target_begin, target_begin + target_ids.size()};
    return out;
}

}  // namespace fch::adapters
