#include "fch/parse.hpp"

#include "fch/util.hpp"

namespace fch::adapters {

namespace {

// Finds the end (one past) of the first balanced JSON value starting at `start`
// (which must point at '{' or '['), honoring strings and escapes.
// Returns npos when the value never closes.
size_t balanced_json_end(const std::string& s, size_t start) {
    int depth = 0;
    bool in_string = false;
    for (size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') {
                ++i;  // skip escaped char
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            ++depth;
        } else if (c == '}' || c == ']') {
            --depth;
            if (depth == 0) return i + 1;
            if (depth < 0) return std::string::npos;
        }
    }
    return std::string::npos;
}

ParseResult malformed(std::string error, size_t offset, std::optional<bool> think) {
    ParseResult r;
    r.kind = ParseResult::Kind::Malformed;
    r.error = std::move(error);
    r.error_offset = offset;
    r.thinking_suppressed = think;
    return r;
}

}  // namespace

ParseResult parse_tool_call(const AdapterProfile& profile, const std::string& raw_output) {
    std::optional<bool> think;
    size_t cursor = 0;

    if (profile.reasoning()) {
        think = util::starts_with(raw_output, profile.empty_think());
        if (util::starts_with(raw_output, profile.think_open)) {
            const size_t close = raw_output.find(profile.think_close, profile.think_open.size());
            if (close == std::string::npos) {
                ParseResult r;  // the model never left its reasoning block
                r.thinking_suppressed = think;
                return r;
            }
            cursor = close + profile.think_close.size();
        }
    }

    size_t body = std::string::npos;
    const size_t open_pos = raw_output.find(profile.toolcall_open, cursor);
    if (open_pos != std::string::npos && !profile.toolcall_open.empty()) {
        body = open_pos + profile.toolcall_open.size();
    } else if (profile.toolcall_open.empty()) {
        body = cursor;
    } else if (profile.marker_optional) {
        // Families that also emit bare calls: fall back to the first brace.
        const char first = profile.call_shape == AdapterProfile::CallShape::RecordList ? '[' : '{';
        body = raw_output.find(first, cursor);
    }
    if (body == std::string::npos) {
        ParseResult r;
        r.thinking_suppressed = think;
        return r;
    }

    const char opener = profile.call_shape == AdapterProfile::CallShape::RecordList ? '[' : '{';
    size_t value_start = raw_output.find_first_not_of(" \t\r\n", body);
    if (value_start == std::string::npos || raw_output[value_start] != opener)
        return malformed(std::string("expected '") + opener + "' after tool-call marker",
                         value_start == std::string::npos ? raw_output.size() : value_start, think);

    const size_t value_end = balanced_json_end(raw_output, value_start);
    if (value_end == std::string::npos)
        return malformed("tool call never closes", raw_output.size(), think);

    json value;
    try {
        value = json::parse(raw_output.substr(value_start, value_end - value_start));
    } catch (const nlohmann::json::parse_error& e) {
        return malformed(e.what(), value_start + (e.byte > 0 ? e.byte - 1 : 0), think);
    }

    if (profile.call_shape == AdapterProfile::CallShape::RecordList) {
        if (!value.is_array() || value.empty())
            return malformed("tool-call list is empty", value_start, think);
        value = value[0];  // first call wins
        if (!value.is_object()) return malformed("tool-call record is not an object", value_start, think);
    }

    if (!value.contains("name") || !value["name"].is_string())
        return malformed("tool call lacks a string 'name'", value_start, think);

    ParseResult r;
    r.kind = ParseResult::Kind::Ok;
    r.thinking_suppressed = think;
    r.call.name = value["name"].get<std::string>();
    for (const auto& key : profile.argument_keys) {
        if (!value.contains(key)) continue;
        if (!value[key].is_object())
            return malformed("argument field '" + key + "' is not an object", value_start, think);
        r.call.arguments = value[key];
        break;
    }
    return r;
}

std::optional<std::string> extract_first_json(const std::string& text, size_t from) {
    const size_t start = text.find_first_of("{[", from);
    if (start == std::string::npos) return std::nullopt;
    const size_t end = balanced_json_end(text, start);
    if (end == std::string::npos) return std::nullopt;
    return text.substr(start, end - start);
}

}  // namespace fch::adapters
