#pragma once

#include <optional>
#include <string>

#include "fch/profile.hpp"
#include "fch/toolcall.hpp"

namespace fch::adapters {

// Outcome of reading a model completion. Exactly one of the three kinds:
//   Ok         — a structured call was recovered (first call wins for lists)
//   NoToolCall — the completion never attempts a tool call
//   Malformed  — a call was attempted but cannot be parsed; error_offset is the
//                byte offset into the raw output where parsing failed
struct ParseResult {
    enum class Kind { Ok, NoToolCall, Malformed };
    Kind kind = Kind::NoToolCall;
    ToolCall call;
    std::optional<bool> thinking_suppressed;  // reasoning profiles only
    std::string error;
    size_t error_offset = 0;

    bool ok() const { return kind == Kind::Ok; }
};

ParseResult parse_tool_call(const AdapterProfile& profile, const std::string& raw_output);

// The first balanced JSON object or array found at or after `from`, honoring
// strings and escapes; nullopt when none closes. Useful for model replies that
// wrap JSON in prose or markdown fences.
std::optional<std::string> extract_first_json(const std::string& text, size_t from = 0);

}  // namespace fch::adapters
