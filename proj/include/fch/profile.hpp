#pragma once

#include <string>
#include <vector>

#include "fch/toolcall.hpp"

namespace fch::adapters {

// Everything model-family-specific lives here, loaded from a JSON data file:
// chat template, tool-call markers, think markers, call shape, argument keys,
// and the byte-exact target-prefix template. Code never hardcodes a family.
struct AdapterProfile {
    std::string name;
    std::string family;             // "instructed" | "reasoning"
    std::string prompt_template;    // must use ${functions} and ${query}
    std::string function_template;  // ${name}, ${description} (raw), ${parameters}, ${param_names}
    std::string function_separator;
    std::string toolcall_open;
    std::string toolcall_close;     // empty when the family has no closing marker
    bool marker_optional = false;   // family also emits bare calls without the marker
    std::string think_open;         // reasoning families only
    std::string think_close;
    enum class CallShape { SingleRecord, RecordList };
    CallShape call_shape = CallShape::SingleRecord;
    std::vector<std::string> argument_keys;  // accepted keys; first one is canonical
    std::string target_template;    // ${name}; expands to the byte-exact target prefix

    bool reasoning() const { return family == "reasoning"; }
    // The exact byte sequence of an empty reasoning block.
    std::string empty_think() const { return think_open + "\n\n" + think_close; }

    void validate() const;

    json to_json() const;
    static AdapterProfile from_json(const json& j);
    static AdapterProfile load(const std::string& path);
};

}  // namespace fch::adapters
