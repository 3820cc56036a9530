#pragma once

#include <string>

#include <json.hpp>

namespace fch {

using json = nlohmann::ordered_json;

// A structured tool invocation: function name plus a JSON object of arguments.
struct ToolCall {
    std::string name;
    json arguments = json::object();

    bool operator==(const ToolCall& other) const {
        return name == other.name && arguments == other.arguments;
    }

    json to_json() const;
    static ToolCall from_json(const json& j);
};

}  // namespace fch
