#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fch/toolcall.hpp"

namespace fch {

// Closed set of declared parameter types.
enum class ParamType { String, Integer, Number, Boolean, Array, Object };

std::string to_string(ParamType t);
// Parses a declared type name; maps common aliases (float->number, dict->object,
// tuple->array). Unknown names -> std::invalid_argument.
ParamType param_type_from_string(const std::string& s);

struct ParamSpec {
    ParamType type = ParamType::String;
    std::string description;
    std::vector<json> enum_values;  // empty = unrestricted
    json items;                     // array item schema, null when absent

    bool operator==(const ParamSpec&) const = default;
};

// One callable tool: name, natural-language description, parameter schema.
struct FunctionSpec {
    std::string name;
    std::string description;
    std::vector<std::pair<std::string, ParamSpec>> properties;  // declaration order kept
    std::vector<std::string> required;

    bool operator==(const FunctionSpec&) const = default;

    const ParamSpec* find_param(const std::string& param) const;
    bool declares(const std::string& param) const { return find_param(param) != nullptr; }

    // Throws std::invalid_argument on violated invariants (empty name, duplicate
    // params, required name not declared).
    void validate() const;

    json to_json() const;
    static FunctionSpec from_json(const json& j);
};

}  // namespace fch
