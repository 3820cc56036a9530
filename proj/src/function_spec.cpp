#include "fch/function_spec.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace fch {

json ToolCall::to_json() const {
    json j;
    j["name"] = name;
    j["arguments"] = arguments;
    return j;
}

ToolCall ToolCall::from_json(const json& j) {
    ToolCall call;
    call.name = j.at("name").get<std::string>();
    if (j.contains("arguments") && !j["arguments"].is_null()) {
        if (!j["arguments"].is_object())
            throw std::invalid_argument("tool call arguments must be a JSON object");
        call.arguments = j["arguments"];
    }
    return call;
}

std::string to_string(ParamType t) {
    switch (t) {
        case ParamType::String: return "string";
        case ParamType::Integer: return "integer";
        case ParamType::Number: return "number";
        case ParamType::Boolean: return "boolean";
        case ParamType::Array: return "array";
        case ParamType::Object: return "object";
    }
    throw std::logic_error("unreachable param type");
}

ParamType param_type_from_string(const std::string& s) {
    if (s == "string") return ParamType::String;
    if (s == "integer" || s == "int") return ParamType::Integer;
    if (s == "number" || s == "float" || s == "double") return ParamType::Number;
    if (s == "boolean" || s == "bool") return ParamType::Boolean;
    if (s == "array" || s == "tuple" || s == "list") return ParamType::Array;
    if (s == "object" || s == "dict") return ParamType::Object;
    throw std::invalid_argument("unknown parameter type: '" + s + "'");
}

const ParamSpec* FunctionSpec::find_param(const std::string& param) const {
    for (const auto& [key, spec] : properties)
        if (key == param) return &spec;
    return nullptr;
}

void FunctionSpec::validate() const {
    if (name.empty()) throw std::invalid_argument("function name must be non-empty");
    std::set<std::string> seen;
    for (const auto& [key, spec] : properties) {
        if (key.empty()) throw std::invalid_argument("function '" + name + "': empty parameter name");
        if (!seen.insert(key).second)
            throw std::invalid_argument("function '" + name + "': duplicate parameter '" + key + "'");
    }
    for (const auto& req : required)
        if (!declares(req))
            throw std::invalid_argument("function '" + name + "': required parameter '" + req +
                                        "' is not declared");
}

json FunctionSpec::to_json() const {
    json props = json::object();
    for (const auto& [key, spec] : properties) {
        json p;
        p["type"] = to_string(spec.type);
        p["description"] = spec.description;
        if (!spec.enum_values.empty()) p["enum"] = spec.enum_values;
        if (!spec.items.is_null()) p["items"] = spec.items;
        props[key] = std::move(p);
    }
    json j;
    j["name"] = name;
    j["description"] = description;
    j["parameters"] = {{"type", "object"}, {"properties", std::move(props)}, {"required", required}};
    return j;
}

FunctionSpec FunctionSpec::from_json(const json& j) {
    FunctionSpec fn;
    fn.name = j.at("name").get<std::string>();
    fn.description = j.value("description", std::string{});
    if (j.contains("parameters") && !j["parameters"].is_null()) {
        const json& params = j["parameters"];
        if (!params.is_object())
            throw std::invalid_argument("function '" + fn.name + "': parameters must be an object");
        if (params.contains("properties")) {
            for (const auto& [key, val] : params["properties"].items()) {
                ParamSpec spec;
                spec.type = param_type_from_string(val.value("type", "string"));
                spec.description = val.value("description", std::string{});
                if (val.contains("enum"))
                    spec.enum_values.assign(val["enum"].begin(), val["enum"].end());
                if (val.contains("items")) spec.items = val["items"];
                fn.properties.emplace_back(key, std::move(spec));
            }
        }
        if (params.contains("required"))
            fn.required = params["required"].get<std::vector<std::string>>();
    }
    fn.validate();
    return fn;
}

}  // namespace fch
