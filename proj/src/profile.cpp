#include "fch/profile.hpp"

#include <stdexcept>

#include "fch/errors.hpp"
#include "fch/util.hpp"

namespace fch::adapters {

void AdapterProfile::validate() const {
    if (name.empty()) throw config_error("profile: empty name");
    if (family != "instructed" && family != "reasoning")
        throw config_error("profile '" + name + "': family must be 'instructed' or 'reasoning'");
    if (prompt_template.find("${functions}") == std::string::npos)
        throw config_error("profile '" + name + "': prompt_template lacks ${functions}");
    if (prompt_template.find("${query}") == std::string::npos)
        throw config_error("profile '" + name + "': prompt_template lacks ${query}");
    if (function_template.find("${name}") == std::string::npos)
        throw config_error("profile '" + name + "': function_template lacks ${name}");
    if (target_template.find("${name}") == std::string::npos)
        throw config_error("profile '" + name + "': target_template lacks ${name}");
    if (argument_keys.empty())
        throw config_error("profile '" + name + "': argument_keys must not be empty");
    if (reasoning() && (think_open.empty() || think_close.empty()))
        throw config_error("profile '" + name + "': reasoning family needs think markers");
}

json AdapterProfile::to_json() const {
    json j;
    j["name"] = name;
    j["family"] = family;
    j["prompt_template"] = prompt_template;
    j["function_template"] = function_template;
    j["function_separator"] = function_separator;
    j["toolcall_open"] = toolcall_open;
    j["toolcall_close"] = toolcall_close;
    j["marker_optional"] = marker_optional;
    j["think_open"] = think_open;
    j["think_close"] = think_close;
    j["call_shape"] = call_shape == CallShape::SingleRecord ? "single-record" : "record-list";
    j["argument_keys"] = argument_keys;
    j["target_template"] = target_template;
    return j;
}

AdapterProfile AdapterProfile::from_json(const json& j) {
    AdapterProfile p;
    p.name = j.at("name").get<std::string>();
    p.family = j.at("family").get<std::string>();
    p.prompt_template = j.at("prompt_template").get<std::string>();
    p.function_template = j.at("function_template").get<std::string>();
    p.function_separator = j.value("function_separator", std::string{", "});
    p.toolcall_open = j.at("toolcall_open").get<std::string>();
    p.toolcall_close = j.value("toolcall_close", std::string{});
    p.marker_optional = j.value("marker_optional", false);
    p.think_open = j.value("think_open", std::string{});
    p.think_close = j.value("think_close", std::string{});
    const std::string shape = j.value("call_shape", "single-record");
    if (shape == "single-record") {
        p.call_shape = CallShape::SingleRecord;
    } else if (shape == "record-list") {
        p.call_shape = CallShape::RecordList;
    } else {
        throw config_error("profile '" + p.name + "': unknown call_shape '" + shape + "'");
    }
    p.argument_keys = j.at("argument_keys").get<std::vector<std::string>>();
    p.target_template = j.at("target_template").get<std::string>();
    p.validate();
    return p;
}

AdapterProfile AdapterProfile::load(const std::string& path) {
    try {
        return from_json(json::parse(util::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("profile file " + path + ": " + e.what());
    }
}

}  // namespace fch::adapters
