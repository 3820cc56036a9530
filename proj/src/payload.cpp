#include "fch/payload.hpp"

#include <set>
#include <stdexcept>

namespace fch {

const FunctionSpec& Payload::ground_truth() const {
    if (!ground_truth_index) throw std::invalid_argument("payload '" + id + "' has no ground-truth index");
    return functions.at(*ground_truth_index);
}

const FunctionSpec& Payload::target() const {
    if (!target_index) throw std::invalid_argument("payload '" + id + "' has no target index");
    return functions.at(*target_index);
}

void Payload::validate() const {
    if (functions.empty()) throw std::invalid_argument("payload '" + id + "' has no functions");
    std::set<std::string> names;
    for (const auto& fn : functions) {
        fn.validate();
        if (!names.insert(fn.name).second)
            throw std::invalid_argument("payload '" + id + "': duplicate function name '" + fn.name + "'");
    }
    if (ground_truth_index && *ground_truth_index >= functions.size())
        throw std::invalid_argument("payload '" + id + "': ground_truth_index out of range");
    if (target_index && *target_index >= functions.size())
        throw std::invalid_argument("payload '" + id + "': target_index out of range");
    if (ground_truth_index && target_index && *ground_truth_index == *target_index)
        throw std::invalid_argument("payload '" + id + "': target must differ from ground truth");
    if (suffix_offset) {
        if (!target_index)
            throw std::invalid_argument("payload '" + id + "': suffix_offset without target_index");
        if (*suffix_offset > functions[*target_index].description.size())
            throw std::invalid_argument("payload '" + id + "': suffix_offset beyond target description");
    }
}

json Payload::to_json() const {
    json j;
    j["id"] = id;
    j["query"] = query;
    j["functions"] = json::array();
    for (const auto& fn : functions) j["functions"].push_back(fn.to_json());
    j["ground_truth_index"] = ground_truth_index ? json(*ground_truth_index) : json(nullptr);
    j["target_index"] = target_index ? json(*target_index) : json(nullptr);
    j["ground_truth_call"] = ground_truth_call ? ground_truth_call->to_json() : json(nullptr);
    if (suffix_offset) j["suffix_offset"] = *suffix_offset;
    return j;
}

Payload Payload::from_json(const json& j) {
    Payload p;
    p.id = j.at("id").is_string() ? j["id"].get<std::string>() : j["id"].dump();
    p.query = j.at("query").get<std::string>();
    for (const auto& fj : j.at("functions")) p.functions.push_back(FunctionSpec::from_json(fj));
    if (j.contains("ground_truth_index") && !j["ground_truth_index"].is_null())
        p.ground_truth_index = j["ground_truth_index"].get<size_t>();
    if (j.contains("target_index") && !j["target_index"].is_null())
        p.target_index = j["target_index"].get<size_t>();
    if (j.contains("ground_truth_call") && !j["ground_truth_call"].is_null())
        p.ground_truth_call = ToolCall::from_json(j["ground_truth_call"]);
    if (j.contains("suffix_offset") && !j["suffix_offset"].is_null())
        p.suffix_offset = j["suffix_offset"].get<size_t>();
    p.validate();
    return p;
}

const std::string& QueryBatch::intent_of(size_t i) const {
    if (i >= queries.size()) throw std::out_of_range("query index outside the batch");
    return intents.empty() ? function_name : intents[i];
}

void QueryBatch::validate() const {
    if (function_name.empty()) throw std::invalid_argument("query batch: empty function name");
    if (queries.empty()) throw std::invalid_argument("query batch: no queries");
    std::set<std::string> seen;
    for (const auto& q : queries)
        if (!seen.insert(q).second)
            throw std::invalid_argument("query batch for '" + function_name +
                                        "': duplicate query '" + q + "'");
    if (!intents.empty()) {
        if (intents.size() != queries.size())
            throw std::invalid_argument("query batch for '" + function_name +
                                        "': intents and queries differ in length");
        for (const auto& intent : intents)
            if (intent.empty())
                throw std::invalid_argument("query batch for '" + function_name +
                                            "': empty intent entry");
    }
}

json QueryBatch::to_json() const {
    json j;
    j["function_name"] = function_name;
    j["strategy"] = strategy;
    j["queries"] = queries;
    if (!intents.empty()) j["intents"] = intents;
    return j;
}

QueryBatch QueryBatch::from_json(const json& j) {
    QueryBatch b;
    b.function_name = j.at("function_name").get<std::string>();
    b.strategy = j.value("strategy", std::string{});
    b.queries = j.at("queries").get<std::vector<std::string>>();
    if (j.contains("intents")) b.intents = j["intents"].get<std::vector<std::string>>();
    b.validate();
    return b;
}

void NoisePool::validate() const {
    std::set<std::string> names;
    for (const auto& fn : functions) {
        fn.validate();
        if (!names.insert(fn.name).second)
            throw std::invalid_argument("noise pool: duplicate function name '" + fn.name + "'");
    }
}

json NoisePool::to_json() const {
    json j;
    j["functions"] = json::array();
    for (const auto& fn : functions) j["functions"].push_back(fn.to_json());
    return j;
}

NoisePool NoisePool::from_json(const json& j) {
    NoisePool pool;
    for (const auto& fj : j.at("functions")) pool.functions.push_back(FunctionSpec::from_json(fj));
    pool.validate();
    return pool;
}

}  // namespace fch
