#include "fch/augment.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <set>
#include <sstream>

#include "fch/errors.hpp"
#include "fch/parse.hpp"
#include "fch/util.hpp"

namespace fch::augment {

namespace {

constexpr int kManifestSchemaVersion = 1;

std::string strategy_tag(int strategy) {
    switch (strategy) {
        case 1: return "formulation_diversity";
        case 2: return "argument_variation";
        case 3: return "intent_redirection";
        default: throw config_error("unknown augmentation strategy " + std::to_string(strategy));
    }
}

std::string build_prompt(const AugmentRequest& request) {
    std::string system;
    switch (request.strategy) {
        case 1:
            system =
                "Reformulate the given prompt in 10 different ways. The intent should remain "
                "the same. Provide your answer in a list.";
            break;
        case 2:
            system =
                "Rewrite the given prompt with 10 different formulation request for a "
                "function-call. The function called should remain the same, but each prompt "
                "should trigger different parameters (different numbers, cities or countries, "
                "objects or person if allowed by the function's specification). Provide your "
                "10 different prompts in a list. Here are the parameters of the function: " +
                request.ground_truth.to_json().at("parameters").dump() + ".";
            break;
        case 3:
            system =
                "Rewrite the given prompt with 5 different formulation request for a "
                "function-call. The prompt that the user will input seeks to trigger this "
                "function: " +
                request.ground_truth.to_json().dump() +
                ". The queries that you will generate should now seek to call the following "
                "function: " +
                request.new_intent->to_json().dump() + ".";
            break;
        default:
            throw config_error("unknown augmentation strategy " +
                               std::to_string(request.strategy));
    }
    return system + "\n\n" + request.query;
}

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::string strip_quotes(std::string text) {
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"')
        text = text.substr(1, text.size() - 2);
    return text;
}

// "1. ...", "2) ...", "- ...", "* ..." -> the payload after the bullet.
std::optional<std::string> strip_bullet(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t digits = i;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits])))
        ++digits;
    if (digits > i && digits < line.size() && (line[digits] == '.' || line[digits] == ')'))
        return trim(line.substr(digits + 1));
    if (i < line.size() && (line[i] == '-' || line[i] == '*') && i + 1 < line.size() &&
        line[i + 1] == ' ')
        return trim(line.substr(i + 2));
    return std::nullopt;
}

std::optional<std::vector<std::string>> parse_reply_list(const std::string& raw) {
    if (const auto body = adapters::extract_first_json(raw)) {
        try {
            const json parsed = json::parse(*body);
            if (parsed.is_array()) {
                std::vector<std::string> out;
                for (const auto& item : parsed) {
                    if (item.is_string())
                        out.push_back(item.get<std::string>());
                    else if (item.is_object() && item.contains("query") &&
                             item["query"].is_string())
                        out.push_back(item["query"].get<std::string>());
                    else
                        return std::nullopt;
                }
                if (!out.empty()) return out;
            }
        } catch (const json::exception&) {
            // fall through to line parsing
        }
    }
    std::vector<std::string> out;
    std::istringstream stream(raw);
    std::string line;
    while (std::getline(stream, line)) {
        const auto item = strip_bullet(line);
        if (item && !item->empty()) out.push_back(strip_quotes(*item));
    }
    if (out.empty()) return std::nullopt;
    return out;
}

}  // namespace

void AugmentRequest::validate() const {
    if (strategy < 1 || strategy > 3)
        throw config_error("augmentation strategy must be 1, 2 or 3");
    if (query.empty()) throw config_error("augmentation request has an empty source query");
    ground_truth.validate();
    if (strategy == 3) {
        if (!new_intent) throw config_error("strategy 3 requires the new intended function");
        new_intent->validate();
        if (new_intent->name == ground_truth.name)
            throw config_error("strategy 3 new intent must differ from the ground truth");
    }
}

QueryBatch generate_query_batch(const AugmentRequest& request, textgen::TextGenClient& client,
                                size_t retry_limit) {
    request.validate();
    const size_t want = request.strategy == 3 ? 5 : 10;
    const std::string prompt = build_prompt(request);

    std::string raw;
    std::string last_error;
    std::optional<std::vector<std::string>> accepted;
    bool regenerated_for_source_dupe = false;
    for (size_t attempt = 0; attempt <= retry_limit && !accepted; ++attempt) {
        raw = client.complete(prompt);
        auto queries = parse_reply_list(raw);
        if (!queries) {
            last_error = "reply is neither a JSON array nor a recognizable list";
            continue;
        }
        if (queries->size() != want) {
            last_error = "expected " + std::to_string(want) + " queries, got " +
                         std::to_string(queries->size());
            continue;
        }
        std::set<std::string> unique(queries->begin(), queries->end());
        if (unique.size() != queries->size()) {
            last_error = "reply contains duplicate queries";
            continue;
        }
        const bool echoes_source =
            std::find(queries->begin(), queries->end(), request.query) != queries->end();
        if (echoes_source && !regenerated_for_source_dupe) {
            regenerated_for_source_dupe = true;
            last_error = "a generated query repeats the source verbatim";
            continue;
        }
        if (echoes_source)
            std::cerr << "warning: accepted a batch echoing its source query verbatim\n";
        accepted = std::move(*queries);
    }
    if (!accepted)
        throw textgen_error("query batch generation failed after " +
                                std::to_string(retry_limit + 1) + " attempts: " + last_error,
                            raw);

    QueryBatch batch;
    batch.function_name =
        request.strategy == 3 ? request.new_intent->name : request.ground_truth.name;
    batch.strategy = strategy_tag(request.strategy);
    batch.queries = std::move(*accepted);
    batch.validate();
    return batch;
}

QueryBatch assemble_multi_intent_batch(const Payload& payload,
                                       const std::map<std::string, QueryBatch>& parts) {
    payload.validate();
    if (!payload.ground_truth_index)
        throw config_error("payload '" + payload.id + "' has no ground-truth function");
    if (!payload.target_index)
        throw config_error("payload '" + payload.id + "' has no target function");
    const size_t n = payload.functions.size();
    if (n != 3 && n != 4)
        throw config_error("multi-intent assembly needs a 3- or 4-function payload; '" +
                           payload.id + "' has " + std::to_string(n));

    const std::string gt_name = payload.ground_truth().name;
    std::vector<std::string> others;
    for (size_t i = 0; i < n; ++i) {
        if (i == *payload.ground_truth_index || i == *payload.target_index) continue;
        others.push_back(payload.functions[i].name);
    }

    const std::vector<size_t> counts =
        n == 3 ? std::vector<size_t>{5, 5} : std::vector<size_t>{4, 3, 3};

    QueryBatch out;
    out.function_name = gt_name;
    out.strategy = "multi_intent";
    const auto take = [&](const std::string& name, size_t count) {
        const auto it = parts.find(name);
        if (it == parts.end())
            throw config_error("multi-intent assembly: no query batch for intent '" + name +
                               "'");
        if (it->second.queries.size() < count)
            throw config_error("multi-intent assembly: intent '" + name + "' offers " +
                               std::to_string(it->second.queries.size()) + " queries, need " +
                               std::to_string(count));
        for (size_t i = 0; i < count; ++i) {
            out.queries.push_back(it->second.queries[i]);
            out.intents.push_back(name);
        }
    };
    take(gt_name, counts[0]);
    for (size_t i = 0; i < others.size(); ++i) take(others[i], counts[i + 1]);
    out.validate();
    return out;
}

json BenchmarkManifest::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["generator_model"] = generator_model;
    j["created_at"] = created_at;
    j["batches"] = json::array();
    for (const auto& batch : batches) j["batches"].push_back(batch.to_json());
    return j;
}

BenchmarkManifest BenchmarkManifest::from_json(const json& j) {
    BenchmarkManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion)
        throw config_error("unsupported benchmark manifest schema version " +
                           std::to_string(m.schema_version));
    m.generator_model = j.value("generator_model", std::string{});
    m.created_at = j.value("created_at", std::string{});
    for (const auto& entry : j.at("batches")) m.batches.push_back(QueryBatch::from_json(entry));
    return m;
}

BenchmarkManifest persist_benchmark(const std::vector<QueryBatch>& batches,
                                    const std::string& path,
                                    const std::string& generator_model) {
    for (const auto& batch : batches) batch.validate();
    BenchmarkManifest manifest;
    manifest.schema_version = kManifestSchemaVersion;
    manifest.generator_model = generator_model;
    manifest.created_at = util::utc_timestamp();
    manifest.batches = batches;
    util::write_file(path, manifest.to_json().dump(2) + "\n");
    return manifest;
}

BenchmarkManifest load_benchmark(const std::string& path) {
    try {
        return BenchmarkManifest::from_json(json::parse(util::read_file(path)));
    } catch (const json::parse_error& e) {
        throw config_error("benchmark manifest '" + path + "': " + e.what());
    }
}

}  // namespace fch::augment
