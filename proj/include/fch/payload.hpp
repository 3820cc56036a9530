#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fch/function_spec.hpp"

namespace fch {

// One attack sample: a user query plus the function list handed to the model.
// `target_index` marks the function the attacker wants called; `suffix_offset`,
// when set, marks where the managed adversarial region starts inside the target
// function's description (everything before it is the unpoisoned base text).
struct Payload {
    std::string id;
    std::vector<FunctionSpec> functions;
    std::optional<size_t> ground_truth_index;
    std::optional<size_t> target_index;
    std::string query;
    std::optional<ToolCall> ground_truth_call;
    std::optional<size_t> suffix_offset;

    bool operator==(const Payload&) const = default;

    const FunctionSpec& ground_truth() const;
    const FunctionSpec& target() const;

    // Invariants: at least one function; unique non-empty function names; indices
    // in range; ground_truth_index != target_index when both set; suffix_offset
    // within the target description. Throws std::invalid_argument.
    void validate() const;

    json to_json() const;
    static Payload from_json(const json& j);
};

// Queries sharing one intended function, used for universal attacks.
struct QueryBatch {
    std::string function_name;   // primary intent (the source payload's ground truth)
    std::vector<std::string> queries;
    std::string strategy;        // which generation strategy produced it
    std::vector<std::string> intents;  // per-query intent; empty = all function_name

    bool operator==(const QueryBatch&) const = default;

    // Intended function of query i (multi-intent batches override per query).
    const std::string& intent_of(size_t i) const;

    void validate() const;  // non-empty, pairwise-distinct queries

    json to_json() const;
    static QueryBatch from_json(const json& j);
};

// Out-of-distribution functions used as distractor noise.
struct NoisePool {
    std::vector<FunctionSpec> functions;

    void validate() const;  // unique names

    json to_json() const;
    static NoisePool from_json(const json& j);
};

}  // namespace fch
