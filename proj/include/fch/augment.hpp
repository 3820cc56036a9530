#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fch/payload.hpp"
#include "fch/textgen_client.hpp"

namespace fch::augment {

// Query-batch construction for universal-suffix training/evaluation. Three
// complementary strategies:
//   1 — formulation diversity: 10 paraphrases with identical intent;
//   2 — argument variation: 10 queries hitting the same function with
//       different parameter values;
//   3 — intent redirection: 5 queries aimed at a different listed function.
struct AugmentRequest {
    int strategy = 1;  // 1 | 2 | 3
    std::string query;
    FunctionSpec ground_truth;
    std::optional<FunctionSpec> new_intent;  // strategy 3 only

    void validate() const;
};

// Builds the generation prompt and parses the client reply (a JSON array or a
// numbered/bulleted list) into exactly the strategy's required count — 10 for
// strategies 1 and 2, 5 for strategy 3. Wrong counts are retried; persistent
// failure raises textgen_error carrying the raw reply. Paraphrases identical
// to the source are regenerated once, then accepted with a stderr warning.
QueryBatch generate_query_batch(const AugmentRequest& request, textgen::TextGenClient& client,
                                size_t retry_limit = 3);

// Mixes single-intent batches into one 10-query multi-intent batch:
//   3-function payload -> 5 ground-truth paraphrases + 5 third-function queries
//   4-function payload -> 4 ground-truth + 3 + 3 across the two other functions
// `parts` maps function name -> its batch; the ground-truth part comes from
// strategy 1. Functions are taken in payload order; the target is skipped
// (its queries would not be independent intents).
QueryBatch assemble_multi_intent_batch(const Payload& payload,
                                       const std::map<std::string, QueryBatch>& parts);

struct BenchmarkManifest {
    int schema_version = 1;
    std::string generator_model;
    std::string created_at;  // ISO-8601 UTC
    std::vector<QueryBatch> batches;

    json to_json() const;
    static BenchmarkManifest from_json(const json& j);
};

// Writes the batches plus provenance as a versioned JSON manifest.
BenchmarkManifest persist_benchmark(const std::vector<QueryBatch>& batches,
                                    const std::string& path,
                                    const std::string& generator_model);

BenchmarkManifest load_benchmark(const std::string& path);

}  // namespace fch::augment
