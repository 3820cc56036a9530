#pragma once

#include <random>
#include <string>
#include <vector>

#include "fch/payload.hpp"

namespace fch::corpus {

// How the hijack target is chosen among a payload's functions.
enum class TargetPolicy {
    SecondPosition,  // reorder to [ground truth, target, rest...]; target = first non-GT
    TargetFirst,     // reorder to [target, ground truth, rest...]
    FixedIndex,      // keep order, take the function at a given index
};

struct TargetSelection {
    TargetPolicy policy = TargetPolicy::SecondPosition;
    size_t fixed_index = 0;  // only read for FixedIndex
};

// Loads a BFCL-style JSON-lines dataset; `answers_path`, when given, resolves
// each record's ground-truth function and reference call. Malformed records
// raise corpus_error carrying the record id.
std::vector<Payload> load_bfcl(const std::string& dataset_path,
                               const std::string& answers_path = "");

// Loads distractor functions from a BFCL-style or {"functions": [...]} file.
NoisePool load_noise_pool(const std::string& path);

// Returns a copy with target_index (and possibly a new function order) set.
// Requires ground_truth_index and at least two functions.
Payload select_target(const Payload& payload, const TargetSelection& selection = {});

// Appends n pool functions sampled without replacement; colliding names get a
// numeric disambiguator suffix. Same rng state -> identical result.
Payload add_noise_functions(const Payload& payload, const NoisePool& pool, size_t n,
                            std::mt19937& rng);

// Reorders functions: result.functions[i] = payload.functions[permutation[i]].
// ground_truth_index / target_index are remapped to follow their functions.
Payload permute_functions(const Payload& payload, const std::vector<size_t>& permutation);

enum class PerturbationKind { Position, Count };

// Position: every ordering of every subset containing both ground truth and
// target, minus the original ordering (7 variants for 3 functions).
// Count: variants with 2,3,4,5 functions — [GT, target] plus pool distractors.
std::vector<Payload> build_perturbation_batches(const Payload& payload, const NoisePool& pool,
                                                PerturbationKind kind);

// Canonical JSON (de)serialization with stable key order.
Payload load_payload(const std::string& path);
void save_payload(const Payload& payload, const std::string& path);
std::vector<Payload> load_payload_lines(const std::string& path);
void save_payload_lines(const std::vector<Payload>& payloads, const std::string& path);

}  // namespace fch::corpus
