#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fch/bridge.hpp"
#include "fch/parse.hpp"
#include "fch/payload.hpp"
#include "fch/profile.hpp"

namespace fch::evaluator {

struct EvalOptions {
    size_t max_new_tokens = 64;
};

// One scored model completion. Infrastructure failures land in `error`;
// evaluation never throws past this record.
struct EvalRecord {
    std::string payload_id;
    std::string query;
    std::string mode;  // "attack" | "standard"
    std::optional<size_t> epoch;
    std::string reference_name;  // target (attack) or ground truth (standard)
    std::string parse_kind = "no_tool_call";  // "ok" | "no_tool_call" | "malformed"
    bool fn_match = false;
    bool slot_valid = false;
    std::optional<bool> thinking_suppressed;
    std::optional<ToolCall> call;
    std::string raw_output;  // raw model bytes; JSON transport maps them via latin-1
    std::string error;

    // Slot-filling success only counts when the right function was called,
    // which is what keeps SF ASR <= FN ASR at the aggregate level.
    bool sf_success() const { return fn_match && slot_valid; }

    json to_json() const;
    static EvalRecord from_json(const json& j);
};

// Exact, case-sensitive name match.
bool match_function_name(const ToolCall& call, const std::string& target_name);

// Schema validity: required ⊆ provided ⊆ declared, and every provided value's
// runtime type matches its declaration (integers satisfy "number"; a
// string-encoded number does not satisfy a numeric declaration).
bool validate_slot_filling(const ToolCall& call, const FunctionSpec& fn);

// True iff the output begins with the family's exact empty-reasoning bytes;
// nullopt for non-reasoning families.
std::optional<bool> check_thinking_suppressed(const std::string& raw_output,
                                              const adapters::AdapterProfile& profile);

enum class EvalMode { Attack, Standard };

// Renders (injecting suffix_text when given), generates, parses, scores.
EvalRecord evaluate_payload(const Payload& payload, const std::optional<std::string>& suffix_text,
                            lmbridge::LmBridge& bridge, const adapters::AdapterProfile& profile,
                            EvalMode mode, const EvalOptions& options = {});

struct AsrPoint {
    size_t epoch = 0;
    double fn_asr = 0.0;
    double sf_asr = 0.0;
    size_t n = 0;
};

struct AsrCurve {
    std::string label;
    std::vector<AsrPoint> points;
};

enum class CurveMode {
    CumulativeBest,  // a sample counts from its first success onward (monotone)
    Instantaneous,   // per-epoch success fraction (transfer curves may dip)
};

AsrCurve compute_asr_curve(const std::vector<EvalRecord>& records,
                           CurveMode mode = CurveMode::CumulativeBest,
                           const std::string& label = "");

// First epoch at which each sample's function-name match succeeded.
std::map<std::string, std::optional<size_t>> hijacking_indices(
    const std::vector<EvalRecord>& records);

// Optimizer checkpoint consumed by transfer evaluation.
struct SuffixCheckpoint {
    size_t epoch = 0;
    std::vector<lmbridge::TokenId> suffix_tokens;
    std::string suffix_text;
    std::vector<double> item_losses;

    json to_json() const;
    static SuffixCheckpoint from_json(const json& j);
};

struct EvalSet {
    std::string label;
    std::vector<Payload> items;  // each payload carries its own query and target
};

struct TransferResult {
    AsrCurve curve;  // instantaneous, one point per evaluated checkpoint
    std::vector<EvalRecord> records;
};

// Applies each checkpoint suffix (at the given epoch cadence) to every item of
// every set and scores the transfer.
std::vector<TransferResult> transfer_evaluate(const std::vector<SuffixCheckpoint>& checkpoints,
                                              const std::vector<EvalSet>& sets, size_t cadence,
                                              lmbridge::LmBridge& bridge,
                                              const adapters::AdapterProfile& profile,
                                              const EvalOptions& options = {});

}  // namespace fch::evaluator
