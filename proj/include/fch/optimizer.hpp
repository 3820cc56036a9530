#pragma once

#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fch/evaluator.hpp"

namespace fch::optimizer {

using lmbridge::TokenId;

struct AttackConfig {
    size_t suffix_len = 60;
    size_t top_k = 256;
    size_t batch_size = 128;
    size_t max_epochs = 250;
    std::uint32_t seed = 42;
    size_t success_check_every = 10;
    size_t checkpoint_every = 20;
    std::string init_text = " x";  // repeated until suffix_len tokens
    size_t max_new_tokens = 64;    // generation budget for success checks
    bool stop_on_success = false;  // keep optimizing after the first full hijack
    bool record_suffix_history = false;

    void validate() const;
};

// A set of attack items that share one target function name; the adversarial
// suffix is optimized jointly (sum of per-item losses and gradients). A single
// item reduces to the per-sample attack.
struct AttackTask {
    std::vector<Payload> items;  // each carries its own query and target
    adapters::AdapterProfile profile;
    lmbridge::LmBridge* bridge = nullptr;

    const std::string& target_name() const;
    void validate() const;
};

struct AttackState {
    std::vector<TokenId> suffix_tokens;
    size_t epoch = 0;
    std::vector<double> loss_history;  // summed objective after each epoch
    std::vector<std::vector<double>> per_item_loss_history;
    std::vector<TokenId> best_suffix;
    double best_loss = std::numeric_limits<double>::infinity();
    std::optional<size_t> hijacking_index;  // first epoch with every item hijacked
};

struct AttackResult {
    AttackState state;
    std::string suffix_text;           // decoded best suffix
    FunctionSpec poisoned_function;    // target function with the suffix deployed
    bool success = false;              // hijacking_index was set
    std::vector<bool> item_success;    // per-item status at the last check
    std::vector<evaluator::SuffixCheckpoint> checkpoints;
    std::vector<evaluator::EvalRecord> check_records;  // success-check evaluations
    bool topk_truncated = false;       // top_k exceeded the allowed-token count
    size_t filter_fallbacks = 0;       // batches where every candidate failed the filter
    std::vector<std::vector<TokenId>> suffix_history;  // per epoch, when recorded
};

// " x"-style default initialization: encode init_text, cycle to suffix_len.
std::vector<TokenId> init_suffix(const lmbridge::TokenCodec& codec, const AttackConfig& config);

// Per suffix position, the k allowed replacement tokens with the most negative
// gradient (ties -> lower token id). k is clamped to the allowed count, setting
// *truncated. Rows with fewer than k allowed entries are an error upstream
// (allowed must be non-empty).
std::vector<std::vector<TokenId>> topk_candidates(const lmbridge::GradientReport& gradient,
                                                  const std::vector<TokenId>& allowed, size_t k,
                                                  bool* truncated = nullptr);

// One single-token substitution: (suffix position, replacement token).
struct Substitution {
    size_t position = 0;
    TokenId token = 0;
};

// batch_size draws of (uniform position, uniform candidate) with replacement;
// when batch_size covers every candidate, enumerates each exactly once instead.
std::vector<Substitution> sample_candidate_batch(
    const std::vector<std::vector<TokenId>>& candidates, size_t batch_size, std::mt19937& rng);

// Keeps substitutions whose whole modified suffix survives a decode->encode
// round trip (what a deployed, text-form suffix would re-tokenize to).
std::vector<Substitution> filter_retokenizable(const lmbridge::TokenCodec& codec,
                                               const std::vector<TokenId>& suffix,
                                               const std::vector<Substitution>& batch);

struct StepOutcome {
    double total_loss = 0.0;               // objective of the chosen suffix
    std::vector<double> item_losses;       // per-item breakdown of the chosen suffix
    bool topk_truncated = false;
    bool filter_fallback = false;
};

// One optimization epoch: joint gradient, top-k, candidate batch, retokenization
// filter, incumbent-inclusive argmin, state update. Deterministic given rng state.
StepOutcome attack_step(const AttackTask& task, AttackState& state, const AttackConfig& config,
                        std::mt19937& rng);

// Full loop with success checks, checkpoints, and result assembly.
AttackResult run_attack(const AttackTask& task, const AttackConfig& config);

}  // namespace fch::optimizer
