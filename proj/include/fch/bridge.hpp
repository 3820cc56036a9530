#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fch/codec.hpp"

namespace fch::lmbridge {

// One scoring request: a full token sequence and the half-open span of target
// tokens whose probability is being forced.
struct LossItem {
    std::vector<TokenId> token_ids;
    SpanRange target_span;
};

// Gradient of the target loss w.r.t. the relaxed one-hot encoding of each
// suffix position: rows index suffix positions, columns index the vocabulary.
struct GradientReport {
    SpanRange suffix_span;
    std::vector<std::vector<double>> rows;
};

// Minimal contract every model backend satisfies. Losses are natural-log,
// summed (not averaged) over the target span, and computed per sequence
// independently of batch composition.
class LmBridge {
public:
    virtual ~LmBridge() = default;

    virtual const TokenCodec& codec() const = 0;
    virtual bool supports_gradient() const { return false; }
    virtual bool supports_batch() const { return false; }

    // -sum_{t in target_span} ln P(token_t | tokens_<t), one value per item.
    virtual std::vector<double> target_loss(const std::vector<LossItem>& batch) = 0;

    // Backends without gradient access throw capability_error.
    virtual GradientReport suffix_gradient(const std::vector<TokenId>& token_ids,
                                           SpanRange suffix_span, SpanRange target_span);

    // Next-token logits after consuming the whole sequence.
    virtual std::vector<double> next_logits(const std::vector<TokenId>& token_ids) = 0;

    // Argmax decoding; stops at end-of-turn or after max_new_tokens.
    virtual std::vector<TokenId> greedy_generate(const std::vector<TokenId>& prompt,
                                                 size_t max_new_tokens) = 0;

    std::string generate_text(const std::vector<TokenId>& prompt, size_t max_new_tokens);
};

// Shape and knobs of the toy model. copy_bias > 0 adds an analytic induction
// mechanism (the token that followed a previous occurrence of the current
// copy_order-gram gets a logit boost) used to build reachable hijack scenarios.
struct ToyDims {
    size_t layers = 2;
    size_t dim = 32;
    size_t max_len = 4096;
    double init_scale = 1.0;
    double copy_bias = 0.0;
    int copy_order = 2;
};

// Tiny deterministic causal transformer over a byte-level codec.
// vocab_size >= 16; same seed+shape => bit-identical parameters.
std::unique_ptr<LmBridge> make_toy_bridge(std::uint64_t seed, size_t vocab_size,
                                          const ToyDims& dims = {});

}  // namespace fch::lmbridge
