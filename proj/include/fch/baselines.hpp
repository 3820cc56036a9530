#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fch/evaluator.hpp"
#include "fch/textgen_client.hpp"

namespace fch::baselines {

// Prompt-based comparison attacks. Injection asks a writing model to invent a
// function that outcompetes the listed ones; description manipulation rewrites
// the pre-selected target's description (benign = neutral paraphrase control,
// direct = superiority-asserting variant).
enum class BaselineKind {
    FunctionInjectionZS,
    FunctionInjectionFS,
    MpmaBenign,
    MpmaDirect,
};

BaselineKind baseline_kind_from_string(const std::string& text);
std::string to_string(BaselineKind kind);

struct BaselineSpec {
    BaselineKind kind = BaselineKind::FunctionInjectionZS;
    std::string generator_model;  // informational; recorded in outputs
    size_t retry_limit = 3;
};

enum class InjectionMode { ZeroShot, FewShot };

// Asks the client to design a function tailored to the query (zero-shot) or to
// outcompete the provided list (few-shot). The reply must parse into a valid
// function record; malformed replies are retried up to retry_limit, then a
// textgen_error carrying the raw reply is thrown.
FunctionSpec generate_injected_function(const std::string& query,
                                        const std::vector<FunctionSpec>& functions,
                                        InjectionMode mode, textgen::TextGenClient& client,
                                        size_t retry_limit = 3);

enum class RewriteMode { Benign, Direct };

// Returns `fn` with only its description replaced by the client's rewrite;
// name and parameter schema are preserved byte-for-byte.
FunctionSpec mpma_rewrite(const FunctionSpec& fn, RewriteMode mode,
                          textgen::TextGenClient& client, size_t retry_limit = 3);

// Applies `spec`'s transformation to a copy of the payload. Injection appends
// the generated function and makes it the target; rewriting requires an
// existing target. Inputs are never mutated.
Payload apply_baseline(const Payload& payload, const BaselineSpec& spec,
                       textgen::TextGenClient& client);

struct BaselineFailure {
    std::string payload_id;
    std::string error;
};

struct BaselineOutcome {
    evaluator::AsrCurve curve;  // single point at epoch 0
    std::vector<evaluator::EvalRecord> records;
    std::vector<Payload> transformed;  // payloads as evaluated
    std::vector<BaselineFailure> generation_failures;  // excluded from the curve
};

// Transforms and scores every payload; generation failures are excluded from
// the ASR denominator and reported. Empty input is an error.
BaselineOutcome run_baseline_eval(const std::vector<Payload>& payloads, const BaselineSpec& spec,
                                  textgen::TextGenClient& client, lmbridge::LmBridge& bridge,
                                  const adapters::AdapterProfile& profile,
                                  const evaluator::EvalOptions& options = {});

}  // namespace fch::baselines
