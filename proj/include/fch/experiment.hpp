#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fch/augment.hpp"
#include "fch/baselines.hpp"
#include "fch/corpus.hpp"
#include "fch/optimizer.hpp"

namespace fch::experiment {

inline constexpr const char* kVersionStamp = "fchijack 0.1.0";
inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kRecordSchema = "eval_record/v1";

enum class Scenario {
    Direct,                // one attack per payload
    UniversalQuery,        // one suffix over a query batch
    UniversalPayload,      // one suffix over payload perturbation variants
    PerturbationTransfer,  // attack once, transfer checkpoints to noised payloads
    Baseline,              // prompt-based comparison attacks
    Standard,              // clean accuracy, no attack
};

Scenario scenario_from_string(const std::string& text);
std::string to_string(Scenario scenario);

struct BridgeConfig {
    std::string kind = "toy";
    std::uint64_t seed = 42;
    size_t vocab_size = 257;
    lmbridge::ToyDims dims;

    json to_json() const;
    static BridgeConfig from_json(const json& j);
};

std::unique_ptr<lmbridge::LmBridge> make_bridge(const BridgeConfig& config);

struct ExperimentConfig {
    std::string name = "experiment";
    Scenario scenario = Scenario::Direct;

    std::string dataset_path;                // payload file (see dataset_format)
    std::string dataset_format = "payloads";  // "payloads" (JSON/JSONL) | "bfcl"
    std::string answers_path;                // bfcl only, optional
    std::string noise_pool_path;             // perturbation scenarios
    std::string profile_path;

    BridgeConfig bridge;
    optimizer::AttackConfig attack;
    corpus::TargetSelection target;
    bool select_targets = true;  // false = dataset already carries target_index

    std::string output_dir;
    std::uint32_t seed = 42;
    size_t max_samples = 0;  // 0 = no cap

    // perturbation_transfer
    std::vector<size_t> noise_levels = {1, 2, 3, 5, 10, 25};
    size_t noise_variants = 50;

    // universal_payload
    std::string perturbation_kind = "position";  // "position" | "count"

    // universal_query: benchmark manifest with query batches
    std::string benchmark_path;
    std::optional<size_t> batch_index;  // restrict to one batch

    // baseline
    std::string baseline_kind = "function_injection_zs";
    std::string textgen_fixture_path;  // offline client (preferred in CI)
    textgen::HttpClientConfig textgen_http;  // used when no fixture path given

    void validate() const;
    json to_json() const;
    static ExperimentConfig from_json(const json& j);
    // Reads a JSON config file, expanding ${ENV_VAR} references.
    static ExperimentConfig load(const std::string& path);
};

struct SampleEntry {
    std::string id;
    std::string file;    // relative to the run directory
    std::string status;  // "done" | "failed" | "resumed"
    std::string error;

    json to_json() const;
    static SampleEntry from_json(const json& j);
};

struct RunManifest {
    int schema_version = kManifestSchemaVersion;
    std::string version_stamp = kVersionStamp;
    std::string created_at;
    std::string finished_at;
    json config_snapshot;
    std::vector<SampleEntry> samples;
    std::vector<std::string> record_files;  // JSONL outputs, relative paths
    std::vector<std::string> curve_files;   // CSV outputs, relative paths
    bool sealed = false;

    size_t failed_count() const;

    json to_json() const;
    static RunManifest from_json(const json& j);
    static RunManifest load(const std::string& path);
};

// Dispatches the configured scenario, streaming one result file per sample
// into <output_dir>/samples/. Existing sample files are not recomputed
// (resume semantics). Per-sample failures are recorded and the run continues;
// configuration problems throw before any work starts. The sealed manifest is
// written to <output_dir>/manifest.json.
RunManifest run_experiment(const ExperimentConfig& config);

// JSON-lines persistence: first line is a schema header object, then one
// record per line. Round-trips exactly.
void write_records_jsonl(const std::vector<evaluator::EvalRecord>& records,
                         const std::string& path);
std::vector<evaluator::EvalRecord> read_records_jsonl(const std::string& path);

// CSV with the fixed header "epoch,fn_asr,sf_asr,n".
void write_curve_csv(const evaluator::AsrCurve& curve, const std::string& path);
evaluator::AsrCurve read_curve_csv(const std::string& path);

// Attack-result persistence used by the sample files.
json attack_result_to_json(const optimizer::AttackResult& result);

}  // namespace fch::experiment
