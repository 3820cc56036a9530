#include <iostream>
#include <set>

#include "CLI11.hpp"

#include "fch/errors.hpp"
#include "fch/report.hpp"
#include "fch/util.hpp"

using namespace fch;

namespace {

// Flag storage for one experiment-style subcommand; values are applied over
// the loaded config only when the flag was actually given.
struct ExperimentFlags {
    std::string config_path;
    std::string dataset, dataset_format, answers, noise_pool, profile, out_dir;
    std::uint32_t seed = 42;
    size_t max_samples = 0;
    // attack
    size_t suffix_len = 60, top_k = 256, batch_size = 128, epochs = 250;
    size_t check_every = 10, checkpoint_every = 20, max_new_tokens = 64;
    std::string init_text = " x";
    bool stop_on_success = false;
    // bridge
    std::uint64_t bridge_seed = 42;
    size_t vocab_size = 257, layers = 2, dim = 32, max_len = 4096;
    double init_scale = 1.0, copy_bias = 0.0;
    int copy_order = 2;
    // target
    std::string target_policy;
    size_t fixed_index = 0;
    bool no_select_targets = false;
    // scenario extras
    std::vector<size_t> noise_levels;
    size_t noise_variants = 50;
    std::string perturb_kind = "position";
    std::string benchmark;
    long long batch_index = -1;
    std::string baseline_kind = "function_injection_zs";
    std::string fixture, base_url, model, api_key_env;

    CLI::App* cmd = nullptr;

    void attach(CLI::App* sub) {
        cmd = sub;
        sub->add_option("--config", config_path, "JSON experiment config (flags override it)");
        sub->add_option("--dataset", dataset, "payload dataset file");
        sub->add_option("--dataset-format", dataset_format, "payloads | bfcl");
        sub->add_option("--answers", answers, "BFCL answers file");
        sub->add_option("--noise-pool", noise_pool, "distractor function pool");
        sub->add_option("--profile", profile, "adapter profile JSON");
        sub->add_option("--out", out_dir, "output run directory");
        sub->add_option("--seed", seed, "experiment seed");
        sub->add_option("--max-samples", max_samples, "cap on payload count (0 = all)");
        sub->add_option("--suffix-len", suffix_len, "adversarial suffix length in tokens");
        sub->add_option("--top-k", top_k, "per-position candidate count");
        sub->add_option("--batch-size", batch_size, "substitution batch size");
        sub->add_option("--epochs", epochs, "optimization epochs");
        sub->add_option("--check-every", check_every, "hijack check cadence");
        sub->add_option("--checkpoint-every", checkpoint_every, "suffix checkpoint cadence");
        sub->add_option("--max-new-tokens", max_new_tokens, "generation budget for checks");
        sub->add_option("--init-text", init_text, "suffix initialization text");
        sub->add_flag("--stop-on-success", stop_on_success, "stop at the first full hijack");
        sub->add_option("--bridge-seed", bridge_seed, "toy model parameter seed");
        sub->add_option("--vocab-size", vocab_size, "toy model vocabulary size");
        sub->add_option("--layers", layers, "toy model layer count");
        sub->add_option("--dim", dim, "toy model width");
        sub->add_option("--max-len", max_len, "toy model context limit");
        sub->add_option("--init-scale", init_scale, "toy model weight scale");
        sub->add_option("--copy-bias", copy_bias, "toy model induction-bias strength");
        sub->add_option("--copy-order", copy_order, "toy model induction n-gram order");
        sub->add_option("--target-policy", target_policy,
                        "second_position | target_first | fixed_index");
        sub->add_option("--fixed-index", fixed_index, "target index for fixed_index policy");
        sub->add_flag("--no-select-targets", no_select_targets,
                      "dataset already carries target_index");
        sub->add_option("--noise-levels", noise_levels, "noise function counts")
            ->delimiter(',');
        sub->add_option("--noise-variants", noise_variants, "variants per noise level");
        sub->add_option("--perturb-kind", perturb_kind, "position | count");
        sub->add_option("--benchmark", benchmark, "query-batch benchmark manifest");
        sub->add_option("--batch-index", batch_index, "restrict to one benchmark batch");
        sub->add_option("--baseline-kind", baseline_kind,
                        "function_injection_zs | function_injection_fs | mpma_benign | "
                        "mpma_direct");
        sub->add_option("--fixture", fixture, "offline text-generation fixture file");
        sub->add_option("--base-url", base_url, "text-generation HTTP endpoint");
        sub->add_option("--model", model, "text-generation model id");
        sub->add_option("--api-key-env", api_key_env, "env var holding the API key");
    }

    bool given(const std::string& name) const { return cmd->count(name) > 0; }

    experiment::ExperimentConfig build(experiment::Scenario scenario) const {
        experiment::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = experiment::ExperimentConfig::load(config_path);
        cfg.scenario = scenario;
        if (given("--dataset")) cfg.dataset_path = dataset;
        if (given("--dataset-format")) cfg.dataset_format = dataset_format;
        if (given("--answers")) cfg.answers_path = answers;
        if (given("--noise-pool")) cfg.noise_pool_path = noise_pool;
        if (given("--profile")) cfg.profile_path = profile;
        if (given("--out")) cfg.output_dir = out_dir;
        if (given("--seed")) cfg.seed = seed;
        if (given("--max-samples")) cfg.max_samples = max_samples;
        if (given("--suffix-len")) cfg.attack.suffix_len = suffix_len;
        if (given("--top-k")) cfg.attack.top_k = top_k;
        if (given("--batch-size")) cfg.attack.batch_size = batch_size;
        if (given("--epochs")) cfg.attack.max_epochs = epochs;
        if (given("--check-every")) cfg.attack.success_check_every = check_every;
        if (given("--checkpoint-every")) cfg.attack.checkpoint_every = checkpoint_every;
        if (given("--max-new-tokens")) cfg.attack.max_new_tokens = max_new_tokens;
        if (given("--init-text")) cfg.attack.init_text = init_text;
        if (given("--stop-on-success")) cfg.attack.stop_on_success = stop_on_success;
        if (given("--bridge-seed")) cfg.bridge.seed = bridge_seed;
        if (given("--vocab-size")) cfg.bridge.vocab_size = vocab_size;
        if (given("--layers")) cfg.bridge.dims.layers = layers;
        if (given("--dim")) cfg.bridge.dims.dim = dim;
        if (given("--max-len")) cfg.bridge.dims.max_len = max_len;
        if (given("--init-scale")) cfg.bridge.dims.init_scale = init_scale;
        if (given("--copy-bias")) cfg.bridge.dims.copy_bias = copy_bias;
        if (given("--copy-order")) cfg.bridge.dims.copy_order = copy_order;
        if (given("--target-policy")) {
            if (target_policy == "second_position")
                cfg.target.policy = corpus::TargetPolicy::SecondPosition;
            else if (target_policy == "target_first")
                cfg.target.policy = corpus::TargetPolicy::TargetFirst;
            else if (target_policy == "fixed_index")
                cfg.target.policy = corpus::TargetPolicy::FixedIndex;
            else
                throw config_error("unknown target policy '" + target_policy + "'");
        }
        if (given("--fixed-index")) cfg.target.fixed_index = fixed_index;
        if (given("--no-select-targets")) cfg.select_targets = !no_select_targets;
        if (given("--noise-levels")) cfg.noise_levels = noise_levels;
        if (given("--noise-variants")) cfg.noise_variants = noise_variants;
        if (given("--perturb-kind")) cfg.perturbation_kind = perturb_kind;
        if (given("--benchmark")) cfg.benchmark_path = benchmark;
        if (given("--batch-index") && batch_index >= 0)
            cfg.batch_index = static_cast<size_t>(batch_index);
        if (given("--baseline-kind")) cfg.baseline_kind = baseline_kind;
        if (given("--fixture")) cfg.textgen_fixture_path = fixture;
        if (given("--base-url")) cfg.textgen_http.base_url = base_url;
        if (given("--model")) cfg.textgen_http.model = model;
        if (given("--api-key-env")) cfg.textgen_http.api_key_env = api_key_env;
        return cfg;
    }
};

int run_scenario(const experiment::ExperimentConfig& cfg) {
    const auto manifest = experiment::run_experiment(cfg);
    const size_t failed = manifest.failed_count();
    std::cout << "run complete: " << manifest.samples.size() << " samples, " << failed
              << " failed; manifest at " << cfg.output_dir << "/manifest.json\n";
    for (const auto& entry : manifest.samples)
        if (entry.status == "failed")
            std::cerr << "  failed " << entry.id << ": " << entry.error << "\n";
    return failed == 0 ? 0 : 1;
}

struct AugmentFlags {
    std::string dataset, fixture, out_path, model = "offline-fixture";
    std::vector<int> strategies = {1, 2};
    size_t retry_limit = 3;
};

int run_augment(const AugmentFlags& flags) {
    if (flags.dataset.empty()) throw config_error("--dataset is required");
    if (flags.fixture.empty()) throw config_error("--fixture is required (offline client)");
    if (flags.out_path.empty()) throw config_error("--out is required");

    textgen::FixtureTextGenClient client(flags.fixture);
    std::vector<Payload> payloads;
    if (flags.dataset.size() > 6 &&
        flags.dataset.compare(flags.dataset.size() - 6, 6, ".jsonl") == 0)
        payloads = corpus::load_payload_lines(flags.dataset);
    else
        payloads.push_back(corpus::load_payload(flags.dataset));

    const std::set<int> wanted(flags.strategies.begin(), flags.strategies.end());
    std::vector<QueryBatch> batches;
    size_t failures = 0;
    for (const auto& payload : payloads) {
        if (!payload.ground_truth_index) {
            std::cerr << "skipping '" << payload.id << "': no ground truth\n";
            ++failures;
            continue;
        }
        for (const int strategy : wanted) {
            augment::AugmentRequest request;
            request.strategy = strategy;
            request.query = payload.query;
            request.ground_truth = payload.ground_truth();
            if (strategy == 3) {
                // first function that is neither ground truth nor target
                std::optional<size_t> other;
                for (size_t i = 0; i < payload.functions.size(); ++i) {
                    if (i == *payload.ground_truth_index) continue;
                    if (payload.target_index && i == *payload.target_index) continue;
                    other = i;
                    break;
                }
                if (!other) {
                    std::cerr << "skipping strategy 3 for '" << payload.id
                              << "': no spare intent\n";
                    ++failures;
                    continue;
                }
                request.new_intent = payload.functions[*other];
            }
            try {
                batches.push_back(
                    augment::generate_query_batch(request, client, flags.retry_limit));
            } catch (const std::exception& e) {
                std::cerr << "generation failed for '" << payload.id << "' strategy "
                          << strategy << ": " << e.what() << "\n";
                ++failures;
            }
        }
    }
    if (batches.empty()) throw config_error("no query batches were generated");
    augment::persist_benchmark(batches, flags.out_path, flags.model);
    std::cout << "wrote " << batches.size() << " batches to " << flags.out_path << "\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial-suffix red-teaming toolkit for function-calling models"};
    app.require_subcommand(1);

    ExperimentFlags attack_flags, universal_flags, standard_flags, baseline_flags,
        perturb_flags;
    std::string universal_mode = "query";

    auto* attack_cmd =
        app.add_subcommand("attack", "per-payload adversarial suffix optimization");
    attack_flags.attach(attack_cmd);

    auto* universal_cmd =
        app.add_subcommand("universal", "one suffix over a query batch or payload variants");
    universal_flags.attach(universal_cmd);
    universal_cmd->add_option("--mode", universal_mode, "query | payload");

    auto* standard_cmd = app.add_subcommand("standard", "clean accuracy, no attack");
    standard_flags.attach(standard_cmd);

    auto* baseline_cmd =
        app.add_subcommand("baseline", "prompt-based comparison attacks");
    baseline_flags.attach(baseline_cmd);

    auto* perturb_cmd = app.add_subcommand(
        "perturb-eval", "attack once, transfer checkpoints to noised payload variants");
    perturb_flags.attach(perturb_cmd);

    AugmentFlags augment_flags;
    auto* augment_cmd =
        app.add_subcommand("augment", "generate query batches and persist a benchmark");
    augment_cmd->add_option("--dataset", augment_flags.dataset, "payload file");
    augment_cmd->add_option("--fixture", augment_flags.fixture, "text-generation fixture");
    augment_cmd->add_option("--out", augment_flags.out_path, "benchmark manifest path");
    augment_cmd->add_option("--model", augment_flags.model, "generator model label");
    augment_cmd->add_option("--strategies", augment_flags.strategies, "subset of 1,2,3")
        ->delimiter(',');
    augment_cmd->add_option("--retries", augment_flags.retry_limit, "generation retries");

    std::string report_manifest;
    auto* report_cmd = app.add_subcommand("report", "render plots and summaries for a run");
    report_cmd->add_option("--manifest", report_manifest, "path to a run manifest.json")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 2;
    }

    try {
        if (attack_cmd->parsed())
            return run_scenario(attack_flags.build(experiment::Scenario::Direct));
        if (universal_cmd->parsed()) {
            if (universal_mode != "query" && universal_mode != "payload")
                throw config_error("--mode must be 'query' or 'payload'");
            return run_scenario(universal_flags.build(
                universal_mode == "query" ? experiment::Scenario::UniversalQuery
                                          : experiment::Scenario::UniversalPayload));
        }
        if (standard_cmd->parsed())
            return run_scenario(standard_flags.build(experiment::Scenario::Standard));
        if (baseline_cmd->parsed())
            return run_scenario(baseline_flags.build(experiment::Scenario::Baseline));
        if (perturb_cmd->parsed())
            return run_scenario(
                perturb_flags.build(experiment::Scenario::PerturbationTransfer));
        if (augment_cmd->parsed()) return run_augment(augment_flags);
        if (report_cmd->parsed()) {
            const auto files = report::render_report(report_manifest);
            for (const auto& path : files.written) std::cout << "wrote " << path << "\n";
            for (const auto& missing : files.missing_inputs)
                std::cerr << "missing input: " << missing << "\n";
            return files.missing_inputs.empty() ? 0 : 1;
        }
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
