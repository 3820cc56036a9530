#include "fch/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "fch/errors.hpp"
#include "fch/render.hpp"
#include "fch/util.hpp"

namespace fs = std::filesystem;

namespace fch::experiment {

Scenario scenario_from_string(const std::string& text) {
    if (text == "direct") return Scenario::Direct;
    if (text == "universal_query") return Scenario::UniversalQuery;
    if (text == "universal_payload") return Scenario::UniversalPayload;
    if (text == "perturbation_transfer") return Scenario::PerturbationTransfer;
    if (text == "baseline") return Scenario::Baseline;
    if (text == "standard") return Scenario::Standard;
    throw config_error("unknown scenario '" + text + "'");
}

std::string to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::Direct: return "direct";
        case Scenario::UniversalQuery: return "universal_query";
        case Scenario::UniversalPayload: return "universal_payload";
        case Scenario::PerturbationTransfer: return "perturbation_transfer";
        case Scenario::Baseline: return "baseline";
        case Scenario::Standard: return "standard";
    }
    throw config_error("unknown scenario");
}

json BridgeConfig::to_json() const {
    return json{{"kind", kind},
                {"seed", seed},
                {"vocab_size", vocab_size},
                {"dims",
                 {{"layers", dims.layers},
                  {"dim", dims.dim},
                  {"max_len", dims.max_len},
                  {"init_scale", dims.init_scale},
                  {"copy_bias", dims.copy_bias},
                  {"copy_order", dims.copy_order}}}};
}

BridgeConfig BridgeConfig::from_json(const json& j) {
    BridgeConfig c;
    c.kind = j.value("kind", c.kind);
    c.seed = j.value("seed", c.seed);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    if (j.contains("dims")) {
        const json& d = j["dims"];
        c.dims.layers = d.value("layers", c.dims.layers);
        c.dims.dim = d.value("dim", c.dims.dim);
        c.dims.max_len = d.value("max_len", c.dims.max_len);
        c.dims.init_scale = d.value("init_scale", c.dims.init_scale);
        c.dims.copy_bias = d.value("copy_bias", c.dims.copy_bias);
        c.dims.copy_order = d.value("copy_order", c.dims.copy_order);
    }
    return c;
}

std::unique_ptr<lmbridge::LmBridge> make_bridge(const BridgeConfig& config) {
    if (config.kind == "toy")
        return lmbridge::make_toy_bridge(config.seed, config.vocab_size, config.dims);
    throw config_error("unknown bridge kind '" + config.kind +
                       "' (this build provides: toy)");
}

void ExperimentConfig::validate() const {
    if (name.empty()) throw config_error("experiment name is empty");
    if (output_dir.empty()) throw config_error("output_dir is required");
    if (profile_path.empty()) throw config_error("profile_path is required");
    if (dataset_path.empty()) throw config_error("dataset_path is required");
    if (dataset_format != "payloads" && dataset_format != "bfcl")
        throw config_error("dataset_format must be 'payloads' or 'bfcl'");
    attack.validate();

    switch (scenario) {
        case Scenario::PerturbationTransfer:
            if (noise_pool_path.empty())
                throw config_error("perturbation_transfer requires noise_pool_path");
            if (noise_levels.empty()) throw config_error("noise_levels is empty");
            for (size_t level : noise_levels)
                if (level == 0) throw config_error("noise levels must be positive");
            if (noise_variants == 0) throw config_error("noise_variants must be positive");
            break;
        case Scenario::UniversalPayload:
            if (perturbation_kind != "position" && perturbation_kind != "count")
                throw config_error("perturbation_kind must be 'position' or 'count'");
            if (perturbation_kind == "count" && noise_pool_path.empty())
                throw config_error("count perturbation requires noise_pool_path");
            break;
        case Scenario::UniversalQuery:
            if (benchmark_path.empty())
                throw config_error("universal_query requires benchmark_path");
            break;
        case Scenario::Baseline:
            baselines::baseline_kind_from_string(baseline_kind);
            if (textgen_fixture_path.empty() &&
                (textgen_http.base_url.empty() || textgen_http.model.empty()))
                throw config_error(
                    "baseline requires textgen_fixture_path or an HTTP client config");
            break;
        case Scenario::Direct:
        case Scenario::Standard:
            break;
    }
}

json ExperimentConfig::to_json() const {
    json j;
    j["name"] = name;
    j["scenario"] = experiment::to_string(scenario);
    j["dataset_path"] = dataset_path;
    j["dataset_format"] = dataset_format;
    j["answers_path"] = answers_path;
    j["noise_pool_path"] = noise_pool_path;
    j["profile_path"] = profile_path;
    j["bridge"] = bridge.to_json();
    j["attack"] = {{"suffix_len", attack.suffix_len},
                   {"top_k", attack.top_k},
                   {"batch_size", attack.batch_size},
                   {"max_epochs", attack.max_epochs},
                   {"seed", attack.seed},
                   {"success_check_every", attack.success_check_every},
                   {"checkpoint_every", attack.checkpoint_every},
                   {"init_text", attack.init_text},
                   {"max_new_tokens", attack.max_new_tokens},
                   {"stop_on_success", attack.stop_on_success},
                   {"record_suffix_history", attack.record_suffix_history}};
    j["target"] = {{"policy", target.policy == corpus::TargetPolicy::SecondPosition
                                  ? "second_position"
                                  : target.policy == corpus::TargetPolicy::TargetFirst
                                        ? "target_first"
                                        : "fixed_index"},
                   {"fixed_index", target.fixed_index}};
    j["select_targets"] = select_targets;
    j["output_dir"] = output_dir;
    j["seed"] = seed;
    j["max_samples"] = max_samples;
    j["noise_levels"] = noise_levels;
    j["noise_variants"] = noise_variants;
    j["perturbation_kind"] = perturbation_kind;
    j["benchmark_path"] = benchmark_path;
    if (batch_index) j["batch_index"] = *batch_index;
    j["baseline_kind"] = baseline_kind;
    j["textgen_fixture_path"] = textgen_fixture_path;
    j["textgen_http"] = {{"base_url", textgen_http.base_url},
                         {"path", textgen_http.path},
                         {"model", textgen_http.model},
                         {"api_key_env", textgen_http.api_key_env},
                         {"temperature", textgen_http.temperature},
                         {"max_tokens", textgen_http.max_tokens},
                         {"timeout_seconds", textgen_http.timeout_seconds}};
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    if (j.contains("scenario")) c.scenario = scenario_from_string(j["scenario"]);
    c.dataset_path = j.value("dataset_path", c.dataset_path);
    c.dataset_format = j.value("dataset_format", c.dataset_format);
    c.answers_path = j.value("answers_path", c.answers_path);
    c.noise_pool_path = j.value("noise_pool_path", c.noise_pool_path);
    c.profile_path = j.value("profile_path", c.profile_path);
    if (j.contains("bridge")) c.bridge = BridgeConfig::from_json(j["bridge"]);
    if (j.contains("attack")) {
        const json& a = j["attack"];
        c.attack.suffix_len = a.value("suffix_len", c.attack.suffix_len);
        c.attack.top_k = a.value("top_k", c.attack.top_k);
        c.attack.batch_size = a.value("batch_size", c.attack.batch_size);
        c.attack.max_epochs = a.value("max_epochs", c.attack.max_epochs);
        c.attack.seed = a.value("seed", c.attack.seed);
        c.attack.success_check_every =
            a.value("success_check_every", c.attack.success_check_every);
        c.attack.checkpoint_every = a.value("checkpoint_every", c.attack.checkpoint_every);
        c.attack.init_text = a.value("init_text", c.attack.init_text);
        c.attack.max_new_tokens = a.value("max_new_tokens", c.attack.max_new_tokens);
        c.attack.stop_on_success = a.value("stop_on_success", c.attack.stop_on_success);
        c.attack.record_suffix_history =
            a.value("record_suffix_history", c.attack.record_suffix_history);
    }
    if (j.contains("target")) {
        const json& t = j["target"];
        const std::string policy = t.value("policy", std::string("second_position"));
        if (policy == "second_position")
            c.target.policy = corpus::TargetPolicy::SecondPosition;
        else if (policy == "target_first")
            c.target.policy = corpus::TargetPolicy::TargetFirst;
        else if (policy == "fixed_index")
            c.target.policy = corpus::TargetPolicy::FixedIndex;
        else
            throw config_error("unknown target policy '" + policy + "'");
        c.target.fixed_index = t.value("fixed_index", c.target.fixed_index);
    }
    c.select_targets = j.value("select_targets", c.select_targets);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);
    c.max_samples = j.value("max_samples", c.max_samples);
    if (j.contains("noise_levels"))
        c.noise_levels = j["noise_levels"].get<std::vector<size_t>>();
    c.noise_variants = j.value("noise_variants", c.noise_variants);
    c.perturbation_kind = j.value("perturbation_kind", c.perturbation_kind);
    c.benchmark_path = j.value("benchmark_path", c.benchmark_path);
    if (j.contains("batch_index") && !j["batch_index"].is_null())
        c.batch_index = j["batch_index"].get<size_t>();
    c.baseline_kind = j.value("baseline_kind", c.baseline_kind);
    c.textgen_fixture_path = j.value("textgen_fixture_path", c.textgen_fixture_path);
    if (j.contains("textgen_http")) {
        const json& h = j["textgen_http"];
        c.textgen_http.base_url = h.value("base_url", c.textgen_http.base_url);
        c.textgen_http.path = h.value("path", c.textgen_http.path);
        c.textgen_http.model = h.value("model", c.textgen_http.model);
        c.textgen_http.api_key_env = h.value("api_key_env", c.textgen_http.api_key_env);
        c.textgen_http.temperature = h.value("temperature", c.textgen_http.temperature);
        c.textgen_http.max_tokens = h.value("max_tokens", c.textgen_http.max_tokens);
        c.textgen_http.timeout_seconds =
            h.value("timeout_seconds", c.textgen_http.timeout_seconds);
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    json j;
    try {
        j = json::parse(util::interpolate_env(util::read_file(path)));
    } catch (const json::parse_error& e) {
        throw config_error("config file '" + path + "': " + e.what());
    }
    return from_json(j);
}

json SampleEntry::to_json() const {
    return json{{"id", id}, {"file", file}, {"status", status}, {"error", error}};
}

SampleEntry SampleEntry::from_json(const json& j) {
    SampleEntry e;
    e.id = j.at("id").get<std::string>();
    e.file = j.value("file", std::string{});
    e.status = j.value("status", std::string{});
    e.error = j.value("error", std::string{});
    return e;
}

size_t RunManifest::failed_count() const {
    return static_cast<size_t>(std::count_if(samples.begin(), samples.end(),
                                             [](const SampleEntry& e) {
                                                 return e.status == "failed";
                                             }));
}

json RunManifest::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["version_stamp"] = version_stamp;
    j["created_at"] = created_at;
    j["finished_at"] = finished_at;
    j["config"] = config_snapshot;
    j["samples"] = json::array();
    for (const auto& entry : samples) j["samples"].push_back(entry.to_json());
    j["record_files"] = record_files;
    j["curve_files"] = curve_files;
    j["sealed"] = sealed;
    return j;
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion)
        throw config_error("unsupported manifest schema version " +
                           std::to_string(m.schema_version));
    m.version_stamp = j.value("version_stamp", std::string{});
    m.created_at = j.value("created_at", std::string{});
    m.finished_at = j.value("finished_at", std::string{});
    m.config_snapshot = j.value("config", json::object());
    for (const auto& entry : j.value("samples", json::array()))
        m.samples.push_back(SampleEntry::from_json(entry));
    m.record_files = j.value("record_files", std::vector<std::string>{});
    m.curve_files = j.value("curve_files", std::vector<std::string>{});
    m.sealed = j.value("sealed", false);
    return m;
}

RunManifest RunManifest::load(const std::string& path) {
    try {
        return from_json(json::parse(util::read_file(path)));
    } catch (const json::parse_error& e) {
        throw config_error("manifest '" + path + "': " + e.what());
    }
}

void write_records_jsonl(const std::vector<evaluator::EvalRecord>& records,
                         const std::string& path) {
    std::string out = json{{"schema", kRecordSchema}}.dump() + "\n";
    for (const auto& rec : records) out += rec.to_json().dump() + "\n";
    util::write_file(path, out);
}

std::vector<evaluator::EvalRecord> read_records_jsonl(const std::string& path) {
    const auto lines = util::read_lines(path);
    if (lines.empty()) throw config_error("record file '" + path + "' is empty");
    const json header = json::parse(lines.front());
    if (header.value("schema", std::string{}) != kRecordSchema)
        throw config_error("record file '" + path + "' has an unknown schema header");
    std::vector<evaluator::EvalRecord> records;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        records.push_back(evaluator::EvalRecord::from_json(json::parse(lines[i])));
    }
    return records;
}

void write_curve_csv(const evaluator::AsrCurve& curve, const std::string& path) {
    std::string out = "epoch,fn_asr,sf_asr,n\n";
    char row[128];
    for (const auto& pt : curve.points) {
        std::snprintf(row, sizeof row, "%zu,%.6f,%.6f,%zu\n", pt.epoch, pt.fn_asr, pt.sf_asr,
                      pt.n);
        out += row;
    }
    util::write_file(path, out);
}

evaluator::AsrCurve read_curve_csv(const std::string& path) {
    const auto lines = util::read_lines(path);
    if (lines.empty() || lines.front() != "epoch,fn_asr,sf_asr,n")
        throw config_error("curve file '" + path + "' lacks the expected header");
    evaluator::AsrCurve curve;
    curve.label = fs::path(path).stem().string();
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        evaluator::AsrPoint pt;
        unsigned long long epoch = 0, n = 0;
        if (std::sscanf(lines[i].c_str(), "%llu,%lf,%lf,%llu", &epoch, &pt.fn_asr, &pt.sf_asr,
                        &n) != 4)
            throw config_error("curve file '" + path + "': bad row '" + lines[i] + "'");
        pt.epoch = static_cast<size_t>(epoch);
        pt.n = static_cast<size_t>(n);
        curve.points.push_back(pt);
    }
    return curve;
}

json attack_result_to_json(const optimizer::AttackResult& result) {
    json j;
    j["schema"] = "attack_result/v1";
    j["success"] = result.success;
    if (result.state.hijacking_index)
        j["hijacking_index"] = *result.state.hijacking_index;
    else
        j["hijacking_index"] = nullptr;
    j["suffix_text"] = result.suffix_text;
    j["suffix_tokens"] = result.state.suffix_tokens;
    j["epochs"] = result.state.epoch;
    j["best_loss"] = result.state.best_loss;
    j["loss_history"] = result.state.loss_history;
    j["per_item_loss_history"] = result.state.per_item_loss_history;
    j["item_success"] = result.item_success;
    j["topk_truncated"] = result.topk_truncated;
    j["filter_fallbacks"] = result.filter_fallbacks;
    j["poisoned_function"] = result.poisoned_function.to_json();
    j["checkpoints"] = json::array();
    for (const auto& cp : result.checkpoints) j["checkpoints"].push_back(cp.to_json());
    j["check_records"] = json::array();
    for (const auto& rec : result.check_records) j["check_records"].push_back(rec.to_json());
    if (!result.suffix_history.empty()) j["suffix_history"] = result.suffix_history;
    return j;
}

namespace {

std::string sanitize_id(const std::string& id) {
    std::string safe;
    for (const char c : id)
        safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ||
                 c == '_')
                    ? c
                    : '_';
    return safe + "_" + util::fnv1a_hex(id).substr(0, 8);
}

struct Runner {
    const ExperimentConfig& config;
    adapters::AdapterProfile profile;
    std::unique_ptr<lmbridge::LmBridge> bridge;
    fs::path out_dir;
    fs::path samples_dir;
    RunManifest manifest;

    explicit Runner(const ExperimentConfig& cfg)
        : config(cfg), profile(adapters::AdapterProfile::load(cfg.profile_path)) {
        bridge = make_bridge(cfg.bridge);
        out_dir = cfg.output_dir;
        samples_dir = out_dir / "samples";
        fs::create_directories(samples_dir);
        fs::create_directories(out_dir / "curves");
        fs::create_directories(out_dir / "records");
        manifest.config_snapshot = cfg.to_json();
        manifest.created_at = util::utc_timestamp();
    }

    std::vector<Payload> load_dataset() const {
        std::vector<Payload> payloads;
        if (config.dataset_format == "bfcl") {
            payloads = corpus::load_bfcl(config.dataset_path, config.answers_path);
        } else {
            const std::string text = util::read_file(config.dataset_path);
            const size_t first = text.find_first_not_of(" \t\r\n");
            if (first != std::string::npos && text[first] == '[') {
                for (const auto& entry : json::parse(text))
                    payloads.push_back(Payload::from_json(entry));
            } else if (fs::path(config.dataset_path).extension() == ".jsonl") {
                payloads = corpus::load_payload_lines(config.dataset_path);
            } else {
                payloads.push_back(corpus::load_payload(config.dataset_path));
            }
        }
        if (config.select_targets)
            for (auto& payload : payloads) payload = corpus::select_target(payload, config.target);
        if (config.max_samples > 0 && payloads.size() > config.max_samples)
            payloads.resize(config.max_samples);
        if (payloads.empty()) throw config_error("dataset contains no payloads");
        return payloads;
    }

    // Returns the parsed sample file when it already exists (resume), else runs
    // `work`, writes its JSON result, and returns it. Failures are recorded and
    // reported as nullopt.
    template <typename Work>
    std::optional<json> run_sample(const std::string& id, Work&& work) {
        SampleEntry entry;
        entry.id = id;
        const fs::path file = samples_dir / (sanitize_id(id) + ".json");
        entry.file = fs::relative(file, out_dir).string();
        if (fs::exists(file)) {
            entry.status = "resumed";
            manifest.samples.push_back(entry);
            return json::parse(util::read_file(file.string()));
        }
        try {
            json result = work();
            result["sample_id"] = id;
            util::write_file(file.string(), result.dump(2) + "\n");
            entry.status = "done";
            manifest.samples.push_back(entry);
            return result;
        } catch (const std::exception& e) {
            entry.status = "failed";
            entry.error = e.what();
            manifest.samples.push_back(entry);
            return std::nullopt;
        }
    }

    void write_curve(const evaluator::AsrCurve& curve, const std::string& filename) {
        const fs::path path = out_dir / "curves" / filename;
        write_curve_csv(curve, path.string());
        manifest.curve_files.push_back(fs::relative(path, out_dir).string());
    }

    void write_records(const std::vector<evaluator::EvalRecord>& records,
                       const std::string& filename) {
        const fs::path path = out_dir / "records" / filename;
        write_records_jsonl(records, path.string());
        manifest.record_files.push_back(fs::relative(path, out_dir).string());
    }

    optimizer::AttackConfig attack_config_for(size_t ordinal) const {
        optimizer::AttackConfig attack = config.attack;
        attack.seed = config.seed + static_cast<std::uint32_t>(ordinal);
        return attack;
    }

    static std::vector<evaluator::EvalRecord> records_from_result(const json& result) {
        std::vector<evaluator::EvalRecord> records;
        for (const auto& entry : result.value("check_records", json::array()))
            records.push_back(evaluator::EvalRecord::from_json(entry));
        return records;
    }

    void run_attack_family(const std::vector<optimizer::AttackTask>& tasks,
                           const std::vector<std::string>& ids,
                           const std::string& curve_name) {
        std::vector<evaluator::EvalRecord> all_records;
        for (size_t i = 0; i < tasks.size(); ++i) {
            const auto result = run_sample(ids[i], [&] {
                return attack_result_to_json(
                    optimizer::run_attack(tasks[i], attack_config_for(i)));
            });
            if (!result) continue;
            const auto records = records_from_result(*result);
            all_records.insert(all_records.end(), records.begin(), records.end());
        }
        if (!all_records.empty()) {
            write_records(all_records, "checks.jsonl");
            write_curve(evaluator::compute_asr_curve(
                            all_records, evaluator::CurveMode::CumulativeBest, curve_name),
                        curve_name + ".csv");
        }
    }

    void run_direct() {
        const auto payloads = load_dataset();
        std::vector<optimizer::AttackTask> tasks;
        std::vector<std::string> ids;
        for (const auto& payload : payloads) {
            tasks.push_back({{payload}, profile, bridge.get()});
            ids.push_back(payload.id);
        }
        run_attack_family(tasks, ids, "attack");
    }

    void run_universal_query() {
        const auto payloads = load_dataset();
        const Payload& base = payloads.front();
        const auto benchmark = augment::load_benchmark(config.benchmark_path);
        if (benchmark.batches.empty())
            throw config_error("benchmark '" + config.benchmark_path + "' has no batches");

        std::vector<optimizer::AttackTask> tasks;
        std::vector<std::string> ids;
        for (size_t b = 0; b < benchmark.batches.size(); ++b) {
            if (config.batch_index && b != *config.batch_index) continue;
            const auto& batch = benchmark.batches[b];
            optimizer::AttackTask task;
            task.profile = profile;
            task.bridge = bridge.get();
            for (size_t q = 0; q < batch.queries.size(); ++q) {
                Payload item = base;
                item.id = base.id + "::q" + std::to_string(q);
                item.query = batch.queries[q];
                task.items.push_back(std::move(item));
            }
            tasks.push_back(std::move(task));
            ids.push_back(base.id + "::batch" + std::to_string(b));
        }
        if (tasks.empty()) throw config_error("batch_index selects no batch");
        run_attack_family(tasks, ids, "universal_query");
    }

    void run_universal_payload() {
        const auto payloads = load_dataset();
        const Payload& base = payloads.front();
        NoisePool pool;
        if (!config.noise_pool_path.empty())
            pool = corpus::load_noise_pool(config.noise_pool_path);
        const auto kind = config.perturbation_kind == "position"
                              ? corpus::PerturbationKind::Position
                              : corpus::PerturbationKind::Count;
        optimizer::AttackTask task;
        task.items = corpus::build_perturbation_batches(base, pool, kind);
        task.profile = profile;
        task.bridge = bridge.get();
        run_attack_family({std::move(task)},
                          {base.id + "::universal_" + config.perturbation_kind},
                          "universal_payload");
    }

    void run_perturbation_transfer() {
        const auto payloads = load_dataset();
        const Payload& base = payloads.front();
        const auto pool = corpus::load_noise_pool(config.noise_pool_path);

        optimizer::AttackTask task{{base}, profile, bridge.get()};
        const auto attack_result = run_sample(base.id, [&] {
            return attack_result_to_json(optimizer::run_attack(task, attack_config_for(0)));
        });
        if (!attack_result)
            throw config_error("the attack phase failed; cannot transfer checkpoints");

        std::vector<evaluator::SuffixCheckpoint> checkpoints;
        for (const auto& entry : attack_result->at("checkpoints"))
            checkpoints.push_back(evaluator::SuffixCheckpoint::from_json(entry));

        evaluator::EvalOptions options;
        options.max_new_tokens = config.attack.max_new_tokens;

        std::vector<evaluator::EvalRecord> all_records;
        for (const size_t level : config.noise_levels) {
            const std::string label = "noise_" + std::to_string(level);
            const auto result = run_sample(base.id + "::" + label, [&] {
                std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                                  static_cast<std::uint32_t>(level)};
                std::mt19937 rng(seq);
                evaluator::EvalSet set;
                set.label = label;
                for (size_t v = 0; v < config.noise_variants; ++v) {
                    Payload variant = corpus::add_noise_functions(base, pool, level, rng);
                    variant.id = base.id + "::" + label + "v" + std::to_string(v);
                    set.items.push_back(std::move(variant));
                }
                const auto transfers = evaluator::transfer_evaluate(
                    checkpoints, {set}, config.attack.checkpoint_every, *bridge, profile,
                    options);
                json out;
                out["schema"] = "transfer_result/v1";
                out["label"] = label;
                out["records"] = json::array();
                for (const auto& rec : transfers.front().records)
                    out["records"].push_back(rec.to_json());
                return out;
            });
            if (!result) continue;
            std::vector<evaluator::EvalRecord> records;
            for (const auto& entry : result->at("records"))
                records.push_back(evaluator::EvalRecord::from_json(entry));
            write_curve(evaluator::compute_asr_curve(
                            records, evaluator::CurveMode::Instantaneous, label),
                        label + ".csv");
            all_records.insert(all_records.end(), records.begin(), records.end());
        }
        if (!all_records.empty()) write_records(all_records, "transfer.jsonl");
    }

    void run_baseline() {
        const auto payloads = load_dataset();
        std::unique_ptr<textgen::TextGenClient> client;
        if (!config.textgen_fixture_path.empty())
            client = std::make_unique<textgen::FixtureTextGenClient>(config.textgen_fixture_path);
        else
            client = textgen::make_http_client(config.textgen_http);

        baselines::BaselineSpec spec;
        spec.kind = baselines::baseline_kind_from_string(config.baseline_kind);

        evaluator::EvalOptions options;
        options.max_new_tokens = config.attack.max_new_tokens;

        std::vector<evaluator::EvalRecord> records;
        for (const auto& payload : payloads) {
            const auto result = run_sample(payload.id + "::" + config.baseline_kind, [&] {
                const Payload transformed = baselines::apply_baseline(payload, spec, *client);
                auto rec = evaluator::evaluate_payload(transformed, std::nullopt, *bridge,
                                                       profile, evaluator::EvalMode::Attack,
                                                       options);
                rec.epoch = 0;
                json out;
                out["schema"] = "baseline_result/v1";
                out["record"] = rec.to_json();
                out["transformed_payload"] = transformed.to_json();
                return out;
            });
            if (!result) continue;
            records.push_back(evaluator::EvalRecord::from_json(result->at("record")));
        }
        if (!records.empty()) {
            write_records(records, "baseline.jsonl");
            write_curve(evaluator::compute_asr_curve(records,
                                                     evaluator::CurveMode::Instantaneous,
                                                     config.baseline_kind),
                        "baseline.csv");
        }
    }

    void run_standard() {
        const auto payloads = load_dataset();
        evaluator::EvalOptions options;
        options.max_new_tokens = config.attack.max_new_tokens;

        std::vector<evaluator::EvalRecord> records;
        for (const auto& payload : payloads) {
            const auto result = run_sample(payload.id + "::standard", [&] {
                auto rec = evaluator::evaluate_payload(payload, std::nullopt, *bridge, profile,
                                                       evaluator::EvalMode::Standard, options);
                rec.epoch = 0;
                json out;
                out["schema"] = "standard_result/v1";
                out["record"] = rec.to_json();
                return out;
            });
            if (!result) continue;
            records.push_back(evaluator::EvalRecord::from_json(result->at("record")));
        }
        if (!records.empty()) {
            write_records(records, "standard.jsonl");
            write_curve(evaluator::compute_asr_curve(records,
                                                     evaluator::CurveMode::Instantaneous,
                                                     "standard"),
                        "standard.csv");
        }
    }

    RunManifest run() {
        switch (config.scenario) {
            case Scenario::Direct: run_direct(); break;
            case Scenario::UniversalQuery: run_universal_query(); break;
            case Scenario::UniversalPayload: run_universal_payload(); break;
            case Scenario::PerturbationTransfer: run_perturbation_transfer(); break;
            case Scenario::Baseline: run_baseline(); break;
            case Scenario::Standard: run_standard(); break;
        }
        manifest.finished_at = util::utc_timestamp();
        manifest.sealed = true;
        util::write_file((out_dir / "manifest.json").string(),
                         manifest.to_json().dump(2) + "\n");
        return manifest;
    }
};

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
    config.validate();
    Runner runner(config);
    return runner.run();
}

}  // namespace fch::experiment
