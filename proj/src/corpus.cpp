#include "fch/corpus.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "fch/errors.hpp"
#include "fch/util.hpp"

namespace fch::corpus {

namespace {

std::string record_id_of(const json& j) {
    if (!j.contains("id")) return "<missing id>";
    return j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
}

// BFCL question fields come as a plain string, a turn list, or a list of
// conversations (list of turn lists). We take the first user turn of the
// first conversation; multi-turn tasks are out of scope.
std::string extract_query(const json& question, const std::string& rid) {
    if (question.is_string()) return question.get<std::string>();
    if (question.is_array() && !question.empty()) {
        const json& first = question[0];
        if (first.is_array()) return extract_query(first, rid);
        if (first.is_object()) {
            for (const auto& turn : question) {
                if (turn.value("role", "") == "user") return turn.value("content", std::string{});
            }
            throw corpus_error(rid, "no user turn in question");
        }
        if (first.is_string()) return first.get<std::string>();
    }
    throw corpus_error(rid, "unsupported question shape");
}

json parse_json_line(const std::string& line, const std::string& path, size_t lineno) {
    try {
        return json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw corpus_error(path + ":" + std::to_string(lineno), e.what());
    }
}

// First listed ground-truth answer: {"fn_name": {"param": [acceptable values...]}}.
// The reference call takes the first acceptable value of each parameter.
ToolCall answer_to_call(const json& answer, const std::string& rid) {
    if (!answer.is_object() || answer.size() != 1)
        throw corpus_error(rid, "ground-truth answer must be a single-key object");
    ToolCall call;
    call.name = answer.begin().key();
    const json& params = answer.begin().value();
    if (!params.is_object()) throw corpus_error(rid, "ground-truth parameters must be an object");
    for (const auto& [key, vals] : params.items()) {
        if (vals.is_array()) {
            if (!vals.empty()) call.arguments[key] = vals[0];
        } else {
            call.arguments[key] = vals;
        }
    }
    return call;
}

FunctionSpec rename_if_colliding(FunctionSpec fn, const std::set<std::string>& taken) {
    if (!taken.count(fn.name)) return fn;
    for (int i = 2;; ++i) {
        std::string candidate = fn.name + "_" + std::to_string(i);
        if (!taken.count(candidate)) {
            fn.name = std::move(candidate);
            return fn;
        }
    }
}

}  // namespace

std::vector<Payload> load_bfcl(const std::string& dataset_path, const std::string& answers_path) {
    std::map<std::string, json> answers;
    if (!answers_path.empty()) {
        size_t lineno = 0;
        for (const auto& line : util::read_lines(answers_path)) {
            ++lineno;
            if (line.empty()) continue;
            json j = parse_json_line(line, answers_path, lineno);
            answers[record_id_of(j)] = j;
        }
    }

    std::vector<Payload> payloads;
    size_t lineno = 0;
    for (const auto& line : util::read_lines(dataset_path)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_json_line(line, dataset_path, lineno);
        const std::string rid = record_id_of(j);

        Payload p;
        p.id = rid;
        try {
            p.query = extract_query(j.at("question"), rid);
            const json& fns = j.at("function");
            if (fns.is_array()) {
                for (const auto& fj : fns) p.functions.push_back(FunctionSpec::from_json(fj));
            } else {
                p.functions.push_back(FunctionSpec::from_json(fns));
            }
        } catch (const corpus_error&) {
            throw;
        } catch (const std::exception& e) {
            throw corpus_error(rid, e.what());
        }

        if (!answers_path.empty()) {
            auto it = answers.find(rid);
            if (it == answers.end()) throw corpus_error(rid, "no ground-truth answer");
            const json& gt = it->second.at("ground_truth");
            if (!gt.is_array() || gt.empty()) throw corpus_error(rid, "empty ground_truth");
            ToolCall call = answer_to_call(gt[0], rid);  // first listed answer wins
            auto fn_it = std::find_if(p.functions.begin(), p.functions.end(),
                                      [&](const FunctionSpec& f) { return f.name == call.name; });
            if (fn_it == p.functions.end())
                throw corpus_error(rid, "ground-truth function '" + call.name + "' not in payload");
            p.ground_truth_index = static_cast<size_t>(fn_it - p.functions.begin());
            p.ground_truth_call = std::move(call);
        }

        try {
            p.validate();
        } catch (const std::exception& e) {
            throw corpus_error(rid, e.what());
        }
        payloads.push_back(std::move(p));
    }
    return payloads;
}

NoisePool load_noise_pool(const std::string& path) {
    const std::string text = util::read_file(path);
    NoisePool pool;
    if (!text.empty() && text[0] == '{' && text.find('\n') == std::string::npos) {
        // single-object {"functions": [...]} file
        pool = NoisePool::from_json(json::parse(text));
        return pool;
    }
    // try single JSON document first, then fall back to JSON lines
    try {
        json j = json::parse(text);
        if (j.is_object() && j.contains("functions")) return NoisePool::from_json(j);
        if (j.is_array()) {
            for (const auto& fj : j) pool.functions.push_back(FunctionSpec::from_json(fj));
            pool.validate();
            return pool;
        }
    } catch (const nlohmann::json::parse_error&) {
        // fall through to JSONL
    }
    size_t lineno = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_json_line(line, path, lineno);
        const json& fns = j.contains("function") ? j["function"] : j;
        if (fns.is_array()) {
            for (const auto& fj : fns) pool.functions.push_back(FunctionSpec::from_json(fj));
        } else {
            pool.functions.push_back(FunctionSpec::from_json(fns));
        }
    }
    pool.validate();
    return pool;
}

Payload select_target(const Payload& payload, const TargetSelection& selection) {
    if (!payload.ground_truth_index)
        throw std::invalid_argument("payload '" + payload.id + "': target selection needs a ground truth");
    if (payload.functions.size() < 2)
        throw std::invalid_argument("payload '" + payload.id +
                                    "': no distinct target exists in a single-function payload");
    const size_t gt = *payload.ground_truth_index;

    Payload out = payload;
    if (selection.policy == TargetPolicy::FixedIndex) {
        if (selection.fixed_index >= payload.functions.size())
            throw std::invalid_argument("payload '" + payload.id + "': fixed target index out of range");
        if (selection.fixed_index == gt)
            throw std::invalid_argument("payload '" + payload.id +
                                        "': fixed target index equals ground truth");
        out.target_index = selection.fixed_index;
        out.validate();
        return out;
    }

    // Target = first non-ground-truth function in the original order.
    size_t target = gt == 0 ? 1 : 0;
    std::vector<FunctionSpec> rest;
    for (size_t i = 0; i < payload.functions.size(); ++i)
        if (i != gt && i != target) rest.push_back(payload.functions[i]);

    out.functions.clear();
    if (selection.policy == TargetPolicy::SecondPosition) {
        out.functions.push_back(payload.functions[gt]);
        out.functions.push_back(payload.functions[target]);
        out.ground_truth_index = 0;
        out.target_index = 1;
    } else {  // TargetFirst
        out.functions.push_back(payload.functions[target]);
        out.functions.push_back(payload.functions[gt]);
        out.ground_truth_index = 1;
        out.target_index = 0;
    }
    for (auto& fn : rest) out.functions.push_back(std::move(fn));
    out.validate();
    return out;
}

Payload add_noise_functions(const Payload& payload, const NoisePool& pool, size_t n,
                            std::mt19937& rng) {
    if (n > pool.functions.size())
        throw std::invalid_argument("noise request of " + std::to_string(n) + " exceeds pool size " +
                                    std::to_string(pool.functions.size()));
    // Sample without replacement: partial Fisher-Yates over an index vector.
    std::vector<size_t> idx(pool.functions.size());
    std::iota(idx.begin(), idx.end(), 0);
    Payload out = payload;
    std::set<std::string> taken;
    for (const auto& fn : out.functions) taken.insert(fn.name);
    for (size_t i = 0; i < n; ++i) {
        const size_t j = i + static_cast<size_t>(util::uniform_below(rng, idx.size() - i));
        std::swap(idx[i], idx[j]);
        FunctionSpec fn = rename_if_colliding(pool.functions[idx[i]], taken);
        taken.insert(fn.name);
        out.functions.push_back(std::move(fn));  // appended after originals: indices stay valid
    }
    out.validate();
    return out;
}

Payload permute_functions(const Payload& payload, const std::vector<size_t>& permutation) {
    if (permutation.size() != payload.functions.size())
        throw std::invalid_argument("permutation size mismatch");
    std::vector<bool> seen(permutation.size(), false);
    for (size_t v : permutation) {
        if (v >= permutation.size() || seen[v])
            throw std::invalid_argument("not a permutation");
        seen[v] = true;
    }
    Payload out = payload;
    out.functions.clear();
    for (size_t v : permutation) out.functions.push_back(payload.functions[v]);
    for (size_t i = 0; i < permutation.size(); ++i) {
        if (payload.ground_truth_index && permutation[i] == *payload.ground_truth_index)
            out.ground_truth_index = i;
        if (payload.target_index && permutation[i] == *payload.target_index)
            out.target_index = i;
    }
    out.validate();
    return out;
}

std::vector<Payload> build_perturbation_batches(const Payload& payload, const NoisePool& pool,
                                                PerturbationKind kind) {
    if (!payload.ground_truth_index || !payload.target_index)
        throw std::invalid_argument("payload '" + payload.id +
                                    "': perturbation batches need ground truth and target");
    const size_t gt = *payload.ground_truth_index;
    const size_t tg = *payload.target_index;
    std::vector<Payload> out;

    if (kind == PerturbationKind::Position) {
        const size_t n = payload.functions.size();
        std::vector<size_t> original(n);
        std::iota(original.begin(), original.end(), 0);

        // Others = everything except ground truth and target, in original order.
        std::vector<size_t> others;
        for (size_t i = 0; i < n; ++i)
            if (i != gt && i != tg) others.push_back(i);

        size_t counter = 0;
        // Subsets by size ascending, combinations in lexicographic order, then
        // every ordering of each subset; skip the ordering equal to the original.
        for (size_t extra = 0; extra <= others.size(); ++extra) {
            // iterate combinations via prev_permutation on the mask, lexicographic on indices
            std::vector<std::vector<size_t>> combos;
            std::vector<bool> mask(others.size(), false);
            std::fill(mask.begin(), mask.begin() + static_cast<long>(extra), true);
            do {
                std::vector<size_t> subset{gt, tg};
                for (size_t i = 0; i < others.size(); ++i)
                    if (mask[i]) subset.push_back(others[i]);
                combos.push_back(std::move(subset));
            } while (std::prev_permutation(mask.begin(), mask.end()));
            for (auto& subset : combos) {
                std::sort(subset.begin(), subset.end());
                std::vector<size_t> order = subset;
                do {
                    if (order == original) continue;  // skip the unperturbed ordering
                    Payload variant = payload;
                    variant.id = payload.id + "::pos" + std::to_string(counter);
                    variant.functions.clear();
                    for (size_t v : order) {
                        variant.functions.push_back(payload.functions[v]);
                        if (v == gt) variant.ground_truth_index = variant.functions.size() - 1;
                        if (v == tg) variant.target_index = variant.functions.size() - 1;
                    }
                    variant.validate();
                    out.push_back(std::move(variant));
                    ++counter;
                } while (std::next_permutation(order.begin(), order.end()));
            }
        }
        return out;
    }

    // Count: [ground truth, target] fixed up front, then 0..3 pool distractors.
    if (pool.functions.size() < 3)
        throw std::invalid_argument("count perturbation needs a pool of at least 3 functions");
    for (size_t total = 2; total <= 5; ++total) {
        Payload variant = payload;
        variant.id = payload.id + "::count" + std::to_string(total);
        variant.functions = {payload.functions[gt], payload.functions[tg]};
        variant.ground_truth_index = 0;
        variant.target_index = 1;
        std::set<std::string> taken{payload.functions[gt].name, payload.functions[tg].name};
        for (size_t i = 0; i + 2 < total; ++i) {
            FunctionSpec fn = rename_if_colliding(pool.functions[i], taken);
            taken.insert(fn.name);
            variant.functions.push_back(std::move(fn));
        }
        variant.validate();
        out.push_back(std::move(variant));
    }
    return out;
}

Payload load_payload(const std::string& path) {
    return Payload::from_json(json::parse(util::read_file(path)));
}

void save_payload(const Payload& payload, const std::string& path) {
    util::write_file(path, payload.to_json().dump(2) + "\n");
}

std::vector<Payload> load_payload_lines(const std::string& path) {
    std::vector<Payload> out;
    size_t lineno = 0;
    for (const auto& line : util::read_lines(path)) {
        ++lineno;
        if (line.empty()) continue;
        out.push_back(Payload::from_json(parse_json_line(line, path, lineno)));
    }
    return out;
}

void save_payload_lines(const std::vector<Payload>& payloads, const std::string& path) {
    std::string text;
    for (const auto& p : payloads) text += p.to_json().dump() + "\n";
    util::write_file(path, text);
}

}  // namespace fch::corpus
