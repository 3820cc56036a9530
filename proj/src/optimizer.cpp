#include "fch/optimizer.hpp"

#include <algorithm>
#include <utility>

#include "fch/errors.hpp"
#include "fch/render.hpp"
#include "fch/util.hpp"

namespace fch::optimizer {

void AttackConfig::validate() const {
    if (suffix_len == 0) throw config_error("suffix_len must be positive");
    if (top_k == 0) throw config_error("top_k must be positive");
    if (batch_size == 0) throw config_error("batch_size must be positive");
    if (max_epochs == 0) throw config_error("max_epochs must be positive");
    if (success_check_every == 0) throw config_error("success_check_every must be positive");
    if (checkpoint_every == 0) throw config_error("checkpoint_every must be positive");
    if (init_text.empty()) throw config_error("init_text must be non-empty");
    if (max_new_tokens == 0) throw config_error("max_new_tokens must be positive");
}

const std::string& AttackTask::target_name() const {
    if (items.empty()) throw config_error("attack task has no items");
    return items.front().target().name;
}

void AttackTask::validate() const {
    if (items.empty()) throw config_error("attack task has no items");
    if (bridge == nullptr) throw config_error("attack task has no bridge");
    profile.validate();
    for (const auto& item : items) {
        item.validate();
        if (!item.target_index)
            throw config_error("attack item '" + item.id + "' has no target function");
    }
    const std::string& name = items.front().target().name;
    for (const auto& item : items)
        if (item.target().name != name)
            throw config_error("attack items disagree on the target function name");
    if (!bridge->supports_gradient())
        throw capability_error("attack optimization requires a gradient-capable backend");
}

std::vector<TokenId> init_suffix(const lmbridge::TokenCodec& codec, const AttackConfig& config) {
    config.validate();
    const auto unit = codec.encode(config.init_text);
    if (unit.empty()) throw config_error("init_text encodes to no tokens");
    std::vector<TokenId> out(config.suffix_len);
    for (size_t i = 0; i < out.size(); ++i) out[i] = unit[i % unit.size()];
    return out;
}

std::vector<std::vector<TokenId>> topk_candidates(const lmbridge::GradientReport& gradient,
                                                  const std::vector<TokenId>& allowed, size_t k,
                                                  bool* truncated) {
    if (allowed.empty()) throw config_error("allowed replacement token set is empty");
    if (k == 0) throw config_error("top_k must be positive");
    const size_t kept = std::min(k, allowed.size());
    if (truncated) *truncated = kept < k;

    std::vector<std::vector<TokenId>> out;
    out.reserve(gradient.rows.size());
    std::vector<TokenId> order;
    for (const auto& row : gradient.rows) {
        for (TokenId id : allowed)
            if (id < 0 || static_cast<size_t>(id) >= row.size())
                throw config_error("allowed token id lies outside the gradient row");
        order = allowed;
        std::sort(order.begin(), order.end(), [&row](TokenId a, TokenId b) {
            const double ga = row[static_cast<size_t>(a)];
            const double gb = row[static_cast<size_t>(b)];
            if (ga != gb) return ga < gb;  // most negative gradient first
            return a < b;                  // deterministic tie-break
        });
        out.emplace_back(order.begin(), order.begin() + static_cast<long>(kept));
    }
    return out;
}

std::vector<Substitution> sample_candidate_batch(
    const std::vector<std::vector<TokenId>>& candidates, size_t batch_size, std::mt19937& rng) {
    if (candidates.empty()) throw config_error("no candidate positions to sample from");
    size_t total = 0;
    for (const auto& row : candidates) {
        if (row.empty()) throw config_error("a suffix position has no candidate tokens");
        total += row.size();
    }

    std::vector<Substitution> out;
    if (batch_size >= total) {  // the batch covers the whole space: enumerate it
        out.reserve(total);
        for (size_t pos = 0; pos < candidates.size(); ++pos)
            for (TokenId tok : candidates[pos]) out.push_back({pos, tok});
        return out;
    }
    out.reserve(batch_size);
    for (size_t draw = 0; draw < batch_size; ++draw) {
        const size_t pos = util::uniform_below(rng, candidates.size());
        const size_t idx = util::uniform_below(rng, candidates[pos].size());
        out.push_back({pos, candidates[pos][idx]});
    }
    return out;
}

std::vector<Substitution> filter_retokenizable(const lmbridge::TokenCodec& codec,
                                               const std::vector<TokenId>& suffix,
                                               const std::vector<Substitution>& batch) {
    std::vector<Substitution> kept;
    kept.reserve(batch.size());
    std::vector<TokenId> modified;
    for (const auto& sub : batch) {
        if (sub.position >= suffix.size())
            throw config_error("substitution position outside the suffix");
        modified = suffix;
        modified[sub.position] = sub.token;
        if (codec.encode(codec.decode(modified)) == modified) kept.push_back(sub);
    }
    return kept;
}

namespace {

struct RenderedItem {
    std::vector<TokenId> tokens;
    lmbridge::SpanRange suffix_span;
    lmbridge::SpanRange target_span;
};

std::vector<RenderedItem> render_items(const AttackTask& task,
                                       const std::vector<TokenId>& suffix) {
    const auto& codec = task.bridge->codec();
    const std::string suffix_text = codec.decode(suffix);
    std::vector<RenderedItem> out;
    out.reserve(task.items.size());
    for (const auto& item : task.items) {
        const Payload injected = adapters::inject_suffix(item, suffix_text);
        auto rendered = adapters::render_attack_input(task.profile, codec, injected, suffix);
        out.push_back(
            {std::move(rendered.token_ids), rendered.suffix_span, rendered.target_span});
    }
    return out;
}

lmbridge::GradientReport joint_gradient(const AttackTask& task,
                                        const std::vector<RenderedItem>& rendered,
                                        size_t suffix_len) {
    const size_t vocab = task.bridge->codec().vocab_size();
    lmbridge::GradientReport total;
    total.rows.assign(suffix_len, std::vector<double>(vocab, 0.0));
    for (const auto& item : rendered) {
        const auto grad =
            task.bridge->suffix_gradient(item.tokens, item.suffix_span, item.target_span);
        if (grad.rows.size() != suffix_len)
            throw capability_error("gradient row count does not match the suffix length");
        for (size_t i = 0; i < suffix_len; ++i)
            for (size_t v = 0; v < vocab; ++v) total.rows[i][v] += grad.rows[i][v];
    }
    total.suffix_span = rendered.empty() ? lmbridge::SpanRange{} : rendered.front().suffix_span;
    return total;
}

std::vector<double> checkpoint_losses(const AttackTask& task,
                                      const std::vector<TokenId>& suffix) {
    const auto rendered = render_items(task, suffix);
    std::vector<lmbridge::LossItem> requests;
    requests.reserve(rendered.size());
    for (const auto& item : rendered) requests.push_back({item.tokens, item.target_span});
    return task.bridge->target_loss(requests);
}

}  // namespace

StepOutcome attack_step(const AttackTask& task, AttackState& state, const AttackConfig& config,
                        std::mt19937& rng) {
    auto& bridge = *task.bridge;
    const auto& codec = bridge.codec();
    if (state.suffix_tokens.size() != config.suffix_len)
        throw config_error("suffix length does not match the configuration");

    const auto rendered = render_items(task, state.suffix_tokens);
    const auto gradient = joint_gradient(task, rendered, config.suffix_len);

    StepOutcome outcome;
    const auto allowed = codec.printable_ascii_ids();
    const auto candidates =
        topk_candidates(gradient, allowed, config.top_k, &outcome.topk_truncated);
    auto batch = sample_candidate_batch(candidates, config.batch_size, rng);
    auto kept = filter_retokenizable(codec, state.suffix_tokens, batch);
    if (kept.empty()) {  // keep optimizing in token space rather than stalling
        outcome.filter_fallback = true;
        kept = std::move(batch);
    }

    // Score every kept substitution plus the incumbent suffix (appended last),
    // summing losses across items. The incumbent guarantees the objective
    // never increases; ties go to the earliest batch entry.
    const size_t n_candidates = kept.size();
    std::vector<double> total(n_candidates + 1, 0.0);
    std::vector<std::vector<double>> per_item(rendered.size());
    for (size_t it = 0; it < rendered.size(); ++it) {
        const auto& item = rendered[it];
        std::vector<lmbridge::LossItem> requests;
        requests.reserve(n_candidates + 1);
        for (const auto& sub : kept) {
            lmbridge::LossItem req{item.tokens, item.target_span};
            req.token_ids[item.suffix_span.begin + sub.position] = sub.token;
            requests.push_back(std::move(req));
        }
        requests.push_back({item.tokens, item.target_span});
        per_item[it] = bridge.target_loss(requests);
        if (per_item[it].size() != total.size())
            throw capability_error("backend returned a mismatched loss batch");
        for (size_t c = 0; c < total.size(); ++c) total[c] += per_item[it][c];
    }

    size_t best = 0;
    for (size_t c = 1; c < total.size(); ++c)
        if (total[c] < total[best]) best = c;

    if (best < n_candidates)
        state.suffix_tokens[kept[best].position] = kept[best].token;

    outcome.total_loss = total[best];
    outcome.item_losses.resize(rendered.size());
    for (size_t it = 0; it < rendered.size(); ++it) outcome.item_losses[it] = per_item[it][best];

    state.epoch += 1;
    state.loss_history.push_back(outcome.total_loss);
    state.per_item_loss_history.push_back(outcome.item_losses);
    if (outcome.total_loss < state.best_loss || state.best_suffix.empty()) {
        state.best_loss = outcome.total_loss;
        state.best_suffix = state.suffix_tokens;
    }
    return outcome;
}

AttackResult run_attack(const AttackTask& task, const AttackConfig& config) {
    config.validate();
    task.validate();
    auto& bridge = *task.bridge;
    const auto& codec = bridge.codec();

    std::mt19937 rng(config.seed);
    AttackState state;
    state.suffix_tokens = init_suffix(codec, config);

    AttackResult result;
    result.item_success.assign(task.items.size(), false);

    evaluator::EvalOptions eval_options;
    eval_options.max_new_tokens = config.max_new_tokens;

    auto record_checkpoint = [&](size_t epoch) {
        evaluator::SuffixCheckpoint cp;
        cp.epoch = epoch;
        cp.suffix_tokens = state.suffix_tokens;
        cp.suffix_text = codec.decode(state.suffix_tokens);
        cp.item_losses = checkpoint_losses(task, state.suffix_tokens);
        result.checkpoints.push_back(std::move(cp));
    };

    auto run_success_check = [&](size_t epoch) {
        const std::string suffix_text = codec.decode(state.suffix_tokens);
        bool all = true;
        for (size_t i = 0; i < task.items.size(); ++i) {
            auto rec = evaluator::evaluate_payload(task.items[i], suffix_text, bridge,
                                                   task.profile, evaluator::EvalMode::Attack,
                                                   eval_options);
            rec.epoch = epoch;
            result.item_success[i] = rec.fn_match;
            all = all && rec.fn_match;
            result.check_records.push_back(std::move(rec));
        }
        if (all && !state.hijacking_index) state.hijacking_index = epoch;
        return all;
    };

    record_checkpoint(0);
    if (config.record_suffix_history) result.suffix_history.push_back(state.suffix_tokens);

    for (size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const StepOutcome outcome = attack_step(task, state, config, rng);
        result.topk_truncated = result.topk_truncated || outcome.topk_truncated;
        if (outcome.filter_fallback) result.filter_fallbacks += 1;
        if (config.record_suffix_history) result.suffix_history.push_back(state.suffix_tokens);
        if (epoch % config.checkpoint_every == 0) record_checkpoint(epoch);

        const bool check_now =
            epoch % config.success_check_every == 0 || epoch == config.max_epochs;
        if (check_now && run_success_check(epoch) && config.stop_on_success) {
            if (epoch % config.checkpoint_every != 0) record_checkpoint(epoch);
            break;
        }
    }

    result.state = std::move(state);
    result.success = result.state.hijacking_index.has_value();
    result.suffix_text = codec.decode(result.state.suffix_tokens);
    const Payload deployed = adapters::inject_suffix(task.items.front(), result.suffix_text);
    result.poisoned_function = deployed.target();
    return result;
}

}  // namespace fch::optimizer
