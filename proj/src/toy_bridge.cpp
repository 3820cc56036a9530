#include "fch/toy_bridge.hpp"

#include <cmath>
#include <stdexcept>

#include "fch/errors.hpp"
#include "fch/util.hpp"

namespace fch::lmbridge {

std::string LmBridge::generate_text(const std::vector<TokenId>& prompt, size_t max_new_tokens) {
    return codec().decode(greedy_generate(prompt, max_new_tokens));
}

GradientReport LmBridge::suffix_gradient(const std::vector<TokenId>&, SpanRange, SpanRange) {
    throw capability_error("this backend does not expose gradients");
}

std::unique_ptr<LmBridge> make_toy_bridge(std::uint64_t seed, size_t vocab_size,
                                          const ToyDims& dims) {
    return std::make_unique<ToyBridge>(seed, vocab_size, dims);
}

namespace {

void fill_gaussian(Eigen::MatrixXd& m, std::mt19937& rng, double std) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = util::gaussian(rng) * std;
}

}  // namespace

ToyBridge::ToyBridge(std::uint64_t seed, size_t vocab_size, const ToyDims& dims)
    : codec_(vocab_size), dims_(dims), vocab_(vocab_size) {
    if (vocab_size < 16) throw std::invalid_argument("toy bridge needs vocab_size >= 16");
    if (dims.layers < 1 || dims.dim < 2 || dims.max_len < 8)
        throw std::invalid_argument("toy bridge shape too small");
    if (dims.copy_order < 1 || dims.copy_order > 4)
        throw std::invalid_argument("copy_order must be in [1,4]");

    const auto d = static_cast<Eigen::Index>(dims.dim);
    const auto hidden = d * 2;
    scale_ = dims.init_scale / std::sqrt(static_cast<double>(dims.dim));

    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    E_.resize(static_cast<Eigen::Index>(vocab_), d);
    fill_gaussian(E_, rng, scale_);
    P_.resize(static_cast<Eigen::Index>(dims.max_len), d);
    fill_gaussian(P_, rng, scale_);
    layers_.resize(dims.layers);
    for (auto& lay : layers_) {
        lay.Wq.resize(d, d); fill_gaussian(lay.Wq, rng, scale_);
        lay.Wk.resize(d, d); fill_gaussian(lay.Wk, rng, scale_);
        lay.Wv.resize(d, d); fill_gaussian(lay.Wv, rng, scale_);
        lay.Wo.resize(d, d); fill_gaussian(lay.Wo, rng, scale_);
        lay.W1.resize(d, hidden); fill_gaussian(lay.W1, rng, scale_);
        lay.b1 = Eigen::RowVectorXd::Zero(hidden);
        lay.W2.resize(hidden, d);
        fill_gaussian(lay.W2, rng, dims.init_scale / std::sqrt(static_cast<double>(hidden)));
        lay.b2 = Eigen::RowVectorXd::Zero(d);
    }
    Wout_.resize(d, static_cast<Eigen::Index>(vocab_));
    fill_gaussian(Wout_, rng, scale_);
    bout_ = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(vocab_));
}

void ToyBridge::check_span(const std::vector<TokenId>& ids, SpanRange span, const char* what) const {
    if (span.begin > span.end || span.end > ids.size())
        throw std::invalid_argument(std::string(what) + " span out of bounds");
}

Eigen::MatrixXd ToyBridge::embed(const InputView& in, size_t len) const {
    if (len == 0) throw std::invalid_argument("empty token sequence");
    if (len > dims_.max_len)
        throw std::runtime_error("context overflow: sequence of " + std::to_string(len) +
                                 " exceeds max_len " + std::to_string(dims_.max_len));
    Eigen::MatrixXd h0(static_cast<Eigen::Index>(len), E_.cols());
    for (size_t i = 0; i < len; ++i) {
        if (in.relaxed(i)) {
            const auto& row = in.row(i);
            Eigen::Map<const Eigen::RowVectorXd> r(row.data(), static_cast<Eigen::Index>(row.size()));
            h0.row(static_cast<Eigen::Index>(i)) = r * E_;
        } else {
            const TokenId t = (*in.tokens)[i];
            if (t < 0 || static_cast<size_t>(t) >= vocab_)
                throw std::invalid_argument("token id " + std::to_string(t) + " out of vocab");
            h0.row(static_cast<Eigen::Index>(i)) = E_.row(t);
        }
        h0.row(static_cast<Eigen::Index>(i)) += P_.row(static_cast<Eigen::Index>(i));
    }
    return h0;
}

void ToyBridge::forward(const Eigen::MatrixXd& h0, Trace* trace) const {
    const double inv = 1.0 / std::sqrt(static_cast<double>(dims_.dim));
    const Eigen::Index L = h0.rows();
    Eigen::MatrixXd h = h0;
    if (trace) {
        trace->h0 = h0;
        trace->attn_in.clear(); trace->q.clear(); trace->k.clear(); trace->v.clear();
        trace->mlp_in.clear(); trace->mlp_act.clear();
    }
    for (const auto& lay : layers_) {
        if (trace) trace->attn_in.push_back(h);
        Eigen::MatrixXd q = h * lay.Wq, k = h * lay.Wk, v = h * lay.Wv;
        Eigen::MatrixXd ctx(L, h.cols());
        for (Eigen::Index i = 0; i < L; ++i) {
            Eigen::VectorXd s = (k.topRows(i + 1) * q.row(i).transpose()) * inv;
            const double m = s.maxCoeff();
            Eigen::VectorXd a = (s.array() - m).exp();
            a /= a.sum();
            ctx.row(i) = a.transpose() * v.topRows(i + 1);
        }
        if (trace) {
            trace->q.push_back(q); trace->k.push_back(k); trace->v.push_back(std::move(v));
        }
        h += ctx * lay.Wo;
        if (trace) trace->mlp_in.push_back(h);
        Eigen::MatrixXd act = ((h * lay.W1).rowwise() + lay.b1).array().tanh();
        h += act * lay.W2;
        h.rowwise() += lay.b2;
        if (trace) trace->mlp_act.push_back(std::move(act));
    }
    if (trace) trace->h_final = std::move(h);
}

Eigen::MatrixXd ToyBridge::forward_nocache(Eigen::MatrixXd h) const {
    Trace trace;
    forward(h, &trace);
    return std::move(trace.h_final);
}

Eigen::RowVectorXd ToyBridge::logits_row(const Eigen::RowVectorXd& h) const {
    return h * Wout_ + bout_;
}

double ToyBridge::inner(const InputView& in, size_t a, size_t b) const {
    const bool ra = in.relaxed(a), rb = in.relaxed(b);
    if (!ra && !rb) return (*in.tokens)[a] == (*in.tokens)[b] ? 1.0 : 0.0;
    if (ra && !rb) return in.row(a)[static_cast<size_t>((*in.tokens)[b])];
    if (!ra && rb) return in.row(b)[static_cast<size_t>((*in.tokens)[a])];
    const auto &x = in.row(a), &y = in.row(b);
    double acc = 0.0;
    for (size_t v = 0; v < x.size(); ++v) acc += x[v] * y[v];
    return acc;
}

Eigen::RowVectorXd ToyBridge::copy_bias_row(const InputView& in, size_t pos) const {
    Eigen::RowVectorXd bias = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(vocab_));
    const double gamma = dims_.copy_bias;
    if (gamma == 0.0) return bias;
    const size_t c = static_cast<size_t>(dims_.copy_order);
    if (pos < c + 1) return bias;
    for (size_t i = c - 1; i + 2 <= pos; ++i) {
        // match strength of the c-gram ending at i against the one ending at pos-1
        double w = 1.0;
        for (size_t r = 0; r < c && w != 0.0; ++r) w *= inner(in, i - r, pos - 1 - r);
        if (w == 0.0) continue;
        const size_t succ = i + 1;
        if (in.relaxed(succ)) {
            const auto& row = in.row(succ);
            for (size_t v = 0; v < row.size(); ++v) bias[static_cast<Eigen::Index>(v)] += gamma * w * row[v];
        } else {
            bias[(*in.tokens)[succ]] += gamma * w;
        }
    }
    return bias;
}

double ToyBridge::span_loss(const InputView& in, const Eigen::MatrixXd& h_final,
                            SpanRange target_span, Eigen::MatrixXd* dlogits) const {
    double loss = 0.0;
    for (size_t t = target_span.begin; t < target_span.end; ++t) {
        Eigen::RowVectorXd z = logits_row(h_final.row(static_cast<Eigen::Index>(t - 1)));
        if (dims_.copy_bias != 0.0) z += copy_bias_row(in, t);
        const double m = z.maxCoeff();
        const double lse = m + std::log((z.array() - m).exp().sum());
        const TokenId tok = (*in.tokens)[t];
        loss += lse - z[tok];
        if (dlogits) {
            Eigen::RowVectorXd p = (z.array() - lse).exp();
            p[tok] -= 1.0;
            dlogits->row(static_cast<Eigen::Index>(t - 1)) = p;
        }
    }
    return loss;
}

std::vector<double> ToyBridge::target_loss(const std::vector<LossItem>& batch) {
    std::vector<double> out;
    out.reserve(batch.size());
    for (const auto& item : batch) {
        check_span(item.token_ids, item.target_span, "target");
        if (item.target_span.empty()) throw std::invalid_argument("target span is empty");
        if (item.target_span.begin < 1)
            throw std::invalid_argument("target span needs at least one token of left context");
        InputView in{&item.token_ids, {}, nullptr};
        const Eigen::MatrixXd h = forward_nocache(embed(in, item.token_ids.size()));
        out.push_back(span_loss(in, h, item.target_span, nullptr));
    }
    return out;
}

double ToyBridge::relaxed_suffix_loss(const std::vector<TokenId>& token_ids, SpanRange suffix_span,
                                      SpanRange target_span,
                                      const std::vector<std::vector<double>>& suffix_rows) const {
    check_span(token_ids, suffix_span, "suffix");
    check_span(token_ids, target_span, "target");
    if (target_span.empty() || target_span.begin < 1)
        throw std::invalid_argument("target span must be non-empty with left context");
    if (suffix_rows.size() != suffix_span.size())
        throw std::invalid_argument("one relaxed row per suffix position required");
    for (const auto& row : suffix_rows)
        if (row.size() != vocab_) throw std::invalid_argument("relaxed row width != vocab");
    InputView in{&token_ids, suffix_span, &suffix_rows};
    const Eigen::MatrixXd h = forward_nocache(embed(in, token_ids.size()));
    return span_loss(in, h, target_span, nullptr);
}

GradientReport ToyBridge::suffix_gradient(const std::vector<TokenId>& token_ids,
                                          SpanRange suffix_span, SpanRange target_span) {
    check_span(token_ids, suffix_span, "suffix");
    check_span(token_ids, target_span, "target");
    if (target_span.empty() || target_span.begin < 1)
        throw std::invalid_argument("target span must be non-empty with left context");
    if (!suffix_span.empty() && suffix_span.end > target_span.begin &&
        suffix_span.begin < target_span.end)
        throw std::invalid_argument("suffix and target spans overlap");

    const Eigen::Index L = static_cast<Eigen::Index>(token_ids.size());
    const Eigen::Index V = static_cast<Eigen::Index>(vocab_);
    const double inv = 1.0 / std::sqrt(static_cast<double>(dims_.dim));
    InputView in{&token_ids, {}, nullptr};

    Trace tr;
    forward(embed(in, token_ids.size()), &tr);

    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(L, V);
    span_loss(in, tr.h_final, target_span, &dlogits);

    // Output projection: only rows feeding the target span are non-zero.
    Eigen::MatrixXd dH = Eigen::MatrixXd::Zero(L, E_.cols());
    for (size_t t = target_span.begin; t < target_span.end; ++t) {
        const auto r = static_cast<Eigen::Index>(t - 1);
        dH.row(r) = dlogits.row(r) * Wout_.transpose();
    }

    for (size_t li = layers_.size(); li-- > 0;) {
        const Layer& lay = layers_[li];
        // MLP block: out = in + tanh(in*W1 + b1)*W2 + b2
        const Eigen::MatrixXd& act = tr.mlp_act[li];
        Eigen::MatrixXd dact = dH * lay.W2.transpose();
        Eigen::MatrixXd dpre = dact.array() * (1.0 - act.array().square());
        dH += (dpre * lay.W1.transpose()).eval();

        // Attention block: out = in + softmax(QK^T/sqrt(d)) V Wo
        const Eigen::MatrixXd &Q = tr.q[li], &K = tr.k[li], &Vv = tr.v[li];
        Eigen::MatrixXd dctx = dH * lay.Wo.transpose();
        Eigen::MatrixXd dQ = Eigen::MatrixXd::Zero(L, Q.cols());
        Eigen::MatrixXd dK = Eigen::MatrixXd::Zero(L, K.cols());
        Eigen::MatrixXd dV = Eigen::MatrixXd::Zero(L, Vv.cols());
        for (Eigen::Index i = 0; i < L; ++i) {
            Eigen::VectorXd s = (K.topRows(i + 1) * Q.row(i).transpose()) * inv;
            const double m = s.maxCoeff();
            Eigen::VectorXd a = (s.array() - m).exp();
            a /= a.sum();
            Eigen::VectorXd da = Vv.topRows(i + 1) * dctx.row(i).transpose();
            Eigen::VectorXd ds = a.cwiseProduct(da - Eigen::VectorXd::Constant(i + 1, a.dot(da)));
            dQ.row(i) += (ds.transpose() * K.topRows(i + 1)) * inv;
            dK.topRows(i + 1) += ds * Q.row(i) * inv;
            dV.topRows(i + 1) += a * dctx.row(i);
        }
        dH += (dQ * lay.Wq.transpose() + dK * lay.Wk.transpose() + dV * lay.Wv.transpose()).eval();
    }

    GradientReport report;
    report.suffix_span = suffix_span;
    report.rows.assign(suffix_span.size(), std::vector<double>(vocab_, 0.0));
    for (size_t i = suffix_span.begin; i < suffix_span.end; ++i) {
        Eigen::VectorXd g = E_ * dH.row(static_cast<Eigen::Index>(i)).transpose();
        auto& row = report.rows[i - suffix_span.begin];
        for (size_t v = 0; v < vocab_; ++v) row[v] = g[static_cast<Eigen::Index>(v)];
    }

    // Copy-bias path: logits depend on the one-hots directly, not via embeddings.
    if (dims_.copy_bias != 0.0 && !suffix_span.empty()) {
        const size_t c = static_cast<size_t>(dims_.copy_order);
        const double gamma = dims_.copy_bias;
        const auto& x = token_ids;
        const size_t sb = suffix_span.begin, se = suffix_span.end;
        auto in_suffix = [&](size_t p) { return p >= sb && p < se; };
        for (size_t t = target_span.begin; t < target_span.end; ++t) {
            if (t < c + 1) continue;
            const auto g = dlogits.row(static_cast<Eigen::Index>(t - 1));
            for (size_t i = c - 1; i + 2 <= t; ++i) {
                size_t mismatches = 0, mis_r = 0;
                for (size_t r = 0; r < c; ++r) {
                    if (x[i - r] != x[t - 1 - r]) {
                        ++mismatches;
                        mis_r = r;
                        if (mismatches > 1) break;
                    }
                }
                if (mismatches > 1) continue;
                const double beta = gamma * g[x[i + 1]];
                if (mismatches == 0) {
                    if (in_suffix(i + 1)) {  // value role: whole dlogits row flows in
                        auto& row = report.rows[i + 1 - sb];
                        for (size_t v = 0; v < vocab_; ++v)
                            row[v] += gamma * g[static_cast<Eigen::Index>(v)];
                    }
                    for (size_t r = 0; r < c; ++r) {
                        if (in_suffix(i - r)) report.rows[i - r - sb][x[t - 1 - r]] += beta;
                        if (in_suffix(t - 1 - r)) report.rows[t - 1 - r - sb][x[i - r]] += beta;
                    }
                } else {  // exactly one mismatched factor: only its own inputs get gradient
                    const size_t r = mis_r;
                    if (in_suffix(i - r)) report.rows[i - r - sb][x[t - 1 - r]] += beta;
                    if (in_suffix(t - 1 - r)) report.rows[t - 1 - r - sb][x[i - r]] += beta;
                }
            }
        }
    }

    for (const auto& row : report.rows)
        for (double v : row)
            if (!std::isfinite(v)) throw std::runtime_error("non-finite gradient entry");
    return report;
}

std::vector<double> ToyBridge::next_logits(const std::vector<TokenId>& token_ids) {
    InputView in{&token_ids, {}, nullptr};
    const Eigen::MatrixXd h = forward_nocache(embed(in, token_ids.size()));
    Eigen::RowVectorXd z = logits_row(h.row(h.rows() - 1));
    if (dims_.copy_bias != 0.0) z += copy_bias_row(in, token_ids.size());
    return {z.data(), z.data() + z.size()};
}

std::vector<TokenId> ToyBridge::greedy_generate(const std::vector<TokenId>& prompt,
                                                size_t max_new_tokens) {
    if (prompt.empty()) throw std::invalid_argument("empty prompt");
    const size_t cap = prompt.size() + max_new_tokens;
    if (cap > dims_.max_len)
        throw std::runtime_error("context overflow: prompt " + std::to_string(prompt.size()) +
                                 " + " + std::to_string(max_new_tokens) + " new tokens exceeds max_len " +
                                 std::to_string(dims_.max_len));

    const Eigen::Index d = E_.cols();
    const double inv = 1.0 / std::sqrt(static_cast<double>(dims_.dim));
    std::vector<Eigen::MatrixXd> kc(layers_.size()), vc(layers_.size());
    for (size_t l = 0; l < layers_.size(); ++l) {
        kc[l].resize(static_cast<Eigen::Index>(cap), d);
        vc[l].resize(static_cast<Eigen::Index>(cap), d);
    }

    std::vector<TokenId> tokens = prompt;
    tokens.reserve(cap);
    std::vector<TokenId> generated;
    InputView in{&tokens, {}, nullptr};

    Eigen::RowVectorXd logits;
    for (size_t pos = 0; pos < cap; ++pos) {
        TokenId tok;
        if (pos < prompt.size()) {
            tok = prompt[pos];
        } else {
            Eigen::RowVectorXd z = logits;
            if (dims_.copy_bias != 0.0) z += copy_bias_row(in, pos);
            Eigen::Index best = 0;
            z.maxCoeff(&best);
            tok = static_cast<TokenId>(best);
            if (tok == codec_.end_of_turn_id()) break;
            generated.push_back(tok);
            tokens.push_back(tok);
        }
        if (tok < 0 || static_cast<size_t>(tok) >= vocab_)
            throw std::invalid_argument("token id " + std::to_string(tok) + " out of vocab");

        Eigen::RowVectorXd h = E_.row(tok) + P_.row(static_cast<Eigen::Index>(pos));
        for (size_t l = 0; l < layers_.size(); ++l) {
            const Layer& lay = layers_[l];
            const Eigen::Index n = static_cast<Eigen::Index>(pos) + 1;
            Eigen::RowVectorXd q = h * lay.Wq;
            kc[l].row(n - 1) = h * lay.Wk;
            vc[l].row(n - 1) = h * lay.Wv;
            Eigen::VectorXd s = (kc[l].topRows(n) * q.transpose()) * inv;
            const double m = s.maxCoeff();
            Eigen::VectorXd a = (s.array() - m).exp();
            a /= a.sum();
            h += (a.transpose() * vc[l].topRows(n)) * lay.Wo;
            Eigen::RowVectorXd act = ((h * lay.W1) + lay.b1).array().tanh();
            h += act * lay.W2 + lay.b2;
        }
        logits = logits_row(h);
    }
    return generated;
}

}  // namespace fch::lmbridge
