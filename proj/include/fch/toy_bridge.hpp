#pragma once

#include <random>

#include <Eigen/Dense>

#include "fch/bridge.hpp"

namespace fch::lmbridge {

// Concrete toy backend. Public beyond the LmBridge surface so tests can drive
// the relaxed-input loss that defines the gradient (finite-difference oracle).
class ToyBridge : public LmBridge {
public:
    ToyBridge(std::uint64_t seed, size_t vocab_size, const ToyDims& dims);

    const TokenCodec& codec() const override { return codec_; }
    bool supports_gradient() const override { return true; }
    bool supports_batch() const override { return true; }

    std::vector<double> target_loss(const std::vector<LossItem>& batch) override;
    GradientReport suffix_gradient(const std::vector<TokenId>& token_ids, SpanRange suffix_span,
                                   SpanRange target_span) override;
    std::vector<double> next_logits(const std::vector<TokenId>& token_ids) override;
    std::vector<TokenId> greedy_generate(const std::vector<TokenId>& prompt,
                                         size_t max_new_tokens) override;

    // Loss with the suffix positions replaced by arbitrary relaxed one-hot rows
    // (each row has vocab_size entries). At hard one-hots this equals
    // target_loss; its derivative is what suffix_gradient reports.
    double relaxed_suffix_loss(const std::vector<TokenId>& token_ids, SpanRange suffix_span,
                               SpanRange target_span,
                               const std::vector<std::vector<double>>& suffix_rows) const;

    const ToyDims& dims() const { return dims_; }

private:
    struct Layer {
        Eigen::MatrixXd Wq, Wk, Wv, Wo;  // dim x dim
        Eigen::MatrixXd W1, W2;          // dim x hidden, hidden x dim
        Eigen::RowVectorXd b1, b2;
    };

    // Residual-stream activations cached by the forward pass for backprop.
    struct Trace {
        Eigen::MatrixXd h0;                     // after embedding + position
        std::vector<Eigen::MatrixXd> attn_in;   // per layer: input to attention
        std::vector<Eigen::MatrixXd> q, k, v;   // per layer projections
        std::vector<Eigen::MatrixXd> mlp_in;    // per layer: input to mlp
        std::vector<Eigen::MatrixXd> mlp_act;   // per layer: tanh activations
        Eigen::MatrixXd h_final;
    };

    // Relaxed one-hot view of the input: hard token everywhere except the
    // suffix span, where optional dense rows override.
    struct InputView {
        const std::vector<TokenId>* tokens;
        SpanRange suffix_span;
        const std::vector<std::vector<double>>* suffix_rows;  // null = hard

        bool relaxed(size_t pos) const {
            return suffix_rows && pos >= suffix_span.begin && pos < suffix_span.end;
        }
        const std::vector<double>& row(size_t pos) const {
            return (*suffix_rows)[pos - suffix_span.begin];
        }
    };

    Eigen::MatrixXd embed(const InputView& in, size_t len) const;
    void forward(const Eigen::MatrixXd& h0, Trace* trace) const;  // trace != null keeps activations
    Eigen::MatrixXd forward_nocache(Eigen::MatrixXd h) const;

    Eigen::RowVectorXd logits_row(const Eigen::RowVectorXd& h) const;
    // Copy-bias logit row for predicting position `pos` (context = tokens < pos).
    Eigen::RowVectorXd copy_bias_row(const InputView& in, size_t pos) const;
    double inner(const InputView& in, size_t a, size_t b) const;  // <onehot_a, onehot_b>

    double span_loss(const InputView& in, const Eigen::MatrixXd& h_final, SpanRange target_span,
                     Eigen::MatrixXd* dlogits) const;
    void check_span(const std::vector<TokenId>& ids, SpanRange span, const char* what) const;

    ByteCodec codec_;
    ToyDims dims_;
    size_t vocab_;
    double scale_;
    Eigen::MatrixXd E_;     // vocab x dim
    Eigen::MatrixXd P_;     // max_len x dim
    std::vector<Layer> layers_;
    Eigen::MatrixXd Wout_;  // dim x vocab
    Eigen::RowVectorXd bout_;
};

}  // namespace fch::lmbridge
