#include "deconvdec/model.hpp"

#include <algorithm>
#include <cmath>

namespace deconvdec {

void ModelConfig::validate() const {
    if (embed_dim < 1 || hidden_dim < 1) {
        throw ConfigError("model dimensions must be >= 1");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
        throw ConfigError("dropout must be in [0, 1), got " + std::to_string(dropout));
    }
    if (target_len < 1) {
        throw ConfigError("deconv target length must be >= 1");
    }
    if (deconv_enabled) {
        validate_deconv_stack(deconv_layers, target_len, 2, hidden_dim, embed_dim);
    }
}

Model::Model(const ModelConfig& config, int src_vocab_size, int tgt_vocab_size,
             std::uint64_t seed)
    : config_(config), src_vocab_size_(src_vocab_size),
      tgt_vocab_size_(tgt_vocab_size) {
    config_.validate();
    if (src_vocab_size < 5 || tgt_vocab_size < 5) {
        throw ConfigError("vocabularies must contain at least one real token");
    }
    std::mt19937_64 rng(seed);
    encoder_ = EncoderParams::init(src_vocab_size, config_.embed_dim,
                                   config_.hidden_dim, rng);
    decoder_ = DecoderParams::init(tgt_vocab_size, config_.embed_dim,
                                   config_.hidden_dim, rng);
    if (config_.deconv_enabled) {
        deconv_ = DeconvParams::init(config_.deconv_layers, config_.target_len,
                                     config_.hidden_dim, config_.embed_dim, rng);
    }

    named_params_.emplace_back("src_embed.matrix", encoder_.embed.matrix);
    named_params_.emplace_back("enc.fwd.W", encoder_.fwd.W);
    named_params_.emplace_back("enc.fwd.b", encoder_.fwd.b);
    named_params_.emplace_back("enc.bwd.W", encoder_.bwd.W);
    named_params_.emplace_back("enc.bwd.b", encoder_.bwd.b);
    named_params_.emplace_back("enc.init.W", encoder_.init_W);
    named_params_.emplace_back("enc.init.b", encoder_.init_b);
    if (deconv_) {
        for (std::size_t l = 0; l < deconv_->specs.size(); ++l) {
            named_params_.emplace_back("deconv.l" + std::to_string(l) + ".K",
                                       deconv_->kernels[l]);
            named_params_.emplace_back("deconv.l" + std::to_string(l) + ".b",
                                       deconv_->biases[l]);
        }
    }
    named_params_.emplace_back("tgt_embed.matrix", decoder_.embed.matrix);
    named_params_.emplace_back("dec.lstm.W", decoder_.lstm.W);
    named_params_.emplace_back("dec.lstm.b", decoder_.lstm.b);
    named_params_.emplace_back("dec.attn_src.W", decoder_.attn_src_W);
    named_params_.emplace_back("dec.attn_ctx.W", decoder_.attn_ctx_W);
    named_params_.emplace_back("dec.comb.W", decoder_.comb_W);
    named_params_.emplace_back("dec.out.W", decoder_.out_W);
}

std::vector<TensorPtr> Model::parameters() const {
    std::vector<TensorPtr> params;
    params.reserve(named_params_.size());
    for (const auto& [name, tensor] : named_params_) {
        params.push_back(tensor);
    }
    return params;
}

void Model::zero_grads() const {
    for (const auto& [name, tensor] : named_params_) {
        tensor->zero_grad();
    }
}

EncoderStates Model::encode_source(const std::vector<int>& src_ids,
                                   double dropout_rate, std::mt19937_64* rng) const {
    return encode(encoder_, src_ids, dropout_rate, rng);
}

TargetContextMatrix Model::context_for(const EncoderStates& states) const {
    if (deconv_) {
        return deconv_forward(build_input_matrix(states), *deconv_);
    }
    TargetContextMatrix context;
    context.E = Tensor::zeros({config_.target_len, config_.embed_dim});
    context.target_len = config_.target_len;
    context.dim = config_.embed_dim;
    return context;
}

std::vector<TensorPtr> Model::teacher_forced_logits(
    const EncoderStates& enc, const TargetContextMatrix& context,
    const std::vector<int>& framed_tgt, int framed_len, double dropout_rate,
    std::mt19937_64* rng) const {
    if (framed_len < 2 || framed_len > static_cast<int>(framed_tgt.size())) {
        throw DomainError("teacher_forced_logits: framed target length " +
                          std::to_string(framed_len) + " invalid");
    }
    auto [s, c] = init_decoder_state(enc, encoder_);
    DecoderState state{s, c, 0};
    std::vector<TensorPtr> logits;
    logits.reserve(static_cast<std::size_t>(framed_len - 1));
    for (int t = 0; t + 1 < framed_len; ++t) {
        StepResult step = decode_step(decoder_, state,
                                      framed_tgt[static_cast<std::size_t>(t)], enc,
                                      context, dropout_rate, rng);
        logits.push_back(step.logits);
        state = step.state;
    }
    return logits;
}

LossBreakdown Model::loss(const ParallelBatch& batch, bool training,
                          std::mt19937_64* rng) const {
    if (batch.size() == 0) {
        throw DomainError("loss: empty batch");
    }
    double rate = training ? config_.dropout : 0.0;
    std::mt19937_64* gen = training ? rng : nullptr;

    std::vector<TensorPtr> all_logits;
    std::vector<int> all_refs;
    std::vector<char> all_mask;
    TensorPtr smooth_sum;
    TensorPtr ce_sum;

    for (int b = 0; b < batch.size(); ++b) {
        const std::vector<int>& src = batch.src[static_cast<std::size_t>(b)];
        const std::vector<int>& framed = batch.tgt[static_cast<std::size_t>(b)];
        int framed_len = batch.tgt_len[static_cast<std::size_t>(b)] + 2;

        EncoderStates enc = encode_source(src, rate, gen);
        TargetContextMatrix context = context_for(enc);

        std::vector<TensorPtr> logits =
            teacher_forced_logits(enc, context, framed, framed_len, rate, gen);
        for (std::size_t t = 0; t < logits.size(); ++t) {
            all_logits.push_back(logits[t]);
            all_refs.push_back(framed[t + 1]);
            all_mask.push_back(1);
        }

        if (deconv_) {
            std::vector<int> real_tgt(framed.begin() + 1,
                                      framed.begin() + framed_len - 1);
            TensorPtr e_ref = target_matrix_reference(decoder_.embed, real_tgt,
                                                      config_.target_len);
            TensorPtr s = smooth_l1(context.E, e_ref);
            smooth_sum = smooth_sum ? add(smooth_sum, s) : s;

            TensorPtr pred = deconv_predict(context, decoder_.embed);
            TensorPtr ce = deconv_ce(
                pred, padded_reference_ids(real_tgt, config_.target_len));
            ce_sum = ce_sum ? add(ce_sum, ce) : ce;
        }
    }

    TensorPtr nll = masked_nll(stack_rows(all_logits), all_refs, all_mask);
    LossBreakdown breakdown;
    breakdown.nll = nll->value();
    breakdown.token_count = static_cast<long>(all_refs.size());
    TensorPtr total = nll;
    if (deconv_) {
        TensorPtr smooth_mean = scale(smooth_sum, 1.0 / batch.size());
        TensorPtr ce_mean = scale(ce_sum, 1.0 / batch.size());
        breakdown.smooth_l1 = smooth_mean->value();
        breakdown.deconv_ce = ce_mean->value();
        total = add(total, add(smooth_mean, ce_mean));
    }
    breakdown.total = total->value();
    breakdown.total_tensor = total;
    return breakdown;
}

// ---- decoding adapter -------------------------------------------------------

namespace {

class NmtStepModel final : public StepModel {
  public:
    NmtStepModel(const Model& model, const std::vector<int>& src_ids)
        : model_(model), banned_{Vocabulary::kPad, Vocabulary::kBos} {
        enc_ = model.encode_source(src_ids);
        context_ = model.context_for(enc_);
    }

    int vocab_size() const override { return model_.tgt_vocab_size(); }
    int eos_token() const override { return Vocabulary::kEos; }
    const std::vector<int>& banned_tokens() const override { return banned_; }

    struct NmtNode : Node {
        std::shared_ptr<const NmtNode> parent;
        int token = Vocabulary::kBos;  // last consumed token
        DecoderState state;            // state the next step starts from
        // Attention that produced this node's token (empty at the root).
        std::vector<double> alpha;
        std::vector<double> alpha_ctx;
        // Lazy expansion cache.
        mutable bool expanded = false;
        mutable std::vector<double> log_probs;
        mutable DecoderState next_state;
        mutable std::vector<double> next_alpha;
        mutable std::vector<double> next_alpha_ctx;
    };

    NodePtr root() override {
        auto node = std::make_shared<NmtNode>();
        auto [s, c] = init_decoder_state(enc_, model_.encoder());
        node->state = DecoderState{s, c, 0};
        return node;
    }

    const std::vector<double>& log_probs(const NodePtr& node) override {
        const auto& n = static_cast<const NmtNode&>(*node);
        if (!n.expanded) {
            StepResult step =
                decode_step(model_.decoder(), n.state, n.token, enc_, context_);
            const std::vector<double>& logits = step.logits->data;
            double mx = *std::max_element(logits.begin(), logits.end());
            double denom = 0.0;
            for (double v : logits) {
                denom += std::exp(v - mx);
            }
            double log_denom = mx + std::log(denom);
            n.log_probs.resize(logits.size());
            for (std::size_t i = 0; i < logits.size(); ++i) {
                n.log_probs[i] = logits[i] - log_denom;
            }
            n.next_state = step.state;
            n.next_alpha = step.alpha->data;
            n.next_alpha_ctx = step.alpha_ctx->data;
            n.expanded = true;
        }
        return n.log_probs;
    }

    NodePtr append(const NodePtr& node, int token) override {
        log_probs(node);  // ensure the expansion cache is filled
        auto parent = std::static_pointer_cast<const NmtNode>(node);
        auto child = std::make_shared<NmtNode>();
        child->parent = parent;
        child->token = token;
        child->state = parent->next_state;
        child->alpha = parent->next_alpha;
        child->alpha_ctx = parent->next_alpha_ctx;
        return child;
    }

  private:
    const Model& model_;
    std::vector<int> banned_;
    EncoderStates enc_;
    TargetContextMatrix context_;
};

}  // namespace

std::unique_ptr<StepModel> Model::step_model(const std::vector<int>& src_ids) const {
    return std::make_unique<NmtStepModel>(*this, src_ids);
}

DecodeResult Model::greedy(const std::vector<int>& src_ids, int max_len) const {
    if (max_len <= 0) {
        max_len = default_max_len(static_cast<int>(src_ids.size()));
    }
    auto stepper = step_model(src_ids);
    return greedy_decode(*stepper, max_len);
}

DecodeResult Model::beam(const std::vector<int>& src_ids, int width,
                         int max_len) const {
    if (max_len <= 0) {
        max_len = default_max_len(static_cast<int>(src_ids.size()));
    }
    auto stepper = step_model(src_ids);
    return beam_decode(*stepper, width, max_len);
}

std::vector<StepTrace> Model::trace_of(const DecodeResult& result) {
    std::vector<StepTrace> trace;
    using NmtNode = NmtStepModel::NmtNode;
    auto node = std::dynamic_pointer_cast<const NmtNode>(result.leaf);
    while (node != nullptr && node->parent != nullptr) {
        trace.push_back({node->token, node->alpha, node->alpha_ctx});
        node = node->parent;
    }
    std::reverse(trace.begin(), trace.end());
    return trace;
}

}  // namespace deconvdec
