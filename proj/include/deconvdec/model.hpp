#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "deconvdec/data.hpp"
#include "deconvdec/decoding.hpp"
#include "deconvdec/deconv_decoder.hpp"
#include "deconvdec/encoder.hpp"
#include "deconvdec/objective.hpp"
#include "deconvdec/rnn_decoder.hpp"

namespace deconvdec {

struct ModelConfig {
    int embed_dim = 64;
    int hidden_dim = 64;
    double dropout = 0.3;
    bool deconv_enabled = true;
    int target_len = 12;
    std::vector<DeconvLayerSpec> deconv_layers{
        {4, 2, 1, 64}, {4, 2, 1, 64}, {4, 2, 1, 64}};

    void validate() const;  // ConfigError on any inconsistency
};

/// Attention rows captured for one emitted token during tracing.
struct StepTrace {
    int token = 0;
    std::vector<double> alpha;      // over source positions
    std::vector<double> alpha_ctx;  // over context-matrix rows
};

class Model {
  public:
    Model(const ModelConfig& config, int src_vocab_size, int tgt_vocab_size,
          std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    int src_vocab_size() const { return src_vocab_size_; }
    int tgt_vocab_size() const { return tgt_vocab_size_; }

    EncoderParams& encoder() { return encoder_; }
    const EncoderParams& encoder() const { return encoder_; }
    DecoderParams& decoder() { return decoder_; }
    const DecoderParams& decoder() const { return decoder_; }
    const std::optional<DeconvParams>& deconv() const { return deconv_; }

    /// All trainable tensors keyed by canonical path, in a fixed order.
    const std::vector<std::pair<std::string, TensorPtr>>& named_parameters() const {
        return named_params_;
    }
    std::vector<TensorPtr> parameters() const;
    void zero_grads() const;

    EncoderStates encode_source(const std::vector<int>& src_ids,
                                double dropout_rate = 0.0,
                                std::mt19937_64* rng = nullptr) const;
    /// Context matrix from the deconvolution stack, or a zero matrix of the
    /// same shape when the deconv path is disabled.
    TargetContextMatrix context_for(const EncoderStates& states) const;

    /// Teacher-forced rollout over a BOS...EOS framed target; returns one
    /// logits row per predicted position (real tokens + EOS).
    std::vector<TensorPtr> teacher_forced_logits(
        const EncoderStates& enc, const TargetContextMatrix& context,
        const std::vector<int>& framed_tgt, int framed_len,
        double dropout_rate = 0.0, std::mt19937_64* rng = nullptr) const;

    /// Three-term batch loss; must run under an active Tape for backward.
    LossBreakdown loss(const ParallelBatch& batch, bool training,
                       std::mt19937_64* rng) const;

    std::unique_ptr<StepModel> step_model(const std::vector<int>& src_ids) const;
    DecodeResult greedy(const std::vector<int>& src_ids, int max_len = 0) const;
    DecodeResult beam(const std::vector<int>& src_ids, int width,
                      int max_len = 0) const;
    /// Attention rows along the path of a finished decode.
    static std::vector<StepTrace> trace_of(const DecodeResult& result);

    static int default_max_len(int src_len) { return 2 * src_len + 10; }

  private:
    ModelConfig config_;
    int src_vocab_size_ = 0;
    int tgt_vocab_size_ = 0;
    EncoderParams encoder_;
    DecoderParams decoder_;
    std::optional<DeconvParams> deconv_;
    std::vector<std::pair<std::string, TensorPtr>> named_params_;
};

}  // namespace deconvdec
