#pragma once

#include <random>

#include "deconvdec/deconv_decoder.hpp"
#include "deconvdec/encoder.hpp"
#include "deconvdec/layers.hpp"

namespace deconvdec {

struct DecoderParams {
    EmbeddingTable embed;  // target-side table, also used by the losses
    LstmCellParams lstm;   // input = embed_dim, hidden = d
    TensorPtr attn_src_W;  // [d x 2d], bilinear map against encoder annotations
    TensorPtr attn_ctx_W;  // [d x dim], bilinear map against the context matrix
    TensorPtr comb_W;      // [d x (d + 2d + dim)], combiner for v_t
    TensorPtr out_W;       // [vocab x d], vocabulary projection

    static DecoderParams init(int vocab_size, int embed_dim, int hidden_dim,
                              std::mt19937_64& rng);
};

struct DecoderState {
    TensorPtr s;  // hidden, [d]
    TensorPtr C;  // cell, [d]
    int step = 0;
};

struct Attention {
    TensorPtr context;  // [w]
    TensorPtr weights;  // [n], sums to 1 over unmasked positions
};

/// Bilinear global attention: energies e_i = query^T W keys_i at unmasked i,
/// softmax-normalized; context is the weight-averaged key. Pass mask = nullptr
/// to attend over every row.
Attention attend(const TensorPtr& query, const TensorPtr& keys, const TensorPtr& W,
                 const std::vector<char>* mask);

struct StepResult {
    TensorPtr logits;     // [vocab]
    DecoderState state;
    TensorPtr alpha;      // [n], source attention weights
    TensorPtr alpha_ctx;  // [T], context-matrix attention weights
};

/// One decoder step. Both attentions are queried with the previous state
/// s_{t-1}; the LSTM consumes the embedding of y_prev; logits come from
/// v_t = tanh(W_v [s_t; c_t; c~_t]).
StepResult decode_step(const DecoderParams& params, const DecoderState& state,
                       int y_prev, const EncoderStates& enc,
                       const TargetContextMatrix& context,
                       double dropout_rate = 0.0, std::mt19937_64* rng = nullptr);

}  // namespace deconvdec
