#include "deconvdec/rnn_decoder.hpp"

namespace deconvdec {

DecoderParams DecoderParams::init(int vocab_size, int embed_dim, int hidden_dim,
                                  std::mt19937_64& rng) {
    DecoderParams params;
    params.embed = EmbeddingTable::init(vocab_size, embed_dim, rng);
    params.lstm = LstmCellParams::init(embed_dim, hidden_dim, rng);
    params.attn_src_W = glorot(hidden_dim, 2 * hidden_dim, rng);
    params.attn_ctx_W = glorot(hidden_dim, embed_dim, rng);
    params.comb_W = glorot(hidden_dim, 3 * hidden_dim + embed_dim, rng);
    params.out_W = glorot(vocab_size, hidden_dim, rng);
    return params;
}

Attention attend(const TensorPtr& query, const TensorPtr& keys, const TensorPtr& W,
                 const std::vector<char>* mask) {
    if (query->ndim() != 1 || keys->ndim() != 2 || W->ndim() != 2) {
        throw DimensionError("attend: query " + query->shape_str() + ", keys " +
                             keys->shape_str() + ", W " + W->shape_str());
    }
    int d = query->dim(0), n = keys->dim(0), w = keys->dim(1);
    if (W->dim(0) != d || W->dim(1) != w) {
        throw DimensionError("attend: W " + W->shape_str() + " does not map query " +
                             query->shape_str() + " against keys " + keys->shape_str());
    }
    // e = (q^T W) keys^T
    TensorPtr qW = matmul(reshape(query, {1, d}), W);           // [1 x w]
    TensorPtr energies = reshape(matmul(qW, transpose(keys)), {n});
    TensorPtr weights;
    if (mask != nullptr) {
        weights = masked_softmax(energies, *mask);
    } else {
        weights = softmax(energies);
    }
    TensorPtr context = reshape(matmul(reshape(weights, {1, n}), keys), {w});
    return {context, weights};
}

StepResult decode_step(const DecoderParams& params, const DecoderState& state,
                       int y_prev, const EncoderStates& enc,
                       const TargetContextMatrix& context, double dropout_rate,
                       std::mt19937_64* rng) {
    TensorPtr y_emb = reshape(embed(params.embed, {y_prev}), {params.embed.dim});
    if (rng != nullptr && dropout_rate > 0.0) {
        y_emb = dropout(y_emb, dropout_rate, true, *rng);
    }

    Attention src = attend(state.s, enc.annotations, params.attn_src_W,
                           &enc.source_mask);
    Attention ctx = attend(state.s, context.E, params.attn_ctx_W, nullptr);

    auto [s_t, c_t] = lstm_step(params.lstm, y_emb, state.s, state.C);

    TensorPtr v = tanh(linear(params.comb_W, nullptr,
                              concat({s_t, src.context, ctx.context})));
    if (rng != nullptr && dropout_rate > 0.0) {
        v = dropout(v, dropout_rate, true, *rng);
    }
    TensorPtr logits = linear(params.out_W, nullptr, v);

    StepResult result;
    result.logits = logits;
    result.state = DecoderState{s_t, c_t, state.step + 1};
    result.alpha = src.weights;
    result.alpha_ctx = ctx.weights;
    return result;
}

}  // namespace deconvdec
