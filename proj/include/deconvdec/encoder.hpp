#pragma once

#include <utility>
#include <vector>

#include "deconvdec/layers.hpp"

namespace deconvdec {

struct EncoderParams {
    EmbeddingTable embed;
    LstmCellParams fwd;
    LstmCellParams bwd;
    TensorPtr init_W;  // [hidden x 2*hidden]
    TensorPtr init_b;  // [hidden]

    static EncoderParams init(int vocab_size, int embed_dim, int hidden_dim,
                              std::mt19937_64& rng);
};

/// Per-position annotations plus the two directional final states. Trailing
/// PAD positions carry zero annotations and are excluded via source_mask;
/// the final states are taken at the real sentence boundary so padding never
/// leaks into either decoder.
struct EncoderStates {
    TensorPtr annotations;  // [n x 2*hidden], row i = [fwd_i ; bwd_i]
    TensorPtr fwd_final;    // [hidden]
    TensorPtr bwd_final;    // [hidden]
    int length = 0;                 // n, including padding rows
    std::vector<char> source_mask;  // true at non-PAD positions
};

/// Bidirectional LSTM pass. PAD ids (id 0) may appear as trailing padding
/// only. Dropout applies to the input embeddings when rng is given.
EncoderStates encode(const EncoderParams& params, const std::vector<int>& src_ids,
                     double dropout_rate = 0.0, std::mt19937_64* rng = nullptr);

/// s_0 = tanh(W_init [fwd_final; bwd_final] + b_init), C_0 = 0.
std::pair<TensorPtr, TensorPtr> init_decoder_state(const EncoderStates& states,
                                                   const EncoderParams& params);

}  // namespace deconvdec
