#include "deconvdec/encoder.hpp"

namespace deconvdec {

namespace {
constexpr int kPadId = 0;
}

EncoderParams EncoderParams::init(int vocab_size, int embed_dim, int hidden_dim,
                                  std::mt19937_64& rng) {
    EncoderParams params;
    params.embed = EmbeddingTable::init(vocab_size, embed_dim, rng);
    params.fwd = LstmCellParams::init(embed_dim, hidden_dim, rng);
    params.bwd = LstmCellParams::init(embed_dim, hidden_dim, rng);
    params.init_W = glorot(hidden_dim, 2 * hidden_dim, rng);
    params.init_b = Tensor::param({hidden_dim}, std::vector<double>(hidden_dim, 0.0));
    return params;
}

EncoderStates encode(const EncoderParams& params, const std::vector<int>& src_ids,
                     double dropout_rate, std::mt19937_64* rng) {
    int n = static_cast<int>(src_ids.size());
    if (n == 0) {
        throw DomainError("encode: empty source sentence");
    }
    // Padding is trailing-only: the real sentence ends at the first PAD.
    int real_len = n;
    for (int i = 0; i < n; ++i) {
        if (src_ids[static_cast<std::size_t>(i)] == kPadId) {
            real_len = i;
            break;
        }
    }
    if (real_len == 0) {
        throw DomainError("encode: sentence starts with PAD");
    }
    int hid = params.fwd.hidden_dim;

    std::vector<int> real_ids(src_ids.begin(), src_ids.begin() + real_len);
    TensorPtr emb = embed(params.embed, real_ids);
    if (rng != nullptr && dropout_rate > 0.0) {
        emb = dropout(emb, dropout_rate, true, *rng);
    }

    std::vector<TensorPtr> inputs;
    inputs.reserve(static_cast<std::size_t>(real_len));
    for (int i = 0; i < real_len; ++i) {
        inputs.push_back(reshape(narrow0(emb, i, 1), {params.fwd.input_dim}));
    }

    std::vector<TensorPtr> fwd_states(static_cast<std::size_t>(real_len));
    TensorPtr h = Tensor::zeros({hid});
    TensorPtr c = Tensor::zeros({hid});
    for (int i = 0; i < real_len; ++i) {
        std::tie(h, c) = lstm_step(params.fwd, inputs[static_cast<std::size_t>(i)], h, c);
        fwd_states[static_cast<std::size_t>(i)] = h;
    }
    TensorPtr fwd_final = h;

    std::vector<TensorPtr> bwd_states(static_cast<std::size_t>(real_len));
    h = Tensor::zeros({hid});
    c = Tensor::zeros({hid});
    for (int i = real_len - 1; i >= 0; --i) {
        std::tie(h, c) = lstm_step(params.bwd, inputs[static_cast<std::size_t>(i)], h, c);
        bwd_states[static_cast<std::size_t>(i)] = h;
    }
    TensorPtr bwd_final = h;

    std::vector<TensorPtr> rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rows[static_cast<std::size_t>(i)] =
            i < real_len ? concat({fwd_states[static_cast<std::size_t>(i)],
                                   bwd_states[static_cast<std::size_t>(i)]})
                         : Tensor::zeros({2 * hid});
    }

    EncoderStates states;
    states.annotations = stack_rows(rows);
    states.fwd_final = fwd_final;
    states.bwd_final = bwd_final;
    states.length = n;
    states.source_mask.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < real_len; ++i) {
        states.source_mask[static_cast<std::size_t>(i)] = 1;
    }
    return states;
}

std::pair<TensorPtr, TensorPtr> init_decoder_state(const EncoderStates& states,
                                                   const EncoderParams& params) {
    TensorPtr finals = concat({states.fwd_final, states.bwd_final});
    TensorPtr s0 = tanh(linear(params.init_W, params.init_b, finals));
    TensorPtr c0 = Tensor::zeros({params.fwd.hidden_dim});
    return {s0, c0};
}

}  // namespace deconvdec
