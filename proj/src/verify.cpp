#include "deconvdec/verify.hpp"

#include <random>

namespace deconvdec {

std::vector<GroupGradCheck> model_gradcheck(const Model& model,
                                            const ParallelBatch& batch, double h,
                                            double tol) {
    model.zero_grads();
    {
        Tape tape;
        LossBreakdown loss = model.loss(batch, false, nullptr);
        tape.backward(loss.total_tensor);
    }
    auto forward = [&model, &batch]() {
        return model.loss(batch, false, nullptr).total;
    };
    std::vector<GroupGradCheck> results;
    results.reserve(model.named_parameters().size());
    for (const auto& [name, tensor] : model.named_parameters()) {
        results.push_back({name, finite_diff_check(forward, tensor, h, tol)});
    }
    return results;
}

ParallelBatch gradcheck_batch(int src_vocab_size, int tgt_vocab_size,
                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> src_tok(4, src_vocab_size - 1);
    std::uniform_int_distribution<int> tgt_tok(4, tgt_vocab_size - 1);

    ParallelBatch batch;
    const std::vector<int> src_lens{4, 3};
    const std::vector<int> tgt_lens{3, 4};
    int n_max = 4, m_max = 4;
    for (std::size_t b = 0; b < src_lens.size(); ++b) {
        std::vector<int> src;
        for (int i = 0; i < src_lens[b]; ++i) {
            src.push_back(src_tok(rng));
        }
        std::vector<char> src_mask(static_cast<std::size_t>(n_max), 0);
        std::fill(src_mask.begin(), src_mask.begin() + src_lens[b], 1);
        src.resize(static_cast<std::size_t>(n_max), 0);

        std::vector<int> framed{2};  // BOS
        for (int i = 0; i < tgt_lens[b]; ++i) {
            framed.push_back(tgt_tok(rng));
        }
        framed.push_back(3);  // EOS
        std::vector<char> tgt_mask(static_cast<std::size_t>(m_max) + 2, 0);
        std::fill(tgt_mask.begin(), tgt_mask.begin() + tgt_lens[b] + 2, 1);
        framed.resize(static_cast<std::size_t>(m_max) + 2, 0);

        batch.src.push_back(std::move(src));
        batch.src_mask.push_back(std::move(src_mask));
        batch.tgt.push_back(std::move(framed));
        batch.tgt_mask.push_back(std::move(tgt_mask));
        batch.src_len.push_back(src_lens[b]);
        batch.tgt_len.push_back(tgt_lens[b]);
    }
    return batch;
}

ModelConfig tiny_model_config(int dim, int target_len) {
    ModelConfig config;
    config.embed_dim = dim;
    config.hidden_dim = dim;
    config.dropout = 0.0;
    config.deconv_enabled = true;
    config.target_len = target_len;
    config.deconv_layers = {{4, 2, 1, dim}};
    return config;
}

}  // namespace deconvdec
