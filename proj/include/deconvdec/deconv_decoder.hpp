#pragma once

#include <random>
#include <vector>

#include "deconvdec/encoder.hpp"
#include "deconvdec/layers.hpp"

namespace deconvdec {

struct DeconvLayerSpec {
    int kernel = 0;
    int stride = 0;
    int padding = 0;
    int filters = 0;
};

/// Chains the transposed-convolution length formula through the layer stack.
/// ConfigError if any intermediate length drops below 1.
int deconv_output_len(const std::vector<DeconvLayerSpec>& specs, int in_len);

/// Static validation run at config-load time: per-layer sanity, final filter
/// count equal to the embedding width, and pre-crop length >= target_len.
void validate_deconv_stack(const std::vector<DeconvLayerSpec>& specs,
                           int target_len, int in_len, int in_channels,
                           int embed_dim);

struct DeconvParams {
    std::vector<DeconvLayerSpec> specs;
    int target_len = 0;
    int in_channels = 0;
    std::vector<TensorPtr> kernels;  // per layer, [k x C_in x C_out]
    std::vector<TensorPtr> biases;   // per layer, [C_out]

    static DeconvParams init(std::vector<DeconvLayerSpec> specs, int target_len,
                             int in_channels, int embed_dim, std::mt19937_64& rng);
};

/// The decoder's estimate of the target sentence's embedding matrix:
/// shape exactly [target_len x dim] for every input.
struct TargetContextMatrix {
    TensorPtr E;  // [target_len x dim]
    int target_len = 0;
    int dim = 0;
};

/// Stacks the two directional final states into the [2 x hidden] input of the
/// deconvolution stack.
TensorPtr build_input_matrix(const EncoderStates& states);

/// Transposed-conv layers with ReLU between layers, no activation after the
/// last, then a center crop (floor-biased on the left) down to target_len.
TargetContextMatrix deconv_forward(const TensorPtr& input, const DeconvParams& params);

/// Row t = softmax over the vocabulary of cosine(E_t, embedding(w)).
/// Parameter-free; zero-norm rows are guarded with eps = 1e-8.
TensorPtr deconv_predict(const TargetContextMatrix& context,
                         const EmbeddingTable& table);

}  // namespace deconvdec
