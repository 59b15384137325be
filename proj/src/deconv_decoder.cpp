#include "deconvdec/deconv_decoder.hpp"

#include <cmath>

namespace deconvdec {

namespace {
constexpr double kCosineEps = 1e-8;
}

int deconv_output_len(const std::vector<DeconvLayerSpec>& specs, int in_len) {
    int len = in_len;
    for (std::size_t l = 0; l < specs.size(); ++l) {
        const DeconvLayerSpec& s = specs[l];
        len = conv1d_transposed_out_len(len, s.kernel, s.stride, s.padding);
        if (len < 1) {
            throw ConfigError("deconv layer " + std::to_string(l) +
                              " produces length " + std::to_string(len));
        }
    }
    return len;
}

void validate_deconv_stack(const std::vector<DeconvLayerSpec>& specs,
                           int target_len, int in_len, int in_channels,
                           int embed_dim) {
    if (specs.empty()) {
        throw ConfigError("deconv stack needs at least one layer");
    }
    if (target_len < 1) {
        throw ConfigError("deconv target length must be >= 1, got " +
                          std::to_string(target_len));
    }
    if (in_channels < 1) {
        throw ConfigError("deconv input channels must be >= 1");
    }
    for (std::size_t l = 0; l < specs.size(); ++l) {
        const DeconvLayerSpec& s = specs[l];
        if (s.kernel < 1 || s.stride < 1 || s.padding < 0 || s.filters < 1) {
            throw ConfigError("deconv layer " + std::to_string(l) +
                              ": kernel/stride/filters must be >= 1 and padding >= 0");
        }
    }
    if (specs.back().filters != embed_dim) {
        throw ConfigError("last deconv layer must emit " + std::to_string(embed_dim) +
                          " filters (the embedding width), got " +
                          std::to_string(specs.back().filters));
    }
    int pre_crop = deconv_output_len(specs, in_len);
    if (pre_crop < target_len) {
        throw ConfigError("deconv stack expands length " + std::to_string(in_len) +
                          " to only " + std::to_string(pre_crop) +
                          ", below target length " + std::to_string(target_len));
    }
}

DeconvParams DeconvParams::init(std::vector<DeconvLayerSpec> specs, int target_len,
                                int in_channels, int embed_dim,
                                std::mt19937_64& rng) {
    validate_deconv_stack(specs, target_len, 2, in_channels, embed_dim);
    DeconvParams params;
    params.specs = std::move(specs);
    params.target_len = target_len;
    params.in_channels = in_channels;
    int channels = in_channels;
    for (const DeconvLayerSpec& s : params.specs) {
        TensorPtr flat = glorot(s.kernel * channels, s.filters, rng);
        params.kernels.push_back(Tensor::param({s.kernel, channels, s.filters},
                                               std::move(flat->data)));
        params.biases.push_back(
            Tensor::param({s.filters}, std::vector<double>(s.filters, 0.0)));
        channels = s.filters;
    }
    return params;
}

TensorPtr build_input_matrix(const EncoderStates& states) {
    return stack_rows({states.fwd_final, states.bwd_final});
}

TargetContextMatrix deconv_forward(const TensorPtr& input,
                                   const DeconvParams& params) {
    if (input->ndim() != 2 || input->dim(1) != params.in_channels) {
        throw DimensionError("deconv_forward: input " + input->shape_str() +
                             " vs expected [m x " +
                             std::to_string(params.in_channels) + "]");
    }
    TensorPtr x = input;
    for (std::size_t l = 0; l < params.specs.size(); ++l) {
        const DeconvLayerSpec& s = params.specs[l];
        x = conv1d_transposed(x, params.kernels[l], s.stride, s.padding);
        x = add_rowvec(x, params.biases[l]);
        if (l + 1 < params.specs.size()) {
            x = relu(x);
        }
    }
    int pre_crop = x->dim(0);
    int start = (pre_crop - params.target_len) / 2;
    TargetContextMatrix context;
    context.E = narrow0(x, start, params.target_len);
    context.target_len = params.target_len;
    context.dim = x->dim(1);
    return context;
}

TensorPtr deconv_predict(const TargetContextMatrix& context,
                         const EmbeddingTable& table) {
    if (context.dim != table.dim) {
        throw DimensionError("deconv_predict: context width " +
                             std::to_string(context.dim) +
                             " vs embedding width " + std::to_string(table.dim));
    }
    TensorPtr rows = l2_normalize_rows(context.E, kCosineEps);
    TensorPtr vocab = l2_normalize_rows(table.matrix, kCosineEps);
    TensorPtr cosines = matmul(rows, transpose(vocab));  // [T x V]
    return softmax(cosines);
}

}  // namespace deconvdec
