#include "deconvdec/layers.hpp"

#include <cmath>

namespace deconvdec {

TensorPtr glorot(int rows, int cols, std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    std::vector<double> data(static_cast<std::size_t>(rows) * cols);
    for (double& v : data) {
        v = uniform(rng);
    }
    return Tensor::param({rows, cols}, std::move(data));
}

EmbeddingTable EmbeddingTable::init(int vocab_size, int dim, std::mt19937_64& rng) {
    EmbeddingTable table;
    table.vocab_size = vocab_size;
    table.dim = dim;
    table.matrix = glorot(vocab_size, dim, rng);
    return table;
}

TensorPtr embed(const EmbeddingTable& table, const std::vector<int>& ids) {
    for (int id : ids) {
        if (id < 0 || id >= table.vocab_size) {
            throw IndexError("embed: token id " + std::to_string(id) +
                             " out of range [0, " + std::to_string(table.vocab_size) + ")");
        }
    }
    return take_rows(table.matrix, ids);
}

LstmCellParams LstmCellParams::init(int input_dim, int hidden_dim,
                                    std::mt19937_64& rng) {
    LstmCellParams params;
    params.input_dim = input_dim;
    params.hidden_dim = hidden_dim;
    params.W = glorot(4 * hidden_dim, input_dim + hidden_dim, rng);
    std::vector<double> bias(static_cast<std::size_t>(4 * hidden_dim), 0.0);
    // Forget-gate bias starts at 1.0.
    for (int i = hidden_dim; i < 2 * hidden_dim; ++i) {
        bias[static_cast<std::size_t>(i)] = 1.0;
    }
    params.b = Tensor::param({4 * hidden_dim}, std::move(bias));
    return params;
}

std::pair<TensorPtr, TensorPtr> lstm_step(const LstmCellParams& params,
                                          const TensorPtr& x,
                                          const TensorPtr& h_prev,
                                          const TensorPtr& c_prev) {
    int hid = params.hidden_dim;
    if (x->ndim() != 1 || x->dim(0) != params.input_dim) {
        throw DimensionError("lstm_step: input " + x->shape_str() + " vs expected [" +
                             std::to_string(params.input_dim) + "]");
    }
    if (h_prev->ndim() != 1 || h_prev->dim(0) != hid || c_prev->ndim() != 1 ||
        c_prev->dim(0) != hid) {
        throw DimensionError("lstm_step: state shapes " + h_prev->shape_str() + ", " +
                             c_prev->shape_str() + " vs hidden size " +
                             std::to_string(hid));
    }
    TensorPtr z = concat({x, h_prev});
    TensorPtr gates = linear(params.W, params.b, z);
    TensorPtr i = sigmoid(narrow0(gates, 0, hid));
    TensorPtr f = sigmoid(narrow0(gates, hid, hid));
    TensorPtr o = sigmoid(narrow0(gates, 2 * hid, hid));
    TensorPtr g = tanh(narrow0(gates, 3 * hid, hid));
    TensorPtr c = add(mul(f, c_prev), mul(i, g));
    TensorPtr h = mul(o, tanh(c));
    return {h, c};
}

TensorPtr linear(const TensorPtr& W, const TensorPtr& b, const TensorPtr& x) {
    if (x->ndim() != 1 || W->ndim() != 2 || W->dim(1) != x->dim(0)) {
        throw DimensionError("linear: W " + W->shape_str() + " vs x " + x->shape_str());
    }
    TensorPtr out = reshape(matmul(W, reshape(x, {x->dim(0), 1})), {W->dim(0)});
    if (b != nullptr) {
        if (b->ndim() != 1 || b->dim(0) != W->dim(0)) {
            throw DimensionError("linear: bias " + b->shape_str() + " vs W " +
                                 W->shape_str());
        }
        out = add(out, b);
    }
    return out;
}

TensorPtr dropout(const TensorPtr& x, double rate, bool training,
                  std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) {
        return x;
    }
    return dropout_mask(x, rate, rng);
}

}  // namespace deconvdec
