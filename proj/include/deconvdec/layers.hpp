#pragma once

#include <random>
#include <utility>
#include <vector>

#include "deconvdec/tensor.hpp"

namespace deconvdec {

/// Glorot-uniform initialized matrix parameter.
TensorPtr glorot(int rows, int cols, std::mt19937_64& rng);

struct EmbeddingTable {
    int vocab_size = 0;
    int dim = 0;
    TensorPtr matrix;  // [vocab_size x dim]

    static EmbeddingTable init(int vocab_size, int dim, std::mt19937_64& rng);
};

/// Row t is the embedding of ids[t]. Backward accumulates only into the
/// looked-up rows. Out-of-range ids raise IndexError.
TensorPtr embed(const EmbeddingTable& table, const std::vector<int>& ids);

/// Single LSTM cell. Gates are computed from the concatenation [x; h] with
/// one weight matrix; rows are ordered (input, forget, output, candidate).
struct LstmCellParams {
    int input_dim = 0;
    int hidden_dim = 0;
    TensorPtr W;  // [4*hidden x (input + hidden)]
    TensorPtr b;  // [4*hidden], forget slice initialized to 1.0

    static LstmCellParams init(int input_dim, int hidden_dim, std::mt19937_64& rng);
};

/// Standard LSTM step: returns (h, c).
std::pair<TensorPtr, TensorPtr> lstm_step(const LstmCellParams& params,
                                          const TensorPtr& x,
                                          const TensorPtr& h_prev,
                                          const TensorPtr& c_prev);

/// W x + b on a vector; pass b = nullptr for no bias.
TensorPtr linear(const TensorPtr& W, const TensorPtr& b, const TensorPtr& x);

/// Inverted dropout: training mode zeroes with probability rate and scales
/// survivors by 1/(1-rate); eval mode returns the input unchanged.
TensorPtr dropout(const TensorPtr& x, double rate, bool training,
                  std::mt19937_64& rng);

}  // namespace deconvdec
