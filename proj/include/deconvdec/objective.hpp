#pragma once

#include <vector>

#include "deconvdec/layers.hpp"
#include "deconvdec/tensor.hpp"

namespace deconvdec {

/// Per-batch loss components; total is the sum of the three terms with unit
/// weights, each term averaged over its own support.
struct LossBreakdown {
    double nll = 0.0;
    double smooth_l1 = 0.0;
    double deconv_ce = 0.0;
    double total = 0.0;
    long token_count = 0;
    TensorPtr total_tensor;  // differentiable handle for backward
};

/// Teacher-forced decoder NLL: mean over unmasked steps of
/// -log softmax(logits[t])[refs[t]]. PAD steps are masked out.
TensorPtr nll_loss(const TensorPtr& logits_seq, const std::vector<int>& refs,
                   const std::vector<char>& mask);

/// Elementwise smooth-L1 regression of the context matrix toward the
/// reference embedding matrix, averaged over all elements.
TensorPtr smooth_l1(const TensorPtr& E, const TensorPtr& E_ref);

/// Mean over all target_len positions of -log pred[t][ref_t]; refs longer
/// than the prediction are truncated, shorter ones must be padded first
/// (see padded_reference_ids).
TensorPtr deconv_ce(const TensorPtr& pred, const std::vector<int>& refs);

/// Reference ids aligned to the context matrix: y_0..y_{len-1}, then EOS,
/// then PAD, truncated to target_len.
std::vector<int> padded_reference_ids(const std::vector<int>& refs, int target_len);

/// The reference embedding matrix for the smooth-L1 term. Rows follow
/// padded_reference_ids; the result is a constant (no gradient flows into
/// the embedding table through it).
TensorPtr target_matrix_reference(const EmbeddingTable& table,
                                  const std::vector<int>& refs, int target_len);

}  // namespace deconvdec
