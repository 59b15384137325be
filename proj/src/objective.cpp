#include "deconvdec/objective.hpp"

namespace deconvdec {

namespace {
constexpr int kPadId = 0;
constexpr int kEosId = 3;
}

TensorPtr nll_loss(const TensorPtr& logits_seq, const std::vector<int>& refs,
                   const std::vector<char>& mask) {
    return masked_nll(logits_seq, refs, mask);
}

TensorPtr smooth_l1(const TensorPtr& E, const TensorPtr& E_ref) {
    return smooth_l1_mean(E, E_ref);
}

TensorPtr deconv_ce(const TensorPtr& pred, const std::vector<int>& refs) {
    if (pred->ndim() != 2) {
        throw DimensionError("deconv_ce expects [T x vocab] predictions, got " +
                             pred->shape_str());
    }
    int target_len = pred->dim(0);
    std::vector<int> aligned(refs.begin(),
                             refs.size() > static_cast<std::size_t>(target_len)
                                 ? refs.begin() + target_len
                                 : refs.end());
    if (static_cast<int>(aligned.size()) != target_len) {
        throw DimensionError("deconv_ce: got " + std::to_string(refs.size()) +
                             " refs for " + std::to_string(target_len) +
                             " positions; pad with padded_reference_ids first");
    }
    return nll_from_probs(pred, aligned);
}

std::vector<int> padded_reference_ids(const std::vector<int>& refs, int target_len) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(target_len));
    for (int t = 0; t < target_len; ++t) {
        if (t < static_cast<int>(refs.size())) {
            out.push_back(refs[static_cast<std::size_t>(t)]);
        } else if (t == static_cast<int>(refs.size())) {
            out.push_back(kEosId);
        } else {
            out.push_back(kPadId);
        }
    }
    return out;
}

TensorPtr target_matrix_reference(const EmbeddingTable& table,
                                  const std::vector<int>& refs, int target_len) {
    std::vector<int> ids = padded_reference_ids(refs, target_len);
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(target_len) * table.dim);
    for (int id : ids) {
        if (id < 0 || id >= table.vocab_size) {
            throw IndexError("target_matrix_reference: id " + std::to_string(id) +
                             " out of range");
        }
        const double* row = &table.matrix->data[static_cast<std::size_t>(id) * table.dim];
        data.insert(data.end(), row, row + table.dim);
    }
    // Constant copy: the regression target never feeds gradient back into
    // the embedding parameters.
    return Tensor::create({target_len, table.dim}, std::move(data));
}

}  // namespace deconvdec
