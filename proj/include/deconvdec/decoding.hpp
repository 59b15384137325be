#pragma once

#include <memory>
#include <vector>

#include "deconvdec/error.hpp"

namespace deconvdec {

/// Step interface the search operates on: a node represents a token prefix,
/// log_probs gives the next-token distribution, append extends the prefix.
/// Implemented by the translation model and by table-driven test models.
class StepModel {
  public:
    struct Node {
        virtual ~Node() = default;
    };
    using NodePtr = std::shared_ptr<const Node>;

    virtual ~StepModel() = default;
    virtual int vocab_size() const = 0;
    virtual int eos_token() const = 0;
    /// Token ids the search must never emit (PAD/BOS for translation models).
    virtual const std::vector<int>& banned_tokens() const = 0;
    virtual NodePtr root() = 0;
    virtual const std::vector<double>& log_probs(const NodePtr& node) = 0;
    virtual NodePtr append(const NodePtr& node, int token) = 0;
};

struct DecodeResult {
    std::vector<int> tokens;            // emitted tokens, EOS excluded
    bool ended_with_eos = false;
    double cumulative_log_prob = 0.0;   // includes the EOS step when present
    int scored_length = 0;              // tokens + 1 when ended_with_eos
    double normalized_score = 0.0;      // cumulative / scored_length
    StepModel::NodePtr leaf;            // node after the last emitted token
};

/// Argmax rollout until EOS or max_len; ties go to the lowest token id.
DecodeResult greedy_decode(StepModel& model, int max_len);

/// Beam search keeping the top-width unfinished hypotheses by cumulative
/// log-probability; hypotheses reaching EOS (or the length cap) are pooled
/// and the pool winner maximizes cumulative log-probability / length.
/// Final ties break toward shorter length, then lexicographically smaller
/// token ids.
DecodeResult beam_decode(StepModel& model, int width, int max_len);

}  // namespace deconvdec
