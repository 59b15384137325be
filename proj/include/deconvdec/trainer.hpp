#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "deconvdec/config.hpp"
#include "deconvdec/data.hpp"
#include "deconvdec/metrics.hpp"
#include "deconvdec/model.hpp"

namespace deconvdec {

struct TrainResult {
    double best_bleu = -1.0;
    int best_epoch = -1;
    long steps = 0;
    std::string best_checkpoint;
    std::string final_checkpoint;
    std::string metrics_log;
    std::vector<std::pair<int, double>> history;  // (epoch, validation BLEU)
};

/// Full training loop: seeded shuffled minibatches, teacher-forced forward,
/// backward, clip, Adam; greedy-decode validation BLEU per epoch with the
/// best checkpoint retained; early stopping on patience or target BLEU.
/// Metrics log: one tab-separated line per step
/// (step, nll, smooth_l1, deconv_ce, total, grad_norm).
TrainResult train(const RunConfig& config, std::ostream& info);

/// Greedy-decodes every pair and scores corpus BLEU against the references.
double validation_bleu(const Model& model, const Vocabulary& src_vocab,
                       const Vocabulary& tgt_vocab,
                       const std::vector<SentencePair>& pairs);

}  // namespace deconvdec
