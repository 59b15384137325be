#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "deconvdec/config.hpp"
#include "deconvdec/data.hpp"
#include "deconvdec/model.hpp"
#include "deconvdec/optimizer.hpp"

namespace deconvdec {

/// Single-file checkpoint: versioned text header (config snapshot, both
/// vocabularies, validation history, tensor names and shapes) followed by
/// raw little-endian float64 payloads. Round trips bit-exactly.
struct CheckpointData {
    RunConfig config;
    Vocabulary src_vocab;
    Vocabulary tgt_vocab;
    std::unique_ptr<Model> model;
    long step = 0;
    int epoch = 0;
    std::vector<std::pair<int, double>> validation_history;
    bool has_optimizer = false;
    long optimizer_step_count = 0;
    std::vector<std::vector<double>> first_moments;
    std::vector<std::vector<double>> second_moments;
};

void save_checkpoint(const std::string& path, const Model& model,
                     const RunConfig& config, const Vocabulary& src_vocab,
                     const Vocabulary& tgt_vocab, const Adam* optimizer,
                     long step, int epoch,
                     const std::vector<std::pair<int, double>>& validation_history);

/// Throws CheckpointError on version/shape/payload mismatch.
CheckpointData load_checkpoint(const std::string& path);

}  // namespace deconvdec
