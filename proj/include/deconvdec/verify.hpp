#pragma once

#include <string>
#include <vector>

#include "deconvdec/gradcheck.hpp"
#include "deconvdec/model.hpp"

namespace deconvdec {

struct GroupGradCheck {
    std::string group;
    GradCheckReport report;
};

/// Runs backward on the batch loss once, then checks every parameter group's
/// gradient against central differences of the forward loss. Dropout is off;
/// the check is deterministic.
std::vector<GroupGradCheck> model_gradcheck(const Model& model,
                                            const ParallelBatch& batch, double h,
                                            double tol);

/// Small deterministic teacher-forcing batch for gradient checks.
ParallelBatch gradcheck_batch(int src_vocab_size, int tgt_vocab_size,
                              std::uint64_t seed);

/// The tiny configuration the verification entry point uses.
ModelConfig tiny_model_config(int dim, int target_len);

}  // namespace deconvdec
