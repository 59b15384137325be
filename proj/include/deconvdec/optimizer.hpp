#pragma once

#include <vector>

#include "deconvdec/tensor.hpp"

namespace deconvdec {

/// Scales every gradient by max_norm / g when the global L2 norm g exceeds
/// max_norm; returns the pre-clip norm. Direction is preserved.
double clip_gradients(const std::vector<TensorPtr>& params, double max_norm);

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-9;
};

/// Adam with bias correction. step() applies one update from the current
/// gradients and then zeroes them.
class Adam {
  public:
    Adam(std::vector<TensorPtr> params, AdamConfig config);

    void step();
    long step_count() const { return step_count_; }
    const AdamConfig& config() const { return config_; }

    // Checkpoint access.
    std::vector<std::vector<double>>& first_moments() { return m_; }
    std::vector<std::vector<double>>& second_moments() { return v_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }
    void set_step_count(long t) { step_count_ = t; }

  private:
    std::vector<TensorPtr> params_;
    AdamConfig config_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    long step_count_ = 0;
};

}  // namespace deconvdec
