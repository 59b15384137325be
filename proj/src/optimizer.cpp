#include "deconvdec/optimizer.hpp"

#include <cmath>

namespace deconvdec {

double clip_gradients(const std::vector<TensorPtr>& params, double max_norm) {
    double sq = 0.0;
    for (const TensorPtr& p : params) {
        for (double g : p->grad) {
            sq += g * g;
        }
    }
    double norm = std::sqrt(sq);
    if (norm > max_norm) {
        double factor = max_norm / norm;
        for (const TensorPtr& p : params) {
            for (double& g : p->grad) {
                g *= factor;
            }
        }
    }
    return norm;
}

Adam::Adam(std::vector<TensorPtr> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const TensorPtr& p : params_) {
        if (!p->requires_grad) {
            throw ContractError("Adam: parameter without gradient tracking");
        }
        m_.emplace_back(p->data.size(), 0.0);
        v_.emplace_back(p->data.size(), 0.0);
    }
}

void Adam::step() {
    ++step_count_;
    double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
    double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
        std::vector<double>& data = params_[p]->data;
        std::vector<double>& grad = params_[p]->grad;
        std::vector<double>& m = m_[p];
        std::vector<double>& v = v_[p];
        for (std::size_t i = 0; i < data.size(); ++i) {
            double g = grad[i];
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
            double m_hat = m[i] / bc1;
            double v_hat = v[i] / bc2;
            data[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
            grad[i] = 0.0;
        }
    }
}

}  // namespace deconvdec
