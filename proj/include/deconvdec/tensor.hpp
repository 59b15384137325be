#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "deconvdec/error.hpp"

namespace deconvdec {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense row-major tensor of doubles with an optional same-shape gradient
/// accumulator. Tensors are written once by the op that creates them and
/// treated as immutable afterwards; only grad buffers and optimizer updates
/// mutate them.
class Tensor : public std::enable_shared_from_this<Tensor> {
  public:
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // sized numel() iff requires_grad, else empty
    bool requires_grad = false;

    static TensorPtr zeros(std::vector<int> shape);
    static TensorPtr full(std::vector<int> shape, double value);
    static TensorPtr create(std::vector<int> shape, std::vector<double> data);
    static TensorPtr scalar(double value);
    /// Leaf parameter: requires_grad set, grad buffer allocated.
    static TensorPtr param(std::vector<int> shape, std::vector<double> data);

    int numel() const { return static_cast<int>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int axis) const { return shape[static_cast<std::size_t>(axis)]; }
    bool is_scalar() const { return numel() == 1; }
    double value() const;

    void set_requires_grad(bool enabled);
    void zero_grad();
    bool all_finite() const;
    std::string shape_str() const;

  private:
    Tensor() = default;
};

std::string shape_to_string(const std::vector<int>& shape);
int shape_numel(const std::vector<int>& shape);

/// Ordered record of executed differentiable operations. While a Tape is
/// alive it is the active tape for the current thread and every op whose
/// inputs require grad registers a backward closure on it. backward()
/// replays the closures once each, in reverse execution order.
class Tape {
  public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    void record(TensorPtr output, std::function<void()> pull);
    std::size_t size() const { return records_.size(); }

    /// Seeds d(loss)/d(loss) = 1 and pulls gradients back through the tape.
    /// Intermediate grads are reset first; leaf (parameter) grads accumulate,
    /// so repeated calls without zero_grad add another copy of the gradient.
    void backward(const TensorPtr& loss);

  private:
    struct Record {
        TensorPtr output;
        std::function<void()> pull;
    };
    std::vector<Record> records_;
    Tape* previous_ = nullptr;
};

/// Convenience: backward on the active tape. ContractError if none is active.
void backward(const TensorPtr& loss);

// ---- differentiable operations -------------------------------------------
// Broadcasting is restricted to equal shapes and scalar-with-tensor.

TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr tanh(const TensorPtr& x);
TensorPtr sigmoid(const TensorPtr& x);
TensorPtr relu(const TensorPtr& x);
TensorPtr scale(const TensorPtr& x, double c);

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose(const TensorPtr& x);
TensorPtr reshape(const TensorPtr& x, std::vector<int> shape);

/// Softmax over the last axis, computed with max-subtraction.
TensorPtr softmax(const TensorPtr& x);
/// 1-D softmax restricted to unmasked entries; masked outputs are exactly 0.
TensorPtr masked_softmax(const TensorPtr& x, const std::vector<char>& mask);

/// Transposed 1-D convolution. input [T_in x C_in], kernel [k x C_in x C_out],
/// output [T_out x C_out] with T_out = (T_in - 1) * stride + k - 2 * padding.
/// The backward pass w.r.t. the input is the corresponding strided convolution.
TensorPtr conv1d_transposed(const TensorPtr& input, const TensorPtr& kernel,
                            int stride, int padding);
int conv1d_transposed_out_len(int in_len, int kernel, int stride, int padding);

TensorPtr sum_all(const TensorPtr& x);
TensorPtr concat(const std::vector<TensorPtr>& parts);       // 1-D
TensorPtr stack_rows(const std::vector<TensorPtr>& rows);    // n x [w] -> [n x w]
TensorPtr narrow0(const TensorPtr& x, int start, int len);   // first-axis slice
TensorPtr add_rowvec(const TensorPtr& x, const TensorPtr& v);
/// Row lookup with sparse backward: only looked-up rows accumulate grad.
TensorPtr take_rows(const TensorPtr& table, const std::vector<int>& ids);
/// Rows scaled to unit L2 norm; rows with norm < eps are divided by eps.
TensorPtr l2_normalize_rows(const TensorPtr& x, double eps);
/// Inverted dropout with an explicit mask draw; training-mode only.
TensorPtr dropout_mask(const TensorPtr& x, double rate, std::mt19937_64& rng);

/// Mean over unmasked rows of -log softmax(logits[row])[ref[row]].
TensorPtr masked_nll(const TensorPtr& logits, const std::vector<int>& refs,
                     const std::vector<char>& mask);
/// Mean over all rows of -log(max(probs[row][ref[row]], eps)), eps = 1e-12.
TensorPtr nll_from_probs(const TensorPtr& probs, const std::vector<int>& refs);
/// Mean over elements of the smooth-L1 penalty on pred - target:
/// 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise.
TensorPtr smooth_l1_mean(const TensorPtr& pred, const TensorPtr& target);

namespace testing {
/// Test hook: corrupts the tanh backward rule so negative gradcheck
/// controls have a known-bad op to detect.
extern bool corrupt_tanh_backward;
}  // namespace testing

}  // namespace deconvdec
