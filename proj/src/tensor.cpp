#include "deconvdec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace deconvdec {

namespace testing {
bool corrupt_tanh_backward = false;
}  // namespace testing

namespace {

thread_local Tape* g_active_tape = nullptr;

void check_shape(const std::vector<int>& shape) {
    for (int extent : shape) {
        if (extent <= 0) {
            throw DimensionError("tensor extents must be positive, got " +
                                 shape_to_string(shape));
        }
    }
}

// Records a backward closure when grad tracking applies to this result.
void maybe_record(const TensorPtr& out, bool any_input_grad,
                  std::function<void()> pull) {
    Tape* tape = Tape::active();
    if (tape == nullptr || !any_input_grad) {
        return;
    }
    out->set_requires_grad(true);
    tape->record(out, std::move(pull));
}

bool same_shape(const TensorPtr& a, const TensorPtr& b) {
    return a->shape == b->shape;
}

}  // namespace

std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            os << 'x';
        }
        os << shape[i];
    }
    os << ']';
    return os.str();
}

int shape_numel(const std::vector<int>& shape) {
    long long n = 1;
    for (int extent : shape) {
        n *= extent;
    }
    return static_cast<int>(n);
}

TensorPtr Tensor::zeros(std::vector<int> shape) {
    check_shape(shape);
    std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)), 0.0);
    return create(std::move(shape), std::move(data));
}

TensorPtr Tensor::full(std::vector<int> shape, double value) {
    check_shape(shape);
    std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)), value);
    return create(std::move(shape), std::move(data));
}

TensorPtr Tensor::create(std::vector<int> shape, std::vector<double> data) {
    check_shape(shape);
    if (static_cast<int>(data.size()) != shape_numel(shape)) {
        throw DimensionError("data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_to_string(shape));
    }
    auto t = TensorPtr(new Tensor());
    t->shape = std::move(shape);
    t->data = std::move(data);
    return t;
}

TensorPtr Tensor::scalar(double value) {
    return create({1}, {value});
}

TensorPtr Tensor::param(std::vector<int> shape, std::vector<double> data) {
    TensorPtr t = create(std::move(shape), std::move(data));
    t->set_requires_grad(true);
    return t;
}

double Tensor::value() const {
    if (!is_scalar()) {
        throw ContractError("value() called on non-scalar tensor " + shape_str());
    }
    return data[0];
}

void Tensor::set_requires_grad(bool enabled) {
    requires_grad = enabled;
    if (enabled) {
        grad.assign(data.size(), 0.0);
    } else {
        grad.clear();
    }
}

void Tensor::zero_grad() {
    std::fill(grad.begin(), grad.end(), 0.0);
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

std::string Tensor::shape_str() const {
    return shape_to_string(shape);
}

// ---- Tape ------------------------------------------------------------------

Tape::Tape() : previous_(g_active_tape) {
    g_active_tape = this;
}

Tape::~Tape() {
    g_active_tape = previous_;
}

Tape* Tape::active() {
    return g_active_tape;
}

void Tape::record(TensorPtr output, std::function<void()> pull) {
    records_.push_back({std::move(output), std::move(pull)});
}

void Tape::backward(const TensorPtr& loss) {
    if (!loss || !loss->is_scalar()) {
        throw ContractError("backward requires a scalar loss");
    }
    bool on_tape = false;
    for (const Record& r : records_) {
        if (r.output == loss) {
            on_tape = true;
            break;
        }
    }
    if (!on_tape) {
        throw ContractError("backward: loss tensor was not produced on this tape");
    }
    // Intermediates are reset so each backward pass pulls exactly one copy of
    // the gradient into the leaves.
    for (Record& r : records_) {
        r.output->zero_grad();
    }
    loss->grad[0] = 1.0;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        it->pull();
    }
}

void backward(const TensorPtr& loss) {
    Tape* tape = Tape::active();
    if (tape == nullptr) {
        throw ContractError("backward: no active tape");
    }
    tape->backward(loss);
}

// ---- elementwise -----------------------------------------------------------

namespace {

enum class Broadcast { Equal, ScalarLeft, ScalarRight };

Broadcast broadcast_kind(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (same_shape(a, b)) {
        return Broadcast::Equal;
    }
    if (a->is_scalar()) {
        return Broadcast::ScalarLeft;
    }
    if (b->is_scalar()) {
        return Broadcast::ScalarRight;
    }
    throw DimensionError(std::string(op) + ": incompatible shapes " +
                         a->shape_str() + " and " + b->shape_str());
}

template <typename Fwd, typename PullA, typename PullB>
TensorPtr binary_op(const TensorPtr& a, const TensorPtr& b, const char* name,
                    Fwd fwd, PullA pull_a, PullB pull_b) {
    Broadcast kind = broadcast_kind(a, b, name);
    const std::vector<int>& shape =
        kind == Broadcast::ScalarLeft ? b->shape : a->shape;
    int n = shape_numel(shape);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double av = kind == Broadcast::ScalarLeft ? a->data[0] : a->data[i];
        double bv = kind == Broadcast::ScalarRight ? b->data[0] : b->data[i];
        out[static_cast<std::size_t>(i)] = fwd(av, bv);
    }
    TensorPtr result = Tensor::create(shape, std::move(out));
    maybe_record(result, a->requires_grad || b->requires_grad,
                 [a, b, result, kind, pull_a, pull_b] {
                     int n = result->numel();
                     for (int i = 0; i < n; ++i) {
                         double g = result->grad[i];
                         double av = kind == Broadcast::ScalarLeft ? a->data[0] : a->data[i];
                         double bv = kind == Broadcast::ScalarRight ? b->data[0] : b->data[i];
                         if (a->requires_grad) {
                             int ai = kind == Broadcast::ScalarLeft ? 0 : i;
                             a->grad[ai] += pull_a(g, av, bv);
                         }
                         if (b->requires_grad) {
                             int bi = kind == Broadcast::ScalarRight ? 0 : i;
                             b->grad[bi] += pull_b(g, av, bv);
                         }
                     }
                 });
    return result;
}

template <typename Fwd, typename Pull>
TensorPtr unary_op(const TensorPtr& x, Fwd fwd, Pull pull) {
    int n = x->numel();
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = fwd(x->data[i]);
    }
    TensorPtr result = Tensor::create(x->shape, std::move(out));
    maybe_record(result, x->requires_grad, [x, result, pull] {
        int n = result->numel();
        for (int i = 0; i < n; ++i) {
            x->grad[i] += pull(result->grad[i], x->data[i], result->data[i]);
        }
    });
    return result;
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    return binary_op(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double g, double, double) { return g; },
        [](double g, double, double) { return g; });
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    return binary_op(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double g, double, double) { return g; },
        [](double g, double, double) { return -g; });
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    return binary_op(
        a, b, "mul", [](double x, double y) { return x * y; },
        [](double g, double, double y) { return g * y; },
        [](double g, double x, double) { return g * x; });
}

TensorPtr tanh(const TensorPtr& x) {
    return unary_op(
        x, [](double v) { return std::tanh(v); },
        [](double g, double, double y) {
            double d = g * (1.0 - y * y);
            if (testing::corrupt_tanh_backward) {
                d *= 1.01;
            }
            return d;
        });
}

TensorPtr sigmoid(const TensorPtr& x) {
    return unary_op(
        x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double g, double, double y) { return g * y * (1.0 - y); });
}

TensorPtr relu(const TensorPtr& x) {
    // relu'(0) fixed to 0 so gradient checks are deterministic.
    return unary_op(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double g, double v, double) { return v > 0.0 ? g : 0.0; });
}

TensorPtr scale(const TensorPtr& x, double c) {
    return unary_op(
        x, [c](double v) { return c * v; },
        [c](double g, double, double) { return c * g; });
}

// ---- linear algebra --------------------------------------------------------

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    if (a->ndim() != 2 || b->ndim() != 2) {
        throw DimensionError("matmul expects 2-D operands, got " + a->shape_str() +
                             " and " + b->shape_str());
    }
    int m = a->dim(0), k = a->dim(1), k2 = b->dim(0), n = b->dim(1);
    if (k != k2) {
        throw DimensionError("matmul: inner dimensions disagree, " +
                             a->shape_str() + " vs " + b->shape_str());
    }
    std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            double av = a->data[i * k + p];
            const double* brow = &b->data[static_cast<std::size_t>(p) * n];
            double* orow = &out[static_cast<std::size_t>(i) * n];
            for (int j = 0; j < n; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
    TensorPtr result = Tensor::create({m, n}, std::move(out));
    maybe_record(result, a->requires_grad || b->requires_grad, [a, b, result] {
        int m = a->dim(0), k = a->dim(1), n = b->dim(1);
        const std::vector<double>& g = result->grad;
        if (a->requires_grad) {
            // dA = g . B^T
            for (int i = 0; i < m; ++i) {
                for (int p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j) {
                        acc += g[i * n + j] * b->data[p * n + j];
                    }
                    a->grad[i * k + p] += acc;
                }
            }
        }
        if (b->requires_grad) {
            // dB = A^T . g
            for (int p = 0; p < k; ++p) {
                for (int i = 0; i < m; ++i) {
                    double av = a->data[i * k + p];
                    const double* grow = &g[static_cast<std::size_t>(i) * n];
                    double* brow = &b->grad[static_cast<std::size_t>(p) * n];
                    for (int j = 0; j < n; ++j) {
                        brow[j] += av * grow[j];
                    }
                }
            }
        }
    });
    return result;
}

TensorPtr transpose(const TensorPtr& x) {
    if (x->ndim() != 2) {
        throw DimensionError("transpose expects a 2-D tensor, got " + x->shape_str());
    }
    int m = x->dim(0), n = x->dim(1);
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            out[static_cast<std::size_t>(j) * m + i] = x->data[i * n + j];
        }
    }
    TensorPtr result = Tensor::create({n, m}, std::move(out));
    maybe_record(result, x->requires_grad, [x, result] {
        int m = x->dim(0), n = x->dim(1);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                x->grad[i * n + j] += result->grad[static_cast<std::size_t>(j) * m + i];
            }
        }
    });
    return result;
}

TensorPtr reshape(const TensorPtr& x, std::vector<int> shape) {
    check_shape(shape);
    if (shape_numel(shape) != x->numel()) {
        throw DimensionError("reshape: cannot view " + x->shape_str() + " as " +
                             shape_to_string(shape));
    }
    TensorPtr result = Tensor::create(std::move(shape), x->data);
    maybe_record(result, x->requires_grad, [x, result] {
        for (int i = 0; i < x->numel(); ++i) {
            x->grad[i] += result->grad[i];
        }
    });
    return result;
}

// ---- softmax ---------------------------------------------------------------

namespace {

// Stable softmax of one contiguous row; mask may be null.
void softmax_row(const double* in, double* out, int n, const char* mask) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        if ((mask == nullptr || mask[i]) && in[i] > mx) {
            mx = in[i];
        }
    }
    double denom = 0.0;
    for (int i = 0; i < n; ++i) {
        if (mask == nullptr || mask[i]) {
            out[i] = std::exp(in[i] - mx);
            denom += out[i];
        } else {
            out[i] = 0.0;
        }
    }
    for (int i = 0; i < n; ++i) {
        out[i] /= denom;
    }
}

// d(softmax)/dx pulled against upstream g: dx_i = y_i * (g_i - sum_j g_j y_j).
void softmax_row_pull(const double* y, const double* g, double* dx, int n,
                      const char* mask) {
    double dot = 0.0;
    for (int i = 0; i < n; ++i) {
        dot += g[i] * y[i];
    }
    for (int i = 0; i < n; ++i) {
        if (mask == nullptr || mask[i]) {
            dx[i] += y[i] * (g[i] - dot);
        }
    }
}

}  // namespace

TensorPtr softmax(const TensorPtr& x) {
    if (x->ndim() < 1 || x->numel() == 0) {
        throw DomainError("softmax on empty input");
    }
    int n = x->dim(x->ndim() - 1);
    int rows = x->numel() / n;
    std::vector<double> out(static_cast<std::size_t>(x->numel()));
    for (int r = 0; r < rows; ++r) {
        softmax_row(&x->data[static_cast<std::size_t>(r) * n],
                    &out[static_cast<std::size_t>(r) * n], n, nullptr);
    }
    TensorPtr result = Tensor::create(x->shape, std::move(out));
    maybe_record(result, x->requires_grad, [x, result, n, rows] {
        for (int r = 0; r < rows; ++r) {
            softmax_row_pull(&result->data[static_cast<std::size_t>(r) * n],
                             &result->grad[static_cast<std::size_t>(r) * n],
                             &x->grad[static_cast<std::size_t>(r) * n], n, nullptr);
        }
    });
    return result;
}

TensorPtr masked_softmax(const TensorPtr& x, const std::vector<char>& mask) {
    if (x->ndim() != 1) {
        throw DimensionError("masked_softmax expects a vector, got " + x->shape_str());
    }
    int n = x->dim(0);
    if (static_cast<int>(mask.size()) != n) {
        throw DimensionError("masked_softmax: mask length " +
                             std::to_string(mask.size()) + " vs input " +
                             x->shape_str());
    }
    if (std::none_of(mask.begin(), mask.end(), [](char m) { return m != 0; })) {
        throw DomainError("masked_softmax: all positions masked");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    softmax_row(x->data.data(), out.data(), n, mask.data());
    TensorPtr result = Tensor::create(x->shape, std::move(out));
    maybe_record(result, x->requires_grad, [x, result, mask, n] {
        softmax_row_pull(result->data.data(), result->grad.data(),
                         x->grad.data(), n, mask.data());
    });
    return result;
}

// ---- transposed convolution --------------------------------------------

int conv1d_transposed_out_len(int in_len, int kernel, int stride, int padding) {
    return (in_len - 1) * stride + kernel - 2 * padding;
}

TensorPtr conv1d_transposed(const TensorPtr& input, const TensorPtr& kernel,
                            int stride, int padding) {
    if (input->ndim() != 2 || kernel->ndim() != 3) {
        throw DimensionError("conv1d_transposed expects input [T x C_in] and kernel "
                             "[k x C_in x C_out], got " +
                             input->shape_str() + " and " + kernel->shape_str());
    }
    if (stride < 1 || padding < 0 || kernel->dim(0) < 1) {
        throw ConfigError("conv1d_transposed: stride must be >= 1, padding >= 0, kernel >= 1");
    }
    int t_in = input->dim(0), c_in = input->dim(1);
    int k = kernel->dim(0), c_out = kernel->dim(2);
    if (kernel->dim(1) != c_in) {
        throw DimensionError("conv1d_transposed: kernel input channels " +
                             kernel->shape_str() + " do not match input " +
                             input->shape_str());
    }
    int t_out = conv1d_transposed_out_len(t_in, k, stride, padding);
    if (t_out < 1) {
        throw ConfigError("conv1d_transposed: output length " + std::to_string(t_out) +
                          " < 1 for input length " + std::to_string(t_in));
    }
    // Overlap-add: every input position scatters input[t] . K[j] into
    // out[t * stride + j - padding].
    std::vector<double> out(static_cast<std::size_t>(t_out) * c_out, 0.0);
    for (int t = 0; t < t_in; ++t) {
        for (int j = 0; j < k; ++j) {
            int o = t * stride + j - padding;
            if (o < 0 || o >= t_out) {
                continue;
            }
            for (int ci = 0; ci < c_in; ++ci) {
                double iv = input->data[t * c_in + ci];
                const double* krow = &kernel->data[(static_cast<std::size_t>(j) * c_in + ci) * c_out];
                double* orow = &out[static_cast<std::size_t>(o) * c_out];
                for (int co = 0; co < c_out; ++co) {
                    orow[co] += iv * krow[co];
                }
            }
        }
    }
    TensorPtr result = Tensor::create({t_out, c_out}, std::move(out));
    maybe_record(result, input->requires_grad || kernel->requires_grad,
                 [input, kernel, result, stride, padding] {
                     int t_in = input->dim(0), c_in = input->dim(1);
                     int k = kernel->dim(0), c_out = kernel->dim(2);
                     int t_out = result->dim(0);
                     const std::vector<double>& g = result->grad;
                     for (int t = 0; t < t_in; ++t) {
                         for (int j = 0; j < k; ++j) {
                             int o = t * stride + j - padding;
                             if (o < 0 || o >= t_out) {
                                 continue;
                             }
                             const double* grow = &g[static_cast<std::size_t>(o) * c_out];
                             for (int ci = 0; ci < c_in; ++ci) {
                                 std::size_t kbase =
                                     (static_cast<std::size_t>(j) * c_in + ci) * c_out;
                                 if (input->requires_grad) {
                                     // Adjoint direction: the strided convolution.
                                     double acc = 0.0;
                                     for (int co = 0; co < c_out; ++co) {
                                         acc += grow[co] * kernel->data[kbase + co];
                                     }
                                     input->grad[t * c_in + ci] += acc;
                                 }
                                 if (kernel->requires_grad) {
                                     double iv = input->data[t * c_in + ci];
                                     for (int co = 0; co < c_out; ++co) {
                                         kernel->grad[kbase + co] += iv * grow[co];
                                     }
                                 }
                             }
                         }
                     }
                 });
    return result;
}

// ---- structural ops --------------------------------------------------------

TensorPtr sum_all(const TensorPtr& x) {
    double total = std::accumulate(x->data.begin(), x->data.end(), 0.0);
    TensorPtr result = Tensor::scalar(total);
    maybe_record(result, x->requires_grad, [x, result] {
        double g = result->grad[0];
        for (int i = 0; i < x->numel(); ++i) {
            x->grad[i] += g;
        }
    });
    return result;
}

TensorPtr concat(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) {
        throw DomainError("concat of zero tensors");
    }
    std::vector<double> out;
    bool any_grad = false;
    for (const TensorPtr& p : parts) {
        if (p->ndim() != 1) {
            throw DimensionError("concat expects vectors, got " + p->shape_str());
        }
        out.insert(out.end(), p->data.begin(), p->data.end());
        any_grad = any_grad || p->requires_grad;
    }
    TensorPtr result = Tensor::create({static_cast<int>(out.size())}, std::move(out));
    maybe_record(result, any_grad, [parts, result] {
        int offset = 0;
        for (const TensorPtr& p : parts) {
            if (p->requires_grad) {
                for (int i = 0; i < p->numel(); ++i) {
                    p->grad[i] += result->grad[offset + i];
                }
            }
            offset += p->numel();
        }
    });
    return result;
}

TensorPtr stack_rows(const std::vector<TensorPtr>& rows) {
    if (rows.empty()) {
        throw DomainError("stack_rows of zero rows");
    }
    int w = rows.front()->numel();
    bool any_grad = false;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(w) * rows.size());
    for (const TensorPtr& r : rows) {
        if (r->ndim() != 1 || r->numel() != w) {
            throw DimensionError("stack_rows: row shape " + r->shape_str() +
                                 " does not match width " + std::to_string(w));
        }
        out.insert(out.end(), r->data.begin(), r->data.end());
        any_grad = any_grad || r->requires_grad;
    }
    TensorPtr result =
        Tensor::create({static_cast<int>(rows.size()), w}, std::move(out));
    maybe_record(result, any_grad, [rows, result, w] {
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!rows[r]->requires_grad) {
                continue;
            }
            const double* g = &result->grad[r * static_cast<std::size_t>(w)];
            for (int i = 0; i < w; ++i) {
                rows[r]->grad[i] += g[i];
            }
        }
    });
    return result;
}

TensorPtr narrow0(const TensorPtr& x, int start, int len) {
    if (x->ndim() < 1) {
        throw DimensionError("narrow0 on a scalar");
    }
    int extent = x->dim(0);
    if (start < 0 || len < 1 || start + len > extent) {
        throw IndexError("narrow0: range [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of bounds for " +
                         x->shape_str());
    }
    int inner = x->numel() / extent;
    std::vector<int> shape = x->shape;
    shape[0] = len;
    std::vector<double> out(x->data.begin() + static_cast<std::size_t>(start) * inner,
                            x->data.begin() + static_cast<std::size_t>(start + len) * inner);
    TensorPtr result = Tensor::create(std::move(shape), std::move(out));
    maybe_record(result, x->requires_grad, [x, result, start, inner] {
        int n = result->numel();
        for (int i = 0; i < n; ++i) {
            x->grad[static_cast<std::size_t>(start) * inner + i] += result->grad[i];
        }
    });
    return result;
}

TensorPtr add_rowvec(const TensorPtr& x, const TensorPtr& v) {
    if (x->ndim() != 2 || v->ndim() != 1 || v->dim(0) != x->dim(1)) {
        throw DimensionError("add_rowvec: " + x->shape_str() + " + " + v->shape_str());
    }
    int m = x->dim(0), n = x->dim(1);
    std::vector<double> out(x->data);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            out[static_cast<std::size_t>(i) * n + j] += v->data[j];
        }
    }
    TensorPtr result = Tensor::create(x->shape, std::move(out));
    maybe_record(result, x->requires_grad || v->requires_grad, [x, v, result] {
        int m = x->dim(0), n = x->dim(1);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                double g = result->grad[static_cast<std::size_t>(i) * n + j];
                if (x->requires_grad) {
                    x->grad[static_cast<std::size_t>(i) * n + j] += g;
                }
                if (v->requires_grad) {
                    v->grad[j] += g;
                }
            }
        }
    });
    return result;
}

TensorPtr take_rows(const TensorPtr& table, const std::vector<int>& ids) {
    if (table->ndim() != 2) {
        throw DimensionError("take_rows expects a matrix, got " + table->shape_str());
    }
    int rows = table->dim(0), width = table->dim(1);
    std::vector<double> out;
    out.reserve(ids.size() * static_cast<std::size_t>(width));
    for (int id : ids) {
        if (id < 0 || id >= rows) {
            throw IndexError("row id " + std::to_string(id) + " out of range [0, " +
                             std::to_string(rows) + ")");
        }
        const double* row = &table->data[static_cast<std::size_t>(id) * width];
        out.insert(out.end(), row, row + width);
    }
    TensorPtr result =
        Tensor::create({static_cast<int>(ids.size()), width}, std::move(out));
    maybe_record(result, table->requires_grad, [table, result, ids] {
        int width = table->dim(1);
        for (std::size_t r = 0; r < ids.size(); ++r) {
            const double* g = &result->grad[r * static_cast<std::size_t>(width)];
            double* dst = &table->grad[static_cast<std::size_t>(ids[r]) * width];
            for (int i = 0; i < width; ++i) {
                dst[i] += g[i];
            }
        }
    });
    return result;
}

TensorPtr l2_normalize_rows(const TensorPtr& x, double eps) {
    if (x->ndim() != 2) {
        throw DimensionError("l2_normalize_rows expects a matrix, got " + x->shape_str());
    }
    int m = x->dim(0), n = x->dim(1);
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    std::vector<double> norms(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        double sq = 0.0;
        for (int j = 0; j < n; ++j) {
            double v = x->data[static_cast<std::size_t>(i) * n + j];
            sq += v * v;
        }
        double norm = std::max(std::sqrt(sq), eps);
        norms[static_cast<std::size_t>(i)] = norm;
        for (int j = 0; j < n; ++j) {
            out[static_cast<std::size_t>(i) * n + j] =
                x->data[static_cast<std::size_t>(i) * n + j] / norm;
        }
    }
    TensorPtr result = Tensor::create(x->shape, std::move(out));
    maybe_record(result, x->requires_grad, [x, result, norms, eps] {
        int m = x->dim(0), n = x->dim(1);
        for (int i = 0; i < m; ++i) {
            const double* y = &result->data[static_cast<std::size_t>(i) * n];
            const double* g = &result->grad[static_cast<std::size_t>(i) * n];
            double* dx = &x->grad[static_cast<std::size_t>(i) * n];
            double norm = norms[static_cast<std::size_t>(i)];
            double sq = 0.0;
            for (int j = 0; j < n; ++j) {
                double v = x->data[static_cast<std::size_t>(i) * n + j];
                sq += v * v;
            }
            if (std::sqrt(sq) >= eps) {
                double dot = 0.0;
                for (int j = 0; j < n; ++j) {
                    dot += g[j] * y[j];
                }
                for (int j = 0; j < n; ++j) {
                    dx[j] += (g[j] - dot * y[j]) / norm;
                }
            } else {
                for (int j = 0; j < n; ++j) {
                    dx[j] += g[j] / eps;
                }
            }
        }
    });
    return result;
}

TensorPtr dropout_mask(const TensorPtr& x, double rate, std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    }
    if (rate == 0.0) {
        return x;
    }
    int n = x->numel();
    double keep_scale = 1.0 / (1.0 - rate);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    auto mask = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n));
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double m = uniform(rng) < rate ? 0.0 : keep_scale;
        (*mask)[static_cast<std::size_t>(i)] = m;
        out[static_cast<std::size_t>(i)] = x->data[i] * m;
    }
    TensorPtr result = Tensor::create(x->shape, std::move(out));
    maybe_record(result, x->requires_grad, [x, result, mask] {
        for (int i = 0; i < x->numel(); ++i) {
            x->grad[i] += result->grad[i] * (*mask)[static_cast<std::size_t>(i)];
        }
    });
    return result;
}

// ---- losses ---------------------------------------------------------------

TensorPtr masked_nll(const TensorPtr& logits, const std::vector<int>& refs,
                     const std::vector<char>& mask) {
    if (logits->ndim() != 2) {
        throw DimensionError("masked_nll expects [steps x vocab] logits, got " +
                             logits->shape_str());
    }
    int m = logits->dim(0), vocab = logits->dim(1);
    if (static_cast<int>(refs.size()) != m || static_cast<int>(mask.size()) != m) {
        throw DimensionError("masked_nll: " + std::to_string(refs.size()) +
                             " refs / " + std::to_string(mask.size()) +
                             " mask entries for " + std::to_string(m) + " steps");
    }
    int count = 0;
    for (char c : mask) {
        count += c != 0;
    }
    if (count == 0) {
        throw DomainError("masked_nll: mask excludes every step");
    }
    // log-softmax per row with max subtraction
    auto probs = std::make_shared<std::vector<double>>(
        static_cast<std::size_t>(m) * vocab, 0.0);
    double total = 0.0;
    for (int t = 0; t < m; ++t) {
        if (!mask[static_cast<std::size_t>(t)]) {
            continue;
        }
        int ref = refs[static_cast<std::size_t>(t)];
        if (ref < 0 || ref >= vocab) {
            throw IndexError("masked_nll: reference id " + std::to_string(ref) +
                             " out of vocab range");
        }
        const double* row = &logits->data[static_cast<std::size_t>(t) * vocab];
        double* prow = &(*probs)[static_cast<std::size_t>(t) * vocab];
        softmax_row(row, prow, vocab, nullptr);
        double mx = *std::max_element(row, row + vocab);
        double denom = 0.0;
        for (int j = 0; j < vocab; ++j) {
            denom += std::exp(row[j] - mx);
        }
        total += -(row[ref] - mx - std::log(denom));
    }
    TensorPtr result = Tensor::scalar(total / count);
    maybe_record(result, logits->requires_grad,
                 [logits, result, refs, mask, probs, count] {
                     int m = logits->dim(0), vocab = logits->dim(1);
                     double g = result->grad[0] / count;
                     for (int t = 0; t < m; ++t) {
                         if (!mask[static_cast<std::size_t>(t)]) {
                             continue;
                         }
                         double* dst = &logits->grad[static_cast<std::size_t>(t) * vocab];
                         const double* prow = &(*probs)[static_cast<std::size_t>(t) * vocab];
                         for (int j = 0; j < vocab; ++j) {
                             dst[j] += g * prow[j];
                         }
                         dst[refs[static_cast<std::size_t>(t)]] -= g;
                     }
                 });
    return result;
}

TensorPtr nll_from_probs(const TensorPtr& probs, const std::vector<int>& refs) {
    if (probs->ndim() != 2) {
        throw DimensionError("nll_from_probs expects [steps x vocab], got " +
                             probs->shape_str());
    }
    int m = probs->dim(0), vocab = probs->dim(1);
    if (static_cast<int>(refs.size()) != m) {
        throw DimensionError("nll_from_probs: " + std::to_string(refs.size()) +
                             " refs for " + std::to_string(m) + " rows");
    }
    constexpr double kEps = 1e-12;
    double total = 0.0;
    for (int t = 0; t < m; ++t) {
        int ref = refs[static_cast<std::size_t>(t)];
        if (ref < 0 || ref >= vocab) {
            throw IndexError("nll_from_probs: reference id " + std::to_string(ref) +
                             " out of vocab range");
        }
        total += -std::log(std::max(probs->data[static_cast<std::size_t>(t) * vocab + ref], kEps));
    }
    TensorPtr result = Tensor::scalar(total / m);
    maybe_record(result, probs->requires_grad, [probs, result, refs] {
        int m = probs->dim(0), vocab = probs->dim(1);
        double g = result->grad[0] / m;
        for (int t = 0; t < m; ++t) {
            std::size_t idx = static_cast<std::size_t>(t) * vocab +
                              refs[static_cast<std::size_t>(t)];
            double p = probs->data[idx];
            if (p > kEps) {
                probs->grad[idx] += -g / p;
            }
        }
    });
    return result;
}

TensorPtr smooth_l1_mean(const TensorPtr& pred, const TensorPtr& target) {
    if (!same_shape(pred, target)) {
        throw DimensionError("smooth_l1: shape mismatch " + pred->shape_str() +
                             " vs " + target->shape_str());
    }
    int n = pred->numel();
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = pred->data[i] - target->data[i];
        double a = std::fabs(d);
        total += a < 1.0 ? 0.5 * d * d : a - 0.5;
    }
    TensorPtr result = Tensor::scalar(total / n);
    maybe_record(result, pred->requires_grad || target->requires_grad,
                 [pred, target, result] {
                     int n = pred->numel();
                     double g = result->grad[0] / n;
                     for (int i = 0; i < n; ++i) {
                         double d = pred->data[i] - target->data[i];
                         double slope = std::fabs(d) < 1.0 ? d : (d > 0.0 ? 1.0 : -1.0);
                         if (pred->requires_grad) {
                             pred->grad[i] += g * slope;
                         }
                         if (target->requires_grad) {
                             target->grad[i] -= g * slope;
                         }
                     }
                 });
    return result;
}

}  // namespace deconvdec
