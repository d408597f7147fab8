#pragma once

// Differentiable kernels: 3x3 convolution and its adjoint, batch
// normalization, activations, dropout and the logcosh loss. Forward and
// backward passes are explicit functions; layers in colorizer.hpp cache
// whatever the backward pass needs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "thermocolor/nn/tensor.hpp"
#include "thermocolor/parallel.hpp"

namespace thermocolor::nn {

enum class Mode { Train, Infer };

// ---------------------------------------------------------------------------
// GEMM helpers. Work is split over output rows so results never depend on
// accumulation order across threads.

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

namespace detail {

// c (+)= a * b
inline void gemm(const ConstMatMap& a, const ConstMatMap& b, MatMap c, bool accumulate) {
    parallel::for_chunks(0, static_cast<std::size_t>(c.rows()), [&](std::size_t lo, std::size_t hi, std::size_t) {
        const auto r0 = static_cast<Eigen::Index>(lo), n = static_cast<Eigen::Index>(hi - lo);
        if (accumulate)
            c.middleRows(r0, n).noalias() += a.middleRows(r0, n) * b;
        else
            c.middleRows(r0, n).noalias() = a.middleRows(r0, n) * b;
    });
}

// c (+)= a^T * b
inline void gemm_tn(const ConstMatMap& a, const ConstMatMap& b, MatMap c, bool accumulate) {
    parallel::for_chunks(0, static_cast<std::size_t>(c.rows()), [&](std::size_t lo, std::size_t hi, std::size_t) {
        const auto r0 = static_cast<Eigen::Index>(lo), n = static_cast<Eigen::Index>(hi - lo);
        if (accumulate)
            c.middleRows(r0, n).noalias() += a.middleCols(r0, n).transpose() * b;
        else
            c.middleRows(r0, n).noalias() = a.middleCols(r0, n).transpose() * b;
    });
}

// c (+)= a * b^T
inline void gemm_nt(const ConstMatMap& a, const ConstMatMap& b, MatMap c, bool accumulate) {
    parallel::for_chunks(0, static_cast<std::size_t>(c.rows()), [&](std::size_t lo, std::size_t hi, std::size_t) {
        const auto r0 = static_cast<Eigen::Index>(lo), n = static_cast<Eigen::Index>(hi - lo);
        if (accumulate)
            c.middleRows(r0, n).noalias() += a.middleRows(r0, n) * b.transpose();
        else
            c.middleRows(r0, n).noalias() = a.middleRows(r0, n) * b.transpose();
    });
}

inline ConstMatMap cmap(const double* p, std::size_t rows, std::size_t cols) {
    return {p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
inline MatMap map(double* p, std::size_t rows, std::size_t cols) {
    return {p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Convolution geometry

inline constexpr std::size_t kernel_extent = 3;

/// Spatial geometry of a 3x3 "same"-padded convolution.
struct ConvGeometry {
    std::size_t in_h = 0, in_w = 0;
    std::size_t out_h = 0, out_w = 0;
    std::size_t stride = 1;
    std::size_t pad_top = 0, pad_left = 0;

    /// Output = ceil(in / stride); the odd padding pixel goes to the bottom/right.
    static ConvGeometry same(std::size_t in_h, std::size_t in_w, std::size_t stride) {
        ConvGeometry g;
        g.in_h = in_h;
        g.in_w = in_w;
        g.stride = stride;
        g.out_h = (in_h + stride - 1) / stride;
        g.out_w = (in_w + stride - 1) / stride;
        const auto pad_total = [&](std::size_t in, std::size_t out) -> std::size_t {
            const std::size_t need = (out - 1) * stride + kernel_extent;
            return need > in ? need - in : 0;
        };
        g.pad_top = pad_total(in_h, g.out_h) / 2;
        g.pad_left = pad_total(in_w, g.out_w) / 2;
        return g;
    }
};

namespace detail {

/// Patch matrix of one sample: (out_h*out_w) rows, 9*channels columns in
/// (ky, kx, c) order, zero outside the image.
inline void im2col(const double* img, std::size_t channels, const ConvGeometry& g, double* cols) {
    const std::size_t row_len = kernel_extent * kernel_extent * channels;
    for (std::size_t oy = 0; oy < g.out_h; ++oy)
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            double* dst = cols + (oy * g.out_w + ox) * row_len;
            for (std::size_t ky = 0; ky < kernel_extent; ++ky) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
                for (std::size_t kx = 0; kx < kernel_extent; ++kx) {
                    const auto ix =
                        static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
                    double* d = dst + (ky * kernel_extent + kx) * channels;
                    if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h) ||
                        ix >= static_cast<std::ptrdiff_t>(g.in_w)) {
                        std::fill_n(d, channels, 0.0);
                    } else {
                        const double* s = img + (static_cast<std::size_t>(iy) * g.in_w + static_cast<std::size_t>(ix)) * channels;
                        std::copy_n(s, channels, d);
                    }
                }
            }
        }
}

/// Adjoint of im2col: scatters patch rows back onto the image (accumulating).
inline void col2im(const double* cols, std::size_t channels, const ConvGeometry& g, double* img) {
    const std::size_t row_len = kernel_extent * kernel_extent * channels;
    for (std::size_t oy = 0; oy < g.out_h; ++oy)
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const double* src = cols + (oy * g.out_w + ox) * row_len;
            for (std::size_t ky = 0; ky < kernel_extent; ++ky) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
                for (std::size_t kx = 0; kx < kernel_extent; ++kx) {
                    const auto ix =
                        static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
                    const double* s = src + (ky * kernel_extent + kx) * channels;
                    double* d = img + (static_cast<std::size_t>(iy) * g.in_w + static_cast<std::size_t>(ix)) * channels;
                    for (std::size_t c = 0; c < channels; ++c) d[c] += s[c];
                }
            }
        }
}

} // namespace detail

/// Weights of a 3x3 convolution. `kernel` is (3, 3, in_ch, out_ch) for a
/// plain convolution. A transposed convolution stores the kernel of the
/// convolution it is the adjoint of, so its shape is (3, 3, out_ch, in_ch)
/// with respect to the transposed layer, and `bias` has out_ch entries.
struct ConvParams {
    Tensor kernel;
    std::vector<double> bias;
    std::size_t stride = 1;

    std::size_t rows() const { return kernel.dim(2); }  // kernel's third axis
    std::size_t cols() const { return kernel.dim(3); }
};

struct ConvGrads {
    Tensor grad_x;
    Tensor grad_kernel;
    std::vector<double> grad_bias;
};

/// Glorot-uniform kernel, zero bias.
template <typename Rng>
ConvParams make_conv_params(std::size_t in_ch, std::size_t out_ch, std::size_t stride, Rng& rng) {
    ConvParams p;
    p.kernel = Tensor({kernel_extent, kernel_extent, in_ch, out_ch});
    p.bias.assign(out_ch, 0.0);
    p.stride = stride;
    const double fan_in = 9.0 * static_cast<double>(in_ch), fan_out = 9.0 * static_cast<double>(out_ch);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& w : p.kernel.data()) w = dist(rng);
    return p;
}

inline void check_conv_params(const ConvParams& p, const char* what) {
    if (p.kernel.rank() != 4 || p.kernel.dim(0) != kernel_extent || p.kernel.dim(1) != kernel_extent)
        throw ShapeError(std::string(what) + ": kernel must be 3x3xCinxCout");
    if (p.stride != 1 && p.stride != 2) throw ShapeError(std::string(what) + ": unsupported stride");
}

/// Same-padded 3x3 convolution; output spatial size ceil(in / stride).
inline Tensor conv2d_forward(const Tensor& x, const ConvParams& p) {
    require_rank4(x, "conv2d");
    check_conv_params(p, "conv2d");
    const std::size_t cin = p.rows(), cout = p.cols();
    if (p.bias.size() != cout) throw ShapeError("conv2d: bias length mismatch");
    if (x.channels() != cin)
        throw ShapeError("conv2d: input has " + std::to_string(x.channels()) + " channels, kernel expects " +
                         std::to_string(cin));
    const auto g = ConvGeometry::same(x.height(), x.width(), p.stride);
    Tensor y({x.batch(), g.out_h, g.out_w, cout});
    const std::size_t positions = g.out_h * g.out_w, patch = 9 * cin;
    std::vector<double> cols(positions * patch);
    const auto w = detail::cmap(p.kernel.data().data(), patch, cout);
    for (std::size_t n = 0; n < x.batch(); ++n) {
        detail::im2col(x.data().data() + n * x.height() * x.width() * cin, cin, g, cols.data());
        double* out = y.data().data() + n * positions * cout;
        detail::gemm(detail::cmap(cols.data(), positions, patch), w, detail::map(out, positions, cout), false);
        for (std::size_t i = 0; i < positions; ++i)
            for (std::size_t c = 0; c < cout; ++c) out[i * cout + c] += p.bias[c];
    }
    return y;
}

inline ConvGrads conv2d_backward(const Tensor& x, const ConvParams& p, const Tensor& grad_out) {
    require_rank4(x, "conv2d_backward");
    check_conv_params(p, "conv2d_backward");
    const std::size_t cin = p.rows(), cout = p.cols();
    const auto g = ConvGeometry::same(x.height(), x.width(), p.stride);
    if (x.channels() != cin || grad_out.rank() != 4 || grad_out.batch() != x.batch() || grad_out.height() != g.out_h ||
        grad_out.width() != g.out_w || grad_out.channels() != cout)
        throw ShapeError("conv2d_backward: shapes inconsistent with the forward pass");

    ConvGrads grads{Tensor(x.shape()), Tensor(p.kernel.shape()), std::vector<double>(cout, 0.0)};
    const std::size_t positions = g.out_h * g.out_w, patch = 9 * cin;
    std::vector<double> cols(positions * patch);
    const auto w = detail::cmap(p.kernel.data().data(), patch, cout);
    auto gw = detail::map(grads.grad_kernel.data().data(), patch, cout);
    for (std::size_t n = 0; n < x.batch(); ++n) {
        const double* dout = grad_out.data().data() + n * positions * cout;
        for (std::size_t i = 0; i < positions; ++i)
            for (std::size_t c = 0; c < cout; ++c) grads.grad_bias[c] += dout[i * cout + c];
        detail::im2col(x.data().data() + n * x.height() * x.width() * cin, cin, g, cols.data());
        const auto dy = detail::cmap(dout, positions, cout);
        detail::gemm_tn(detail::cmap(cols.data(), positions, patch), dy, gw, true);
        detail::gemm_nt(dy, w, detail::map(cols.data(), positions, patch), false);
        detail::col2im(cols.data(), cin, g, grads.grad_x.data().data() + n * x.height() * x.width() * cin);
    }
    return grads;
}

/// Adjoint of the stride-s same-padded convolution from (in*s) to in, so the
/// output is exactly s times the input in each spatial axis.
inline Tensor conv2d_transpose_forward(const Tensor& x, const ConvParams& p) {
    require_rank4(x, "conv2d_transpose");
    check_conv_params(p, "conv2d_transpose");
    const std::size_t cout = p.rows(), cin = p.cols();
    if (x.channels() != cin) throw ShapeError("conv2d_transpose: channel mismatch");
    if (p.bias.size() != cout) throw ShapeError("conv2d_transpose: bias length mismatch");
    const auto g = ConvGeometry::same(x.height() * p.stride, x.width() * p.stride, p.stride);
    Tensor y({x.batch(), g.in_h, g.in_w, cout});
    const std::size_t positions = g.out_h * g.out_w, patch = 9 * cout;
    std::vector<double> cols(positions * patch);
    const auto w = detail::cmap(p.kernel.data().data(), patch, cin);
    for (std::size_t n = 0; n < x.batch(); ++n) {
        const auto xs = detail::cmap(x.data().data() + n * positions * cin, positions, cin);
        detail::gemm_nt(xs, w, detail::map(cols.data(), positions, patch), false);
        double* out = y.data().data() + n * g.in_h * g.in_w * cout;
        detail::col2im(cols.data(), cout, g, out);
        for (std::size_t i = 0; i < g.in_h * g.in_w; ++i)
            for (std::size_t c = 0; c < cout; ++c) out[i * cout + c] += p.bias[c];
    }
    return y;
}

inline ConvGrads conv2d_transpose_backward(const Tensor& x, const ConvParams& p, const Tensor& grad_out) {
    require_rank4(x, "conv2d_transpose_backward");
    check_conv_params(p, "conv2d_transpose_backward");
    const std::size_t cout = p.rows(), cin = p.cols();
    const auto g = ConvGeometry::same(x.height() * p.stride, x.width() * p.stride, p.stride);
    if (x.channels() != cin || grad_out.rank() != 4 || grad_out.batch() != x.batch() || grad_out.height() != g.in_h ||
        grad_out.width() != g.in_w || grad_out.channels() != cout)
        throw ShapeError("conv2d_transpose_backward: shapes inconsistent with the forward pass");

    ConvGrads grads{Tensor(x.shape()), Tensor(p.kernel.shape()), std::vector<double>(cout, 0.0)};
    const std::size_t positions = g.out_h * g.out_w, patch = 9 * cout;
    std::vector<double> cols(positions * patch);
    const auto w = detail::cmap(p.kernel.data().data(), patch, cin);
    auto gw = detail::map(grads.grad_kernel.data().data(), patch, cin);
    for (std::size_t n = 0; n < x.batch(); ++n) {
        const double* dout = grad_out.data().data() + n * g.in_h * g.in_w * cout;
        for (std::size_t i = 0; i < g.in_h * g.in_w; ++i)
            for (std::size_t c = 0; c < cout; ++c) grads.grad_bias[c] += dout[i * cout + c];
        detail::im2col(dout, cout, g, cols.data());
        const auto cm = detail::cmap(cols.data(), positions, patch);
        const auto xs = detail::cmap(x.data().data() + n * positions * cin, positions, cin);
        detail::gemm(cm, w, detail::map(grads.grad_x.data().data() + n * positions * cin, positions, cin), false);
        detail::gemm_tn(cm, xs, gw, true);
    }
    return grads;
}

/// Keeps the top-left (height, width) corner of every sample.
inline Tensor crop_top_left(const Tensor& x, std::size_t height, std::size_t width) {
    require_rank4(x, "crop");
    if (height > x.height() || width > x.width()) throw ShapeError("crop: target larger than input");
    Tensor y({x.batch(), height, width, x.channels()});
    const std::size_t c = x.channels();
    for (std::size_t n = 0; n < x.batch(); ++n)
        for (std::size_t r = 0; r < height; ++r)
            std::copy_n(&x.at(n, r, 0, 0), width * c, &y.at(n, r, 0, 0));
    return y;
}

/// Adjoint of crop_top_left: zero-pads the gradient back to the input size.
inline Tensor crop_top_left_backward(const Tensor& grad_out, const Shape& input_shape) {
    Tensor g(input_shape);
    const std::size_t c = g.channels();
    for (std::size_t n = 0; n < g.batch(); ++n)
        for (std::size_t r = 0; r < grad_out.height(); ++r)
            std::copy_n(&grad_out.at(n, r, 0, 0), grad_out.width() * c, &g.at(n, r, 0, 0));
    return g;
}

// ---------------------------------------------------------------------------
// Batch normalization

struct BatchNormParams {
    std::vector<double> gamma, beta;
    std::vector<double> running_mean, running_var;
    double epsilon = 1e-3;
    double momentum = 0.99;

    explicit BatchNormParams(std::size_t channels = 0)
        : gamma(channels, 1.0), beta(channels, 0.0), running_mean(channels, 0.0), running_var(channels, 1.0) {}

    std::size_t channels() const noexcept { return gamma.size(); }
};

/// What the backward pass needs from a forward call.
struct BatchNormCache {
    Tensor x_hat;
    std::vector<double> inv_std;
    Mode mode = Mode::Train;
};

struct BatchNormGrads {
    Tensor grad_x;
    std::vector<double> grad_gamma, grad_beta;
};

/// Train mode normalizes with biased batch statistics and folds them into the
/// running statistics: running = momentum * running + (1 - momentum) * batch.
inline Tensor batchnorm_forward(const Tensor& x, BatchNormParams& p, Mode mode, BatchNormCache* cache = nullptr) {
    require_rank4(x, "batchnorm");
    const std::size_t c = x.channels();
    if (p.channels() != c) throw ShapeError("batchnorm: channel mismatch");
    const std::size_t count = x.size() / c;
    std::vector<double> mean(c, 0.0), var(c, 0.0);
    if (mode == Mode::Train) {
        if (count < 2) throw ShapeError("batchnorm: need at least two values per channel in train mode");
        for (std::size_t i = 0; i < x.size(); ++i) mean[i % c] += x[i];
        for (auto& m : mean) m /= static_cast<double>(count);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - mean[i % c];
            var[i % c] += d * d;
        }
        for (auto& v : var) v /= static_cast<double>(count);
        for (std::size_t k = 0; k < c; ++k) {
            p.running_mean[k] = p.momentum * p.running_mean[k] + (1.0 - p.momentum) * mean[k];
            p.running_var[k] = p.momentum * p.running_var[k] + (1.0 - p.momentum) * var[k];
        }
    } else {
        mean = p.running_mean;
        var = p.running_var;
    }
    std::vector<double> inv_std(c);
    for (std::size_t k = 0; k < c; ++k) inv_std[k] = 1.0 / std::sqrt(var[k] + p.epsilon);

    Tensor y(x.shape());
    Tensor x_hat(cache ? x.shape() : Shape{});
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t k = i % c;
        const double xh = (x[i] - mean[k]) * inv_std[k];
        if (cache) x_hat[i] = xh;
        y[i] = p.gamma[k] * xh + p.beta[k];
    }
    if (cache) *cache = {std::move(x_hat), std::move(inv_std), mode};
    return y;
}

inline BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const BatchNormParams& p,
                                         const Tensor& grad_out) {
    require_same_shape(cache.x_hat, grad_out, "batchnorm_backward");
    const std::size_t c = p.channels();
    const std::size_t count = grad_out.size() / c;
    BatchNormGrads g{Tensor(grad_out.shape()), std::vector<double>(c, 0.0), std::vector<double>(c, 0.0)};
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        g.grad_gamma[i % c] += grad_out[i] * cache.x_hat[i];
        g.grad_beta[i % c] += grad_out[i];
    }
    if (cache.mode == Mode::Infer) {
        for (std::size_t i = 0; i < grad_out.size(); ++i)
            g.grad_x[i] = grad_out[i] * p.gamma[i % c] * cache.inv_std[i % c];
        return g;
    }
    // dx = gamma * inv_std / M * (M dy - sum dy - x_hat * sum(dy x_hat))
    const auto m = static_cast<double>(count);
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        const std::size_t k = i % c;
        g.grad_x[i] = p.gamma[k] * cache.inv_std[k] / m *
                      (m * grad_out[i] - g.grad_beta[k] - cache.x_hat[i] * g.grad_gamma[k]);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Activations

enum class Activation { ReLU, ELU, Sigmoid };

inline Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}
inline Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
    Tensor g(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0 ? grad_out[i] : 0.0;
    return g;
}

/// x for x > 0, alpha (e^x - 1) otherwise.
inline Tensor elu(const Tensor& x, double alpha = 1.0) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : alpha * std::expm1(x[i]);
    return y;
}
inline Tensor elu_backward(const Tensor& x, const Tensor& grad_out, double alpha = 1.0) {
    Tensor g(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0 ? grad_out[i] : grad_out[i] * alpha * std::exp(x[i]);
    return g;
}

inline double sigmoid(double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}
inline Tensor sigmoid(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
    return y;
}
/// Takes the forward output, not the input.
inline Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out) {
    Tensor g(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) g[i] = grad_out[i] * y[i] * (1.0 - y[i]);
    return g;
}

// ---------------------------------------------------------------------------
// Dropout

struct DropoutResult {
    Tensor output;
    std::vector<double> mask;  // per-element multiplier: 0 or 1/(1-rate); empty means identity
};

/// Inverted dropout. Each element is dropped when a uniform draw from `rng`
/// falls below `rate`.
inline DropoutResult dropout(const Tensor& x, double rate, Mode mode, std::mt19937_64& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout rate must lie in [0, 1)");
    if (mode == Mode::Infer || rate == 0.0) return {x, {}};
    DropoutResult r{Tensor(x.shape()), std::vector<double>(x.size())};
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        r.mask[i] = u < rate ? 0.0 : keep_scale;
        r.output[i] = x[i] * r.mask[i];
    }
    return r;
}

inline Tensor dropout_backward(const std::vector<double>& mask, const Tensor& grad_out) {
    if (mask.empty()) return grad_out;
    if (mask.size() != grad_out.size()) throw ShapeError("dropout_backward: mask size mismatch");
    Tensor g(grad_out.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_out[i] * mask[i];
    return g;
}

// ---------------------------------------------------------------------------
// Loss

struct LossResult {
    double loss = 0.0;
    Tensor grad;
};

/// log(cosh(x)) = |x| + log1p(e^{-2|x|}) - log 2, stable for large |x|.
inline double log_cosh(double x) {
    const double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

/// Mean logcosh over all elements; gradient tanh(pred - target) / count.
inline LossResult logcosh_loss(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "logcosh_loss");
    if (pred.empty()) throw ShapeError("logcosh_loss: empty tensors");
    LossResult r{0.0, Tensor(pred.shape())};
    const auto n = static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        r.loss += log_cosh(d);
        r.grad[i] = std::tanh(d) / n;
    }
    r.loss /= n;
    return r;
}

} // namespace thermocolor::nn
