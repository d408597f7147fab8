#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "thermocolor/errors.hpp"

namespace thermocolor::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string to_string(const Shape& s) {
    std::ostringstream out;
    out << '(';
    for (std::size_t i = 0; i < s.size(); ++i) out << (i ? "x" : "") << s[i];
    out << ')';
    return out.str();
}

/// Dense row-major array of doubles. Image tensors are NHWC.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

    Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_size(shape_))
            throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                             to_string(shape_));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& values() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // NHWC accessors.
    std::size_t batch() const { return dim(0); }
    std::size_t height() const { return dim(1); }
    std::size_t width() const { return dim(2); }
    std::size_t channels() const { return dim(3); }

    double& at(std::size_t n, std::size_t y, std::size_t x, std::size_t c) {
        return data_[((n * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }
    const double& at(std::size_t n, std::size_t y, std::size_t x, std::size_t c) const {
        return data_[((n * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    /// Throws NumericalError if any element is NaN or infinite.
    void require_finite(const std::string& where) const {
        for (double v : data_)
            if (!std::isfinite(v)) throw NumericalError("non-finite value in " + where);
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

inline void require_rank4(const Tensor& t, const char* what) {
    if (t.rank() != 4) throw ShapeError(std::string(what) + ": expected an NHWC tensor, got " + to_string(t.shape()));
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
}

inline double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Concatenates two NHWC tensors along the channel axis.
inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
    require_rank4(a, "concat");
    require_rank4(b, "concat");
    if (a.batch() != b.batch() || a.height() != b.height() || a.width() != b.width())
        throw ShapeError("concat: spatial mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    const std::size_t ca = a.channels(), cb = b.channels();
    Tensor out({a.batch(), a.height(), a.width(), ca + cb});
    const std::size_t pixels = a.batch() * a.height() * a.width();
    for (std::size_t p = 0; p < pixels; ++p) {
        std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(p * ca), ca,
                    out.data().begin() + static_cast<std::ptrdiff_t>(p * (ca + cb)));
        std::copy_n(b.data().begin() + static_cast<std::ptrdiff_t>(p * cb), cb,
                    out.data().begin() + static_cast<std::ptrdiff_t>(p * (ca + cb) + ca));
    }
    return out;
}

/// Inverse of concat_channels: the first `ca` channels and the rest.
inline std::pair<Tensor, Tensor> split_channels(const Tensor& t, std::size_t ca) {
    require_rank4(t, "split");
    if (ca > t.channels()) throw ShapeError("split: channel count out of range");
    const std::size_t cb = t.channels() - ca;
    Tensor a({t.batch(), t.height(), t.width(), ca});
    Tensor b({t.batch(), t.height(), t.width(), cb});
    const std::size_t pixels = t.batch() * t.height() * t.width();
    for (std::size_t p = 0; p < pixels; ++p) {
        std::copy_n(t.data().begin() + static_cast<std::ptrdiff_t>(p * (ca + cb)), ca,
                    a.data().begin() + static_cast<std::ptrdiff_t>(p * ca));
        std::copy_n(t.data().begin() + static_cast<std::ptrdiff_t>(p * (ca + cb) + ca), cb,
                    b.data().begin() + static_cast<std::ptrdiff_t>(p * cb));
    }
    return {std::move(a), std::move(b)};
}

} // namespace thermocolor::nn
