#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "thermocolor/errors.hpp"

namespace thermocolor::nn {

struct AdamaxHyper {
    double lr = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
};

/// Parameter block seen by the optimizer.
struct ParamRef {
    std::span<double> value;
    std::span<const double> grad;
};

/// Adam variant with an infinity-norm second moment:
///   m <- b1 m + (1 - b1) g
///   u <- max(b2 u, |g|)
///   theta <- theta - lr / (1 - b1^t) * m / u
/// A zero u only occurs while every gradient seen so far was zero, in which
/// case m is zero too and the step is skipped.
class AdamaxState {
public:
    AdamaxState() = default;
    explicit AdamaxState(AdamaxHyper hyper) : hyper_(hyper) {}

    const AdamaxHyper& hyper() const noexcept { return hyper_; }
    std::uint64_t step_count() const noexcept { return t_; }
    const std::vector<std::vector<double>>& first_moment() const noexcept { return m_; }
    const std::vector<std::vector<double>>& infinity_norm() const noexcept { return u_; }

    /// One update of every block; increments t before use.
    void step(std::span<const ParamRef> params) {
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.emplace_back(p.value.size(), 0.0);
                u_.emplace_back(p.value.size(), 0.0);
            }
        }
        if (m_.size() != params.size()) throw ShapeError("adamax: parameter block count changed");
        ++t_;
        const double step_size = hyper_.lr / (1.0 - std::pow(hyper_.beta1, static_cast<double>(t_)));
        for (std::size_t b = 0; b < params.size(); ++b) {
            const auto& p = params[b];
            auto& m = m_[b];
            auto& u = u_[b];
            if (p.value.size() != m.size() || p.grad.size() != m.size())
                throw ShapeError("adamax: parameter block size mismatch");
            for (std::size_t i = 0; i < m.size(); ++i) {
                const double g = p.grad[i];
                m[i] = hyper_.beta1 * m[i] + (1.0 - hyper_.beta1) * g;
                u[i] = std::max(hyper_.beta2 * u[i], std::abs(g));
                if (u[i] > 0.0) p.value[i] -= step_size * m[i] / u[i];
            }
        }
    }

private:
    AdamaxHyper hyper_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_, u_;
};

} // namespace thermocolor::nn
