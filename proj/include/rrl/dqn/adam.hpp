#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rrl/emdp.hpp"

namespace rrl::dqn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    AdamState() = default;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Adaptive-moment update with bias correction.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const AdamConfig& cfg = {}) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
        throw ShapeError("adam_step: parameter, gradient and state sizes differ");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 / (1.0 - std::pow(cfg.beta1, t));
    const double c2 = 1.0 / (1.0 - std::pow(cfg.beta2, t));
    const double b1 = cfg.beta1, b2 = cfg.beta2, lr = cfg.learning_rate, eps = cfg.epsilon;
    double* p = params.data();
    const double* g = grads.data();
    double* m = state.m.data();
    double* v = state.v.data();
    const std::size_t n = params.size();
    // Moments of untouched parameters decay geometrically; flushing them
    // before they go subnormal keeps the step fast and cannot move p.
    constexpr double tiny = 1e-200;
    for (std::size_t k = 0; k < n; ++k) {
        const double mk = b1 * m[k] + (1.0 - b1) * g[k];
        const double vk = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
        m[k] = std::abs(mk) < tiny ? 0.0 : mk;
        v[k] = vk < tiny ? 0.0 : vk;
        p[k] -= lr * (m[k] * c1) / (std::sqrt(v[k] * c2) + eps);
    }
}

}  // namespace rrl::dqn
