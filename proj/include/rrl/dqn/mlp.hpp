#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rrl/emdp.hpp"
#include "rrl/random.hpp"

namespace rrl::dqn {

enum class Regularizer : std::uint32_t { none = 0, l2 = 1, layer_norm = 2, weight_norm = 3 };

inline std::string_view to_string(Regularizer r) {
    switch (r) {
        case Regularizer::none: return "none";
        case Regularizer::l2: return "l2";
        case Regularizer::layer_norm: return "layer_norm";
        case Regularizer::weight_norm: return "weight_norm";
    }
    return "unknown";
}

inline Regularizer parse_regularizer(std::string_view s) {
    if (s == "none" || s == "vanilla") return Regularizer::none;
    if (s == "l2") return Regularizer::l2;
    if (s == "layer_norm") return Regularizer::layer_norm;
    if (s == "weight_norm") return Regularizer::weight_norm;
    throw std::invalid_argument("unknown regularizer '" + std::string(s) + "'");
}

inline constexpr std::size_t kHiddenDim = 128;
inline constexpr double kLayerNormEpsilon = 1e-10;

/// Offsets of each parameter block inside the flat parameter vector. Blocks
/// that the regularizer does not use have zero length. Declared order:
/// W1 (hidden x inputs), g1, b1, ln_gamma, ln_beta, W2 (outputs x hidden), g2, b2.
struct ParameterLayout {
    std::size_t inputs = 0, hidden = 0, outputs = 0;
    std::size_t w1 = 0, g1 = 0, b1 = 0, ln_gamma = 0, ln_beta = 0, w2 = 0, g2 = 0, b2 = 0, total = 0;

    ParameterLayout() = default;
    ParameterLayout(std::size_t in, std::size_t hid, std::size_t out, Regularizer reg)
        : inputs(in), hidden(hid), outputs(out) {
        const bool wn = reg == Regularizer::weight_norm;
        const bool ln = reg == Regularizer::layer_norm;
        std::size_t at = 0;
        w1 = at;
        at += hid * in;
        g1 = at;
        at += wn ? hid : 0;
        b1 = at;
        at += hid;
        ln_gamma = at;
        at += ln ? hid : 0;
        ln_beta = at;
        at += ln ? hid : 0;
        w2 = at;
        at += out * hid;
        g2 = at;
        at += wn ? out : 0;
        b2 = at;
        at += out;
        total = at;
    }

    /// [begin, end) of the first-layer and second-layer parameter groups.
    [[nodiscard]] std::pair<std::size_t, std::size_t> first_layer() const { return {w1, w2}; }
    [[nodiscard]] std::pair<std::size_t, std::size_t> second_layer() const { return {w2, total}; }
};

/// Activations kept from a forward pass for backpropagation.
struct ForwardCache {
    StateId state = 0;
    std::vector<double> pre;     // hidden pre-activation z
    std::vector<double> normed;  // layer norm zhat
    double inv_std = 1.0;
    std::vector<double> post;    // input to the rectifier
    std::vector<double> hidden;  // rectified activations
    std::vector<double> output;
};

/// One-hidden-layer Q-network over one-hot state inputs.
///
/// Weight normalization reparameterizes every row of both weight matrices as
/// g * v / |v|; the row norms are cached and must be refreshed with sync()
/// after the parameters change.
class MlpQNet {
public:
    MlpQNet() = default;
    MlpQNet(std::size_t inputs, std::size_t hidden, std::size_t outputs, Regularizer reg, double l2_lambda = 0.0)
        : reg_(reg), l2_lambda_(l2_lambda), layout_(inputs, hidden, outputs, reg), params_(layout_.total, 0.0) {
        if (reg == Regularizer::layer_norm)
            std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(layout_.ln_gamma), hidden, 1.0);
        sync();
    }

    /// Glorot-uniform weights, zero biases; weight-norm gains start at the
    /// initial row norms so the effective weights equal v.
    static MlpQNet initialized(std::size_t inputs, std::size_t outputs, Regularizer reg, double l2_lambda,
                               CounterRng rng, std::size_t hidden = kHiddenDim) {
        MlpQNet net(inputs, hidden, outputs, reg, l2_lambda);
        const auto& L = net.layout_;
        const double b1 = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
        const double b2 = std::sqrt(6.0 / static_cast<double>(hidden + outputs));
        for (std::size_t k = 0; k < hidden * inputs; ++k) net.params_[L.w1 + k] = (2.0 * rng.uniform() - 1.0) * b1;
        for (std::size_t k = 0; k < outputs * hidden; ++k) net.params_[L.w2 + k] = (2.0 * rng.uniform() - 1.0) * b2;
        if (reg == Regularizer::weight_norm) {
            for (std::size_t j = 0; j < hidden; ++j) net.params_[L.g1 + j] = net.row_norm(L.w1 + j * inputs, inputs);
            for (std::size_t a = 0; a < outputs; ++a) net.params_[L.g2 + a] = net.row_norm(L.w2 + a * hidden, hidden);
        }
        net.sync();
        return net;
    }

    [[nodiscard]] Regularizer regularizer() const noexcept { return reg_; }
    [[nodiscard]] double l2_lambda() const noexcept { return l2_lambda_; }
    [[nodiscard]] const ParameterLayout& layout() const noexcept { return layout_; }
    [[nodiscard]] std::size_t inputs() const noexcept { return layout_.inputs; }
    [[nodiscard]] std::size_t hidden() const noexcept { return layout_.hidden; }
    [[nodiscard]] std::size_t outputs() const noexcept { return layout_.outputs; }
    [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }

    /// Mutable access for optimizers and checkpoint loading. Call sync() after.
    std::span<double> mutable_parameters() noexcept { return params_; }

    void sync() {
        if (reg_ != Regularizer::weight_norm) return;
        const auto& L = layout_;
        scale1_.resize(L.hidden);
        scale2_.resize(L.outputs);
        for (std::size_t j = 0; j < L.hidden; ++j) {
            const double n = row_norm(L.w1 + j * L.inputs, L.inputs);
            scale1_[j] = n > 0.0 ? params_[L.g1 + j] / n : 0.0;
        }
        for (std::size_t a = 0; a < L.outputs; ++a) {
            const double n = row_norm(L.w2 + a * L.hidden, L.hidden);
            scale2_[a] = n > 0.0 ? params_[L.g2 + a] / n : 0.0;
        }
    }

    /// Effective first-layer weight W1[j][i] after any reparameterization.
    [[nodiscard]] double w1(std::size_t j, std::size_t i) const {
        const double v = params_[layout_.w1 + j * layout_.inputs + i];
        return reg_ == Regularizer::weight_norm ? scale1_[j] * v : v;
    }
    [[nodiscard]] double w2(std::size_t a, std::size_t j) const {
        const double v = params_[layout_.w2 + a * layout_.hidden + j];
        return reg_ == Regularizer::weight_norm ? scale2_[a] * v : v;
    }

    void forward(StateId s, ForwardCache& c) const {
        const auto& L = layout_;
        if (s >= L.inputs)
            throw std::out_of_range("forward: state " + std::to_string(s) + " outside input range " +
                                    std::to_string(L.inputs));
        c.state = s;
        c.pre.resize(L.hidden);
        c.post.resize(L.hidden);
        c.hidden.resize(L.hidden);
        c.output.resize(L.outputs);
        const double* b1 = params_.data() + L.b1;
        for (std::size_t j = 0; j < L.hidden; ++j) c.pre[j] = w1(j, s) + b1[j];
        if (reg_ == Regularizer::layer_norm) {
            c.normed.resize(L.hidden);
            double mean = 0.0;
            for (double z : c.pre) mean += z;
            mean /= static_cast<double>(L.hidden);
            double var = 0.0;
            for (double z : c.pre) var += (z - mean) * (z - mean);
            var /= static_cast<double>(L.hidden);
            c.inv_std = 1.0 / std::sqrt(var + kLayerNormEpsilon);
            const double* gamma = params_.data() + L.ln_gamma;
            const double* beta = params_.data() + L.ln_beta;
            for (std::size_t j = 0; j < L.hidden; ++j) {
                c.normed[j] = (c.pre[j] - mean) * c.inv_std;
                c.post[j] = gamma[j] * c.normed[j] + beta[j];
            }
        } else {
            c.post = c.pre;
        }
        for (std::size_t j = 0; j < L.hidden; ++j) c.hidden[j] = c.post[j] > 0.0 ? c.post[j] : 0.0;
        const double* b2 = params_.data() + L.b2;
        for (std::size_t a = 0; a < L.outputs; ++a) {
            const double* row = params_.data() + L.w2 + a * L.hidden;
            double acc = 0.0;
            for (std::size_t j = 0; j < L.hidden; ++j) acc += row[j] * c.hidden[j];
            if (reg_ == Regularizer::weight_norm) acc *= scale2_[a];
            c.output[a] = acc + b2[a];
        }
    }

    [[nodiscard]] std::vector<double> forward(StateId s) const {
        ForwardCache c;
        forward(s, c);
        return c.output;
    }

    /// Accumulates dLoss/dparams into `grad` for one sample, given dLoss/dQ.
    /// Weight-norm rows accumulate into the effective-weight buffers
    /// `dw1_eff` / `dw2_eff`; finish_gradient() maps those onto (g, v).
    void backward(const ForwardCache& c, std::span<const double> d_out, std::span<double> grad,
                  std::vector<double>& d_hidden) const {
        const auto& L = layout_;
        d_hidden.assign(L.hidden, 0.0);
        for (std::size_t a = 0; a < L.outputs; ++a) {
            const double g = d_out[a];
            if (g == 0.0) continue;
            grad[L.b2 + a] += g;
            double* dw = grad.data() + L.w2 + a * L.hidden;  // effective-weight gradient for now
            for (std::size_t j = 0; j < L.hidden; ++j) {
                dw[j] += g * c.hidden[j];
                d_hidden[j] += g * w2(a, j);
            }
        }
        for (std::size_t j = 0; j < L.hidden; ++j)
            if (c.post[j] <= 0.0) d_hidden[j] = 0.0;
        if (reg_ == Regularizer::layer_norm) {
            const double* gamma = params_.data() + L.ln_gamma;
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t j = 0; j < L.hidden; ++j) {
                grad[L.ln_gamma + j] += d_hidden[j] * c.normed[j];
                grad[L.ln_beta + j] += d_hidden[j];
                const double dn = d_hidden[j] * gamma[j];
                mean_d += dn;
                mean_dx += dn * c.normed[j];
            }
            mean_d /= static_cast<double>(L.hidden);
            mean_dx /= static_cast<double>(L.hidden);
            for (std::size_t j = 0; j < L.hidden; ++j) {
                const double dn = d_hidden[j] * gamma[j];
                d_hidden[j] = c.inv_std * (dn - mean_d - c.normed[j] * mean_dx);
            }
        }
        for (std::size_t j = 0; j < L.hidden; ++j) {
            grad[L.b1 + j] += d_hidden[j];
            grad[L.w1 + j * L.inputs + c.state] += d_hidden[j];
        }
    }

    /// Converts effective-weight gradients into parameter gradients (weight
    /// norm) and adds the l2 penalty gradient 2*lambda*W.
    void finish_gradient(std::span<double> grad) const {
        const auto& L = layout_;
        if (reg_ == Regularizer::weight_norm) {
            reparameterize(grad, L.w1, L.g1, L.hidden, L.inputs, scale1_);
            reparameterize(grad, L.w2, L.g2, L.outputs, L.hidden, scale2_);
        }
        if (reg_ == Regularizer::l2 && l2_lambda_ > 0.0) {
            for (std::size_t k = L.w1; k < L.w1 + L.hidden * L.inputs; ++k) grad[k] += 2.0 * l2_lambda_ * params_[k];
            for (std::size_t k = L.w2; k < L.w2 + L.outputs * L.hidden; ++k) grad[k] += 2.0 * l2_lambda_ * params_[k];
        }
    }

    /// lambda * (|W1|^2 + |W2|^2) for the l2 regularizer, else 0.
    [[nodiscard]] double penalty() const {
        if (reg_ != Regularizer::l2 || l2_lambda_ == 0.0) return 0.0;
        const auto& L = layout_;
        double total = 0.0;
        for (std::size_t k = L.w1; k < L.w1 + L.hidden * L.inputs; ++k) total += params_[k] * params_[k];
        for (std::size_t k = L.w2; k < L.w2 + L.outputs * L.hidden; ++k) total += params_[k] * params_[k];
        return l2_lambda_ * total;
    }

    [[nodiscard]] bool finite() const {
        return std::all_of(params_.begin(), params_.end(), [](double x) { return std::isfinite(x); });
    }

    friend bool operator==(const MlpQNet& a, const MlpQNet& b) {
        return a.reg_ == b.reg_ && a.l2_lambda_ == b.l2_lambda_ && a.layout_.total == b.layout_.total &&
               a.layout_.inputs == b.layout_.inputs && a.layout_.outputs == b.layout_.outputs && a.params_ == b.params_;
    }

private:
    [[nodiscard]] double row_norm(std::size_t offset, std::size_t len) const {
        double s = 0.0;
        for (std::size_t k = 0; k < len; ++k) s += params_[offset + k] * params_[offset + k];
        return std::sqrt(s);
    }

    // With w = g v / |v|: dg = (dw . v) / |v| and dv = (g/|v|) dw - (g dg / |v|^2) v.
    void reparameterize(std::span<double> grad, std::size_t v_off, std::size_t g_off, std::size_t rows,
                        std::size_t cols, const std::vector<double>& scale) const {
        for (std::size_t r = 0; r < rows; ++r) {
            const double* v = params_.data() + v_off + r * cols;
            double* dw = grad.data() + v_off + r * cols;
            const double n = row_norm(v_off + r * cols, cols);
            if (n == 0.0) continue;
            double dot = 0.0;
            for (std::size_t k = 0; k < cols; ++k) dot += dw[k] * v[k];
            const double dg = dot / n;
            grad[g_off + r] += dg;
            const double coef = scale[r] * dg / n;  // g dg / |v|^2
            for (std::size_t k = 0; k < cols; ++k) dw[k] = scale[r] * dw[k] - coef * v[k];
        }
    }

    Regularizer reg_ = Regularizer::none;
    double l2_lambda_ = 0.0;
    ParameterLayout layout_;
    std::vector<double> params_;
    std::vector<double> scale1_, scale2_;  // g / |v| per row (weight norm only)
};

}  // namespace rrl::dqn
