#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rrl/dqn/trainer.hpp"

namespace rrl::dqn {

struct GradientCheckOptions {
    double step = 1e-5;
    std::size_t samples_per_layer = 100;
    double gamma = 0.99;
    std::uint64_t seed = 0;
};

/// Compares backpropagated TD-loss gradients with central differences on
/// randomly chosen parameters of each layer. First-layer weights are drawn
/// from the columns the batch touches (other one-hot columns have a zero
/// gradient). Returns the largest |analytic - numeric| / max(|analytic|,
/// |numeric|, tiny), where tiny = 1e-6 * max(1, loss) keeps round-off in
/// the differenced losses from dominating exactly-zero gradients.
/// Coordinates whose +-step perturbation flips a ReLU on the batch straddle
/// a kink, where the loss has no derivative; they are skipped and counted in
/// `kinks` when given.
inline double gradient_check(const MlpQNet& net, const MlpQNet& target, std::span<const Transition> batch,
                             const GradientCheckOptions& opt = {}, std::size_t* kinks = nullptr) {
    TdWorkspace ws;
    const double loss = td_loss_and_gradient(net, target, batch, opt.gamma, ws);
    const double tiny = 1e-6 * std::max(1.0, std::abs(loss));
    const std::vector<double> analytic = ws.grad;
    const auto& L = net.layout();

    std::vector<std::size_t> first, second;
    std::vector<bool> touched(L.inputs, false);
    for (const auto& t : batch) touched[t.state] = true;
    for (std::size_t j = 0; j < L.hidden; ++j)
        for (std::size_t i = 0; i < L.inputs; ++i)
            if (touched[i]) first.push_back(L.w1 + j * L.inputs + i);
    for (std::size_t k = L.g1; k < L.w2; ++k) first.push_back(k);
    for (std::size_t k = L.w2; k < L.total; ++k) second.push_back(k);

    ForwardCache fc;
    auto relu_pattern = [&](const MlpQNet& n) {
        std::vector<bool> on;
        for (const auto& t : batch) {
            n.forward(t.state, fc);
            for (double z : fc.post) on.push_back(z > 0.0);
        }
        return on;
    };
    const auto base_pattern = relu_pattern(net);

    CounterRng rng(opt.seed);
    double worst = 0.0;
    std::size_t skipped = 0;
    MlpQNet probe = net;
    for (auto* group : {&first, &second}) {
        auto& idx = *group;
        const std::size_t n = std::min(opt.samples_per_layer, idx.size());
        for (std::size_t k = 0; k < n; ++k) std::swap(idx[k], idx[k + rng.below(idx.size() - k)]);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t p = idx[k];
            const double orig = net.parameters()[p];
            auto loss_at = [&](double value) {
                probe.mutable_parameters()[p] = value;
                probe.sync();
                return td_loss_and_gradient(probe, target, batch, opt.gamma, ws);
            };
            const double up = loss_at(orig + opt.step);
            bool smooth = relu_pattern(probe) == base_pattern;
            const double down = loss_at(orig - opt.step);
            smooth = smooth && relu_pattern(probe) == base_pattern;
            probe.mutable_parameters()[p] = orig;
            probe.sync();
            if (!smooth) {
                ++skipped;
                continue;
            }
            const double numeric = (up - down) / (2.0 * opt.step);
            const double scale = std::max({std::abs(analytic[p]), std::abs(numeric), tiny});
            worst = std::max(worst, std::abs(analytic[p] - numeric) / scale);
        }
    }
    if (kinks) *kinks = skipped;
    return worst;
}

}  // namespace rrl::dqn
