#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rrl/divergences.hpp"
#include "rrl/emdp.hpp"

namespace rrl {

/// Finite-horizon optimal Q by backward induction, with V_{H+1} = 0.
inline QTensor backward_induction(const TabularEMDP& m) {
    require_valid(m);
    const std::size_t H = m.horizon, S = m.num_states, A = m.num_actions;
    QTensor q(H, S, A);
    std::vector<double> next_value(S, 0.0);
    for (std::size_t step = H; step-- > 0;) {
        for (StateId s = 0; s < S; ++s)
            for (ActionId a = 0; a < A; ++a) {
                double v = 0.0;
                for (const auto& o : m.row(s, a)) v += o.probability * (o.reward + next_value[o.next_state]);
                q(step, s, a) = v;
            }
        for (StateId s = 0; s < S; ++s) next_value[s] = q.value(step, s);
    }
    return q;
}

/// max_{h,s,a} |Q_h(s,a) - r(s,a) - sum_s' p(s'|s,a) max_a' Q_{h+1}(s',a')|.
inline double bellman_residual(const QTensor& q, const TabularEMDP& m) {
    if (q.num_states() != m.num_states || q.num_actions() != m.num_actions || q.horizon() != m.horizon)
        throw ShapeError("bellman_residual: Q and EMDP disagree on shape");
    double worst = 0.0;
    for (std::size_t h = 0; h < q.horizon(); ++h)
        for (StateId s = 0; s < m.num_states; ++s)
            for (ActionId a = 0; a < m.num_actions; ++a) {
                double target = 0.0;
                for (const auto& o : m.row(s, a))
                    target += o.probability *
                              (o.reward + (h + 1 < q.horizon() ? q.value(h + 1, o.next_state) : 0.0));
                worst = std::max(worst, std::abs(q(h, s, a) - target));
            }
    return worst;
}

/// Writes softmax(values / tau) into `out` after subtracting the row max.
inline void softmax_row(std::span<const double> values, double tau, std::span<double> out) {
    const double top = *std::max_element(values.begin(), values.end());
    double total = 0.0;
    for (std::size_t a = 0; a < values.size(); ++a) {
        out[a] = std::exp((values[a] - top) / tau);
        total += out[a];
    }
    for (auto& p : out) p /= total;
}

inline TabularPolicy softmax_policy(const QTensor& q, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
    TabularPolicy pi(q.horizon(), q.num_states(), q.num_actions(), false);
    for (std::size_t h = 0; h < q.horizon(); ++h)
        for (StateId s = 0; s < q.num_states(); ++s) softmax_row(q.row(h, s), tau, pi.row(h, s));
    return pi;
}

/// Deterministic argmax policy; the lowest action index wins ties.
inline TabularPolicy greedy_policy(const QTensor& q) {
    TabularPolicy pi(q.horizon(), q.num_states(), q.num_actions(), false);
    for (std::size_t h = 0; h < q.horizon(); ++h)
        for (StateId s = 0; s < q.num_states(); ++s) {
            auto r = q.row(h, s);
            pi.row(h, s)[static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin())] = 1.0;
        }
    return pi;
}

/// Smallest L_s with |V_h(s) - V_h(s')| <= L_s d(s,s') for every h and pair.
inline double estimate_Ls(const QTensor& q, const TabularEMDP& m) {
    if (q.num_states() != m.num_states) throw ShapeError("estimate_Ls: Q and EMDP disagree on state count");
    const std::size_t S = m.num_states;
    for (StateId i = 0; i < S; ++i)
        for (StateId j = i + 1; j < S; ++j)
            if (!(m.metric(i, j) > 0.0))
                throw std::invalid_argument("estimate_Ls: zero distance between distinct states " +
                                            std::to_string(i) + " and " + std::to_string(j));
    double best = 0.0;
    std::vector<double> v(S);
    for (std::size_t h = 0; h < q.horizon(); ++h) {
        for (StateId s = 0; s < S; ++s) v[s] = q.value(h, s);
        for (StateId i = 0; i < S; ++i)
            for (StateId j = i + 1; j < S; ++j) best = std::max(best, std::abs(v[i] - v[j]) / m.metric(i, j));
    }
    return best;
}

class DegenerateInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// max_h W1(D_h^{pi,deploy}, D_h^{pi,train}) / W1(p_deploy, p_train): the
/// tightest constant for which the kernel-to-distribution Lipschitz
/// condition holds for this policy.
inline double estimate_Lp(const TabularEMDP& m_train, const TabularEMDP& m_deploy, const TabularPolicy& pi) {
    const double kernel = w1_kernel_shift(m_deploy, m_train).value;
    if (!(kernel > 0.0)) throw DegenerateInput("estimate_Lp: identical kernels, the ratio is undefined");
    const auto d_train = induced_state_distributions(m_train, pi);
    const auto d_deploy = induced_state_distributions(m_deploy, pi);
    double worst = 0.0;
    for (std::size_t h = 0; h < d_train.size(); ++h)
        worst = std::max(worst, w1_discrete(d_deploy[h], d_train[h], m_train.metric));
    return worst / kernel;
}

}  // namespace rrl
