#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrl/random.hpp"

namespace rrl {

using StateId = std::size_t;
using ActionId = std::size_t;

/// Thrown when two objects that must agree on S, A or H do not.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One successor entry of p(.|s,a).
struct Outcome {
    double probability = 0.0;
    StateId next_state = 0;
    double reward = 0.0;
    bool terminal = false;

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

/// Dense symmetric distance table over states.
class StateMetric {
public:
    StateMetric() = default;
    explicit StateMetric(std::size_t n, double off_diagonal = 1.0) : n_(n), d_(n * n, off_diagonal) {
        for (std::size_t i = 0; i < n; ++i) d_[i * n + i] = 0.0;
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] double operator()(StateId a, StateId b) const noexcept { return d_[a * n_ + b]; }

    void set(StateId a, StateId b, double d) {
        d_[a * n_ + b] = d;
        d_[b * n_ + a] = d;
    }

    [[nodiscard]] double max_distance() const noexcept {
        return d_.empty() ? 0.0 : *std::max_element(d_.begin(), d_.end());
    }

    [[nodiscard]] StateMetric scaled(double c) const {
        StateMetric out = *this;
        for (auto& x : out.d_) x *= c;
        return out;
    }

    friend bool operator==(const StateMetric&, const StateMetric&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> d_;
};

/// Finite-horizon episodic MDP with a time-invariant kernel.
///
/// Transitions are stored per (s, a) as short outcome lists; `sink` is set
/// once make_absorbing() has routed every terminal entry to a zero-reward
/// absorbing state.
struct TabularEMDP {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t horizon = 0;
    std::vector<std::vector<Outcome>> transitions;  // index s * num_actions + a
    std::vector<double> initial_dist;
    StateMetric metric;
    std::optional<StateId> sink;

    TabularEMDP() = default;
    TabularEMDP(std::size_t s, std::size_t a, std::size_t h)
        : num_states(s), num_actions(a), horizon(h), transitions(s * a), initial_dist(s, 0.0),
          metric(s) {}

    [[nodiscard]] const std::vector<Outcome>& row(StateId s, ActionId a) const {
        return transitions[s * num_actions + a];
    }
    std::vector<Outcome>& row(StateId s, ActionId a) { return transitions[s * num_actions + a]; }

    [[nodiscard]] double expected_reward(StateId s, ActionId a) const {
        double r = 0.0;
        for (const auto& o : row(s, a)) r += o.probability * o.reward;
        return r;
    }

    /// Dense successor distribution p(.|s,a).
    [[nodiscard]] std::vector<double> successor_distribution(StateId s, ActionId a) const {
        std::vector<double> p(num_states, 0.0);
        for (const auto& o : row(s, a)) p[o.next_state] += o.probability;
        return p;
    }

    [[nodiscard]] TabularEMDP with_horizon(std::size_t h) const {
        TabularEMDP out = *this;
        out.horizon = h;
        return out;
    }

    friend bool operator==(const TabularEMDP&, const TabularEMDP&) = default;
};

/// Per-step stochastic policy pi_h(a|s). A stationary policy stores one S x A
/// table that is reused for every step.
class TabularPolicy {
public:
    TabularPolicy() = default;
    TabularPolicy(std::size_t horizon, std::size_t states, std::size_t actions, bool stationary)
        : horizon_(horizon), states_(states), actions_(actions), stationary_(stationary),
          probs_((stationary ? 1 : horizon) * states * actions, 0.0) {}

    static TabularPolicy uniform(std::size_t horizon, std::size_t states, std::size_t actions) {
        TabularPolicy p(horizon, states, actions, true);
        std::fill(p.probs_.begin(), p.probs_.end(), 1.0 / static_cast<double>(actions));
        return p;
    }

    [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::size_t num_states() const noexcept { return states_; }
    [[nodiscard]] std::size_t num_actions() const noexcept { return actions_; }
    [[nodiscard]] bool stationary() const noexcept { return stationary_; }

    [[nodiscard]] std::span<const double> row(std::size_t h, StateId s) const {
        return {probs_.data() + offset(h, s), actions_};
    }
    std::span<double> row(std::size_t h, StateId s) { return {probs_.data() + offset(h, s), actions_}; }

    [[nodiscard]] double operator()(std::size_t h, StateId s, ActionId a) const {
        return probs_[offset(h, s) + a];
    }

    friend bool operator==(const TabularPolicy&, const TabularPolicy&) = default;

private:
    [[nodiscard]] std::size_t offset(std::size_t h, StateId s) const noexcept {
        return ((stationary_ ? 0 : h) * states_ + s) * actions_;
    }

    std::size_t horizon_ = 0;
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    bool stationary_ = true;
    std::vector<double> probs_;
};

/// Action-value table Q_h(s,a), steps indexed 0..H-1.
class QTensor {
public:
    QTensor() = default;
    QTensor(std::size_t horizon, std::size_t states, std::size_t actions)
        : horizon_(horizon), states_(states), actions_(actions), values_(horizon * states * actions, 0.0) {}

    [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::size_t num_states() const noexcept { return states_; }
    [[nodiscard]] std::size_t num_actions() const noexcept { return actions_; }

    [[nodiscard]] double operator()(std::size_t h, StateId s, ActionId a) const {
        return values_[(h * states_ + s) * actions_ + a];
    }
    double& operator()(std::size_t h, StateId s, ActionId a) { return values_[(h * states_ + s) * actions_ + a]; }

    [[nodiscard]] std::span<const double> row(std::size_t h, StateId s) const {
        return {values_.data() + (h * states_ + s) * actions_, actions_};
    }

    /// V_h(s) = max_a Q_h(s,a).
    [[nodiscard]] double value(std::size_t h, StateId s) const {
        auto r = row(h, s);
        return *std::max_element(r.begin(), r.end());
    }

    [[nodiscard]] std::span<const double> data() const noexcept { return values_; }
    std::span<double> data() noexcept { return values_; }

    friend bool operator==(const QTensor&, const QTensor&) = default;

private:
    std::size_t horizon_ = 0;
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<double> values_;
};

struct StateDistribution {
    std::vector<double> probs;

    [[nodiscard]] std::size_t size() const noexcept { return probs.size(); }
    [[nodiscard]] double operator[](StateId s) const { return probs[s]; }

    static StateDistribution point_mass(std::size_t n, StateId s) {
        StateDistribution d{std::vector<double>(n, 0.0)};
        d.probs[s] = 1.0;
        return d;
    }
};

struct TrajectoryStep {
    std::size_t h = 0;  // 0-based step index
    StateId state = 0;
    ActionId action = 0;
    double reward = 0.0;
    StateId next_state = 0;
    bool terminal = false;

    friend bool operator==(const TrajectoryStep&, const TrajectoryStep&) = default;
};

struct Trajectory {
    std::uint64_t episode_id = 0;
    std::vector<TrajectoryStep> steps;

    [[nodiscard]] double total_reward() const {
        double r = 0.0;
        for (const auto& s : steps) r += s.reward;
        return r;
    }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Violation {
    std::optional<StateId> state;
    std::optional<ActionId> action;
    std::string message;
};

namespace detail {

inline constexpr double kRowTolerance = 1e-12;

inline std::string describe(const Violation& v) {
    std::ostringstream os;
    if (v.state) os << "s=" << *v.state;
    if (v.action) os << " a=" << *v.action;
    if (v.state || v.action) os << ": ";
    os << v.message;
    return os.str();
}

inline void check_metric(const TabularEMDP& m, std::vector<Violation>& out) {
    const auto n = m.num_states;
    const auto& d = m.metric;
    if (d.size() != n) {
        out.push_back({std::nullopt, std::nullopt, "metric size does not match state count"});
        return;
    }
    for (StateId i = 0; i < n; ++i) {
        if (d(i, i) != 0.0) out.push_back({i, std::nullopt, "metric: d(s,s) != 0"});
        for (StateId j = i + 1; j < n; ++j) {
            if (d(i, j) != d(j, i)) out.push_back({i, std::nullopt, "metric: asymmetric at s'=" + std::to_string(j)});
            if (d(i, j) < 0.0 || !std::isfinite(d(i, j)))
                out.push_back({i, std::nullopt, "metric: negative or non-finite distance"});
        }
    }
    auto triangle = [&](StateId a, StateId b, StateId c) {
        if (d(a, c) > d(a, b) + d(b, c) + 1e-9)
            out.push_back({a, std::nullopt,
                           "metric: triangle inequality fails via " + std::to_string(b) + " to " + std::to_string(c)});
    };
    if (n <= 64) {
        for (StateId a = 0; a < n; ++a)
            for (StateId b = 0; b < n; ++b)
                for (StateId c = 0; c < n; ++c) triangle(a, b, c);
    } else {
        CounterRng rng(0x7121A);
        for (int k = 0; k < 200000; ++k) triangle(rng.below(n), rng.below(n), rng.below(n));
    }
}

}  // namespace detail

/// Lists every broken structural invariant of an EMDP; empty means valid.
inline std::vector<Violation> validate_emdp(const TabularEMDP& m) {
    std::vector<Violation> out;
    if (m.num_states == 0 || m.num_actions == 0 || m.horizon == 0)
        out.push_back({std::nullopt, std::nullopt, "S, A and H must be positive"});
    if (m.transitions.size() != m.num_states * m.num_actions) {
        out.push_back({std::nullopt, std::nullopt, "transition table has wrong size"});
        return out;
    }
    for (StateId s = 0; s < m.num_states; ++s) {
        for (ActionId a = 0; a < m.num_actions; ++a) {
            double total = 0.0;
            for (const auto& o : m.row(s, a)) {
                if (o.probability < 0.0) out.push_back({s, a, "negative probability"});
                if (o.next_state >= m.num_states) out.push_back({s, a, "successor out of range"});
                if (m.sink && o.terminal && o.next_state != *m.sink)
                    out.push_back({s, a, "terminal transition does not enter the sink"});
                total += o.probability;
            }
            if (std::abs(total - 1.0) > detail::kRowTolerance)
                out.push_back({s, a, "probabilities sum to " + std::to_string(total)});
        }
    }
    if (m.sink) {
        const StateId k = *m.sink;
        if (k >= m.num_states) {
            out.push_back({std::nullopt, std::nullopt, "sink index out of range"});
        } else {
            for (ActionId a = 0; a < m.num_actions; ++a) {
                const auto& r = m.row(k, a);
                if (r.size() != 1 || r[0].next_state != k || r[0].probability != 1.0 || r[0].reward != 0.0)
                    out.push_back({k, a, "sink is not a zero-reward self-loop"});
            }
        }
    }
    if (m.initial_dist.size() != m.num_states) {
        out.push_back({std::nullopt, std::nullopt, "initial distribution has wrong length"});
    } else {
        double total = 0.0;
        for (StateId s = 0; s < m.num_states; ++s) {
            if (m.initial_dist[s] < 0.0) out.push_back({s, std::nullopt, "negative initial probability"});
            total += m.initial_dist[s];
        }
        if (std::abs(total - 1.0) > detail::kRowTolerance)
            out.push_back({std::nullopt, std::nullopt, "initial distribution sums to " + std::to_string(total)});
    }
    detail::check_metric(m, out);
    return out;
}

inline void require_valid(const TabularEMDP& m) {
    auto v = validate_emdp(m);
    if (!v.empty())
        throw std::invalid_argument("invalid EMDP (" + std::to_string(v.size()) + " violations), first: " +
                                    detail::describe(v.front()));
}

/// Adds a zero-reward absorbing sink (index S) and sends every terminal entry
/// there. The original reward of the entering transition is kept. The sink
/// sits at the maximum pairwise distance from every other state.
inline TabularEMDP make_absorbing(const TabularEMDP& m) {
    if (m.sink) return m;
    const std::size_t n = m.num_states;
    TabularEMDP out(n + 1, m.num_actions, m.horizon);
    for (StateId s = 0; s < n; ++s) {
        for (ActionId a = 0; a < m.num_actions; ++a) {
            auto& row = out.row(s, a);
            row = m.row(s, a);
            for (auto& o : row)
                if (o.terminal) o.next_state = n;
        }
    }
    for (ActionId a = 0; a < m.num_actions; ++a) out.row(n, a) = {Outcome{1.0, n, 0.0, false}};
    std::copy(m.initial_dist.begin(), m.initial_dist.end(), out.initial_dist.begin());
    out.initial_dist[n] = 0.0;
    const double far = m.metric.max_distance();
    for (StateId i = 0; i < n; ++i) {
        for (StateId j = i + 1; j < n; ++j) out.metric.set(i, j, m.metric(i, j));
        out.metric.set(i, n, far);
    }
    out.sink = n;
    return out;
}

namespace detail {

inline void require_policy_shape(const TabularEMDP& m, const TabularPolicy& pi, bool allow_pad_row = false) {
    const bool pad_ok = allow_pad_row && !m.sink && pi.num_states() == m.num_states + 1;
    if (pi.num_states() != m.num_states && !pad_ok)
        throw ShapeError("policy has " + std::to_string(pi.num_states()) + " states, EMDP has " +
                         std::to_string(m.num_states));
    if (pi.num_actions() != m.num_actions)
        throw ShapeError("policy has " + std::to_string(pi.num_actions()) + " actions, EMDP has " +
                         std::to_string(m.num_actions));
    if (!pi.stationary() && pi.horizon() < m.horizon)
        throw ShapeError("non-stationary policy is shorter than the horizon");
}

template <class Probs>
inline std::size_t sample_index(Probs&& probs, double u) {
    std::size_t last = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        last = i;
        if (u < probs[i]) return i;
        u -= probs[i];
    }
    return last;
}

inline std::size_t sample_outcome(const std::vector<Outcome>& row, double u) {
    std::size_t last = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i].probability <= 0.0) continue;
        last = i;
        if (u < row[i].probability) return i;
        u -= row[i].probability;
    }
    return last;
}

}  // namespace detail

/// Rolls out exactly H steps. After a terminal transition the trajectory is
/// padded at the sink (or at index S when the EMDP has no sink) with zero
/// reward; actions at the sink are still drawn from pi when pi covers it.
inline Trajectory sample_episode(const TabularEMDP& m, const TabularPolicy& pi, std::uint64_t seed) {
    detail::require_policy_shape(m, pi, true);
    CounterRng rng(seed);
    Trajectory traj;
    traj.episode_id = seed;
    traj.steps.reserve(m.horizon);
    const StateId pad = m.sink.value_or(m.num_states);
    StateId s = detail::sample_index(m.initial_dist, rng.uniform());
    bool done = false;
    for (std::size_t h = 0; h < m.horizon; ++h) {
        if (done || s == pad) {
            ActionId a = pad < pi.num_states() ? detail::sample_index(pi.row(h, pad), rng.uniform()) : 0;
            traj.steps.push_back({h, pad, a, 0.0, pad, false});
            done = true;
            continue;
        }
        const ActionId a = detail::sample_index(pi.row(h, s), rng.uniform());
        const auto& row = m.row(s, a);
        const auto& o = row[detail::sample_outcome(row, rng.uniform())];
        const StateId next = o.terminal ? pad : o.next_state;
        traj.steps.push_back({h, s, a, o.reward, next, o.terminal});
        done = o.terminal;
        s = next;
    }
    return traj;
}

/// D_1 = p_0 and D_{h+1}(s') = sum_s D_h(s) sum_a pi_h(a|s) p(s'|s,a).
/// Expects the absorbing form so that mass is conserved at terminals.
inline std::vector<StateDistribution> induced_state_distributions(const TabularEMDP& m, const TabularPolicy& pi) {
    detail::require_policy_shape(m, pi);
    std::vector<StateDistribution> out;
    out.reserve(m.horizon);
    out.push_back({m.initial_dist});
    for (std::size_t h = 0; h + 1 < m.horizon; ++h) {
        const auto& cur = out.back().probs;
        std::vector<double> next(m.num_states, 0.0);
        for (StateId s = 0; s < m.num_states; ++s) {
            if (cur[s] == 0.0) continue;
            auto act = pi.row(h, s);
            for (ActionId a = 0; a < m.num_actions; ++a) {
                const double w = cur[s] * act[a];
                if (w == 0.0) continue;
                for (const auto& o : m.row(s, a)) next[o.next_state] += w * o.probability;
            }
        }
        out.push_back({std::move(next)});
    }
    return out;
}

/// E_{s~dist} E_{a~pi_h(.|s)} Q_h(s,a).
inline double expected_q_under(const StateDistribution& dist, const TabularPolicy& pi, const QTensor& q,
                               std::size_t h) {
    if (dist.size() != q.num_states() || pi.num_states() != q.num_states() || pi.num_actions() != q.num_actions())
        throw ShapeError("expected_q_under: distribution, policy and Q disagree on shape");
    if (h >= q.horizon()) throw std::out_of_range("expected_q_under: step out of range");
    double total = 0.0;
    for (StateId s = 0; s < q.num_states(); ++s) {
        const double w = dist[s];
        if (w == 0.0) continue;
        auto act = pi.row(h, s);
        auto qs = q.row(h, s);
        double inner = 0.0;
        for (ActionId a = 0; a < q.num_actions(); ++a) inner += act[a] * qs[a];
        total += w * inner;
    }
    return total;
}

}  // namespace rrl
