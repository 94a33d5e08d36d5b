#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rrl/dqn/adam.hpp"
#include "rrl/dqn/mlp.hpp"
#include "rrl/dqn/replay.hpp"
#include "rrl/emdp.hpp"
#include "rrl/environments.hpp"
#include "rrl/rationality.hpp"
#include "rrl/solver.hpp"

namespace rrl::dqn {

/// DQN hyperparameters. Defaults follow the reference experiment setup.
struct TrainConfig {
    std::size_t batch_size = 64;
    std::size_t buffer_capacity = 50000;
    double softmax_tau = 1e-7;
    std::size_t episodes = 5000;
    std::size_t warmup_steps = 1000;
    AdamConfig optimizer{};
    std::size_t target_update_period = 500;
    std::size_t hidden_dim = kHiddenDim;
    double eps_start = 1.0;
    double eps_final = 0.05;
    std::size_t eps_decay_episodes = 3000;
    double gamma = 0.99;
    double challenge_eps = 0.0;
    /// When set, the slip probability is redrawn from these levels at the
    /// start of every episode.
    std::optional<std::vector<double>> domain_randomization;
    Regularizer regularizer = Regularizer::none;
    double l2_lambda = 1e-4;
    std::size_t snapshot_every = 500;
    std::uint64_t seed = 1;

    void validate() const {
        if (batch_size == 0 || buffer_capacity == 0 || target_update_period == 0 || hidden_dim == 0)
            throw std::invalid_argument("train config: sizes and periods must be positive");
        if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("train config: gamma must lie in (0, 1]");
        if (!(softmax_tau > 0.0)) throw std::invalid_argument("train config: softmax temperature must be positive");
        if (!(challenge_eps >= 0.0 && challenge_eps <= 1.0))
            throw std::invalid_argument("train config: challenge_eps must lie in [0, 1]");
        if (domain_randomization) {
            if (domain_randomization->empty()) throw std::invalid_argument("train config: empty randomization range");
            for (double e : *domain_randomization)
                if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("train config: randomization level outside [0, 1]");
        }
        if (eps_decay_episodes == 0) throw std::invalid_argument("train config: eps_decay_episodes must be positive");
    }
};

/// Default domain-randomization levels {0, 0.1, ..., 0.5}; their mean is 0.25.
inline std::vector<double> default_randomization_levels() { return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}; }

/// Exploration rate for a 1-based episode: linear from eps_start at episode 1
/// to eps_final at eps_decay_episodes, flat afterwards.
inline double exploration_rate(std::size_t episode, const TrainConfig& cfg) {
    if (episode >= cfg.eps_decay_episodes || cfg.eps_decay_episodes == 1) return cfg.eps_final;
    const double frac = static_cast<double>(episode - 1) / static_cast<double>(cfg.eps_decay_episodes - 1);
    return cfg.eps_start + (cfg.eps_final - cfg.eps_start) * frac;
}

struct Snapshot {
    std::size_t episode = 0;
    MlpQNet net;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct TrainLog {
    std::vector<double> returns;
    std::vector<double> challenge_eps;
    VisitedStates visited;
    std::vector<Snapshot> snapshots;
    std::size_t env_steps = 0;
    std::size_t gradient_steps = 0;

    [[nodiscard]] double mean_return(std::size_t first, std::size_t count) const {
        double s = 0.0;
        for (std::size_t k = first; k < first + count; ++k) s += returns.at(k);
        return s / static_cast<double>(count);
    }

    friend bool operator==(const TrainLog&, const TrainLog&) = default;
};

struct TrainResult {
    MlpQNet net;
    TrainLog log;
};

/// Scratch buffers reused across TD updates.
struct TdWorkspace {
    std::vector<ForwardCache> caches;
    ForwardCache target_cache;
    std::vector<double> grad;
    std::vector<double> d_hidden;
    std::vector<double> d_out;
};

namespace detail {

template <class TargetMax>
double td_loss_impl(const MlpQNet& net, std::span<const Transition> batch, double gamma, TdWorkspace& ws,
                    TargetMax&& target_max) {
    if (batch.empty()) throw std::invalid_argument("td update on an empty batch");
    const std::size_t B = batch.size();
    ws.caches.resize(B);
    ws.grad.assign(net.parameters().size(), 0.0);
    ws.d_out.assign(net.outputs(), 0.0);
    double loss = 0.0;
    for (std::size_t k = 0; k < B; ++k) {
        const auto& t = batch[k];
        double y = t.reward;
        if (!t.terminal) y += gamma * target_max(t.next_state);
        net.forward(t.state, ws.caches[k]);
        const double err = ws.caches[k].output[t.action] - y;
        loss += err * err;
        std::fill(ws.d_out.begin(), ws.d_out.end(), 0.0);
        ws.d_out[t.action] = 2.0 * err / static_cast<double>(B);
        net.backward(ws.caches[k], ws.d_out, ws.grad, ws.d_hidden);
    }
    net.finish_gradient(ws.grad);
    return loss / static_cast<double>(B) + net.penalty();
}

}  // namespace detail

/// max_a target(s, a) for every state; the target network is frozen between
/// syncs, so the trainer evaluates it once per sync.
inline std::vector<double> target_max_table(const MlpQNet& target) {
    std::vector<double> out(target.inputs());
    ForwardCache c;
    for (StateId s = 0; s < out.size(); ++s) {
        target.forward(s, c);
        out[s] = *std::max_element(c.output.begin(), c.output.end());
    }
    return out;
}

/// Mean squared TD error (plus the l2 penalty) and its gradient with respect
/// to `net`; the target network is held fixed.
inline double td_loss_and_gradient(const MlpQNet& net, const MlpQNet& target, std::span<const Transition> batch,
                                   double gamma, TdWorkspace& ws) {
    return detail::td_loss_impl(net, batch, gamma, ws, [&](StateId s) {
        target.forward(s, ws.target_cache);
        return *std::max_element(ws.target_cache.output.begin(), ws.target_cache.output.end());
    });
}

inline double td_loss_and_gradient(const MlpQNet& net, std::span<const double> target_max,
                                   std::span<const Transition> batch, double gamma, TdWorkspace& ws) {
    return detail::td_loss_impl(net, batch, gamma, ws, [&](StateId s) { return target_max[s]; });
}

/// One optimizer step on a sampled batch; returns the loss before the step.
inline double td_update(MlpQNet& net, const MlpQNet& target, std::span<const Transition> batch, double gamma,
                        AdamState& adam, const AdamConfig& cfg, TdWorkspace& ws) {
    const double loss = td_loss_and_gradient(net, target, batch, gamma, ws);
    adam_step(net.mutable_parameters(), ws.grad, adam, cfg);
    net.sync();
    return loss;
}

inline double td_update(MlpQNet& net, std::span<const double> target_max, std::span<const Transition> batch,
                        double gamma, AdamState& adam, const AdamConfig& cfg, TdWorkspace& ws) {
    const double loss = td_loss_and_gradient(net, target_max, batch, gamma, ws);
    adam_step(net.mutable_parameters(), ws.grad, adam, cfg);
    net.sync();
    return loss;
}

inline ActionId greedy_action(std::span<const double> q) {
    return static_cast<ActionId>(std::max_element(q.begin(), q.end()) - q.begin());
}

namespace streams {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t replay = 2;
inline constexpr std::uint64_t episode = 3;
}  // namespace streams

/// Trains a DQN on `base` slipped by config.challenge_eps (or by a level
/// redrawn per episode under domain randomization). Behaviour is
/// epsilon-greedy; every episode's states are recorded and padded with the
/// sink index (S) after termination.
inline TrainResult train_dqn(const TabularEMDP& base, const TrainConfig& cfg) {
    cfg.validate();
    require_valid(base);
    if (base.sink) throw std::invalid_argument("train_dqn expects the environment without an absorbing sink");
    const std::size_t S = base.num_states, A = base.num_actions, H = base.horizon;
    const StateId pad = S;
    const CounterRng root = CounterRng::from_keys({cfg.seed});

    TrainResult out;
    out.net = MlpQNet::initialized(S, A, cfg.regularizer, cfg.l2_lambda, root.split(streams::init), cfg.hidden_dim);
    out.log.visited = VisitedStates(H);
    if (cfg.episodes == 0) return out;

    const ActionRandomizer randomizer(base);
    std::vector<std::vector<Outcome>> rows;
    if (!cfg.domain_randomization) rows = randomizer.mixed_rows(cfg.challenge_eps);

    MlpQNet& net = out.net;
    std::vector<double> target_max = target_max_table(net);
    ReplayBuffer buffer(cfg.buffer_capacity, root.split(streams::replay));
    AdamState adam(net.parameters().size());
    TdWorkspace ws;
    ForwardCache act_cache;
    std::vector<Transition> batch;
    std::vector<StateId> visited(H);
    auto& log = out.log;
    log.snapshots.push_back({0, net});

    for (std::size_t e = 1; e <= cfg.episodes; ++e) {
        CounterRng rng = root.split(streams::episode).split(e);
        double level = cfg.challenge_eps;
        if (cfg.domain_randomization) {
            const auto& levels = *cfg.domain_randomization;
            level = levels[rng.below(levels.size())];
            rows = randomizer.mixed_rows(level);
        }
        const double explore = exploration_rate(e, cfg);
        StateId s = rrl::detail::sample_index(base.initial_dist, rng.uniform());
        double ret = 0.0;
        std::size_t h = 0;
        for (; h < H; ++h) {
            visited[h] = s;
            ActionId a;
            if (rng.uniform() < explore) {
                a = rng.below(A);
            } else {
                net.forward(s, act_cache);
                a = greedy_action(act_cache.output);
            }
            const auto& row = rows[s * A + a];
            const Outcome& o = row[rrl::detail::sample_outcome(row, rng.uniform())];
            buffer.push({s, a, o.reward, o.next_state, o.terminal});
            ret += o.reward;
            ++log.env_steps;
            if (log.env_steps >= cfg.warmup_steps && buffer.size() >= cfg.batch_size) {
                buffer.sample(cfg.batch_size, batch);
                td_update(net, target_max, batch, cfg.gamma, adam, cfg.optimizer, ws);
                ++log.gradient_steps;
                if (log.gradient_steps % cfg.target_update_period == 0) target_max = target_max_table(net);
            }
            if (o.terminal) {
                ++h;
                break;
            }
            s = o.next_state;
        }
        for (; h < H; ++h) visited[h] = pad;
        log.visited.add_episode(visited);
        log.returns.push_back(ret);
        log.challenge_eps.push_back(level);
        if (e % cfg.snapshot_every == 0 || e == cfg.episodes) {
            if (log.snapshots.back().episode != e) log.snapshots.push_back({e, net});
        }
        if (!net.finite()) throw std::runtime_error("train_dqn: non-finite parameters at episode " + std::to_string(e));
    }
    return out;
}

/// Stationary softmax policy of the network outputs. States at or beyond the
/// network's input range (the absorbing sink) get a uniform row.
inline TabularPolicy q_policy_from_net(const MlpQNet& net, double tau, std::size_t num_states = 0,
                                       std::size_t horizon = 1) {
    if (!(tau > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
    if (num_states == 0) num_states = net.inputs();
    TabularPolicy pi(horizon, num_states, net.outputs(), true);
    ForwardCache c;
    for (StateId s = 0; s < num_states; ++s) {
        auto row = pi.row(0, s);
        if (s < net.inputs()) {
            net.forward(s, c);
            softmax_row(c.output, tau, row);
        } else {
            std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(net.outputs()));
        }
    }
    return pi;
}

}  // namespace rrl::dqn
