#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "rrl/emdp.hpp"
#include "rrl/random.hpp"

namespace rrl {

/// Exact optimal transport result for one pair of distributions.
///
/// `dual_objective` is evaluated from potentials that are feasible by
/// construction, so `cost - dual_objective` is a certified optimality gap.
struct TransportSolution {
    double cost = 0.0;
    double dual_objective = 0.0;
    std::size_t augmentations = 0;
    std::size_t supply_points = 0;
    std::size_t demand_points = 0;

    [[nodiscard]] double duality_gap() const noexcept { return std::abs(cost - dual_objective); }
};

namespace detail {

inline void require_distribution(std::span<const double> p, const char* what) {
    double total = 0.0;
    for (double x : p) {
        if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative or NaN probability");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": distribution is not normalized (sum " +
                                    std::to_string(total) + ")");
}

/// Successive shortest augmenting paths on the bipartite transport graph.
/// Dense Dijkstra with node potentials; arcs supply->demand are uncapacitated.
class TransportSolver {
public:
    TransportSolver(std::vector<double> supply, std::vector<double> demand, std::vector<double> cost)
        : n_(supply.size()), m_(demand.size()), supply_(std::move(supply)), demand_(std::move(demand)),
          cost_(std::move(cost)), flow_(n_ * m_, 0.0) {}

    TransportSolution solve() {
        const std::size_t src = n_ + m_;
        const std::size_t snk = src + 1;
        const std::size_t nodes = snk + 1;
        const double inf = std::numeric_limits<double>::infinity();
        std::vector<double> pot(nodes, 0.0), dist(nodes);
        std::vector<std::size_t> parent(nodes);
        std::vector<char> done(nodes);
        TransportSolution out;
        out.supply_points = n_;
        out.demand_points = m_;

        auto relax = [&](std::size_t u, std::size_t v, double c) {
            const double rc = std::max(0.0, c + pot[u] - pot[v]);
            if (dist[u] + rc < dist[v]) {
                dist[v] = dist[u] + rc;
                parent[v] = u;
            }
        };

        while (true) {
            std::fill(dist.begin(), dist.end(), inf);
            std::fill(done.begin(), done.end(), 0);
            dist[src] = 0.0;
            while (true) {
                std::size_t u = nodes;
                double best = inf;
                for (std::size_t v = 0; v < nodes; ++v)
                    if (!done[v] && dist[v] < best) {
                        best = dist[v];
                        u = v;
                    }
                if (u == nodes || u == snk) break;
                done[u] = 1;
                if (u == src) {
                    for (std::size_t i = 0; i < n_; ++i)
                        if (supply_[i] > 0.0) relax(src, i, 0.0);
                } else if (u < n_) {
                    const double* c = cost_.data() + u * m_;
                    for (std::size_t j = 0; j < m_; ++j)
                        if (!done[n_ + j]) relax(u, n_ + j, c[j]);
                } else {
                    const std::size_t j = u - n_;
                    if (demand_[j] > 0.0) relax(u, snk, 0.0);
                    for (std::size_t i = 0; i < n_; ++i)
                        if (flow_[i * m_ + j] > 0.0 && !done[i]) relax(u, i, -cost_[i * m_ + j]);
                }
            }
            if (dist[snk] == inf) break;
            for (std::size_t v = 0; v < nodes; ++v) pot[v] += std::min(dist[v], dist[snk]);

            // Bottleneck along the path, then push.
            double delta = inf;
            for (std::size_t v = snk; v != src; v = parent[v]) {
                const std::size_t u = parent[v];
                if (u == src) delta = std::min(delta, supply_[v]);
                else if (v == snk) delta = std::min(delta, demand_[u - n_]);
                else if (u >= n_) delta = std::min(delta, flow_[v * m_ + (u - n_)]);
            }
            for (std::size_t v = snk; v != src; v = parent[v]) {
                const std::size_t u = parent[v];
                if (u == src) supply_[v] = supply_[v] == delta ? 0.0 : supply_[v] - delta;
                else if (v == snk) demand_[u - n_] = demand_[u - n_] == delta ? 0.0 : demand_[u - n_] - delta;
                else if (u < n_) flow_[u * m_ + (v - n_)] += delta;
                else {
                    double& f = flow_[v * m_ + (u - n_)];
                    f = f == delta ? 0.0 : f - delta;
                }
            }
            ++out.augmentations;
        }

        for (std::size_t k = 0; k < n_ * m_; ++k) out.cost += flow_[k] * cost_[k];
        // Demand potentials from the solver; supply potentials tightened so
        // that u_i + v_j <= c_ij holds exactly.
        std::vector<double> v(m_);
        for (std::size_t j = 0; j < m_; ++j) v[j] = pot[n_ + j];
        out.dual_objective = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            double u = inf;
            for (std::size_t j = 0; j < m_; ++j) u = std::min(u, cost_[i * m_ + j] - v[j]);
            out.dual_objective += original_supply_[i] * u;
        }
        for (std::size_t j = 0; j < m_; ++j) out.dual_objective += original_demand_[j] * v[j];
        return out;
    }

    void remember_marginals() {
        original_supply_ = supply_;
        original_demand_ = demand_;
    }

private:
    std::size_t n_, m_;
    std::vector<double> supply_, demand_, cost_, flow_;
    std::vector<double> original_supply_, original_demand_;
};

}  // namespace detail

/// Exact W1 between two distributions on a finite metric space.
///
/// Mass shared by both distributions stays in place (valid for any metric
/// cost), so only the positive and negative parts of mu - nu are transported.
template <class Distance>
TransportSolution solve_transport(std::span<const double> mu, std::span<const double> nu, Distance&& distance) {
    if (mu.size() != nu.size()) throw ShapeError("w1: distributions have different dimensions");
    detail::require_distribution(mu, "w1 first argument");
    detail::require_distribution(nu, "w1 second argument");
    std::vector<std::size_t> src_idx, dst_idx;
    std::vector<double> supply, demand;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double diff = mu[k] - nu[k];
        if (diff > 0.0) {
            src_idx.push_back(k);
            supply.push_back(diff);
        } else if (diff < 0.0) {
            dst_idx.push_back(k);
            demand.push_back(-diff);
        }
    }
    if (src_idx.empty() || dst_idx.empty()) return {};
    std::vector<double> cost(src_idx.size() * dst_idx.size());
    for (std::size_t i = 0; i < src_idx.size(); ++i)
        for (std::size_t j = 0; j < dst_idx.size(); ++j) cost[i * dst_idx.size() + j] = distance(src_idx[i], dst_idx[j]);
    detail::TransportSolver solver(std::move(supply), std::move(demand), std::move(cost));
    solver.remember_marginals();
    return solver.solve();
}

inline TransportSolution solve_transport(const StateDistribution& mu, const StateDistribution& nu,
                                         const StateMetric& metric) {
    if (metric.size() != mu.size()) throw ShapeError("w1: metric does not match distribution dimension");
    return solve_transport(std::span<const double>(mu.probs), std::span<const double>(nu.probs),
                           [&](std::size_t a, std::size_t b) { return metric(a, b); });
}

inline double w1_discrete(const StateDistribution& mu, const StateDistribution& nu, const StateMetric& metric) {
    return solve_transport(mu, nu, metric).cost;
}

struct KernelShift {
    double value = 0.0;
    StateId state = 0;
    ActionId action = 0;
};

namespace detail {

inline void require_comparable(const TabularEMDP& a, const TabularEMDP& b) {
    if (a.num_states != b.num_states || a.num_actions != b.num_actions)
        throw ShapeError("EMDPs differ in state or action count");
    if (!(a.metric == b.metric)) throw ShapeError("EMDPs use different state metrics");
}

}  // namespace detail

/// sup_{s,a} W1(p_a(.|s,a), p_b(.|s,a)) together with the maximizing pair.
inline KernelShift w1_kernel_shift(const TabularEMDP& m_a, const TabularEMDP& m_b) {
    detail::require_comparable(m_a, m_b);
    KernelShift best;
    std::vector<StateId> support;
    std::vector<double> pa, pb;
    for (StateId s = 0; s < m_a.num_states; ++s) {
        for (ActionId a = 0; a < m_a.num_actions; ++a) {
            support.clear();
            for (const auto& o : m_a.row(s, a)) support.push_back(o.next_state);
            for (const auto& o : m_b.row(s, a)) support.push_back(o.next_state);
            std::sort(support.begin(), support.end());
            support.erase(std::unique(support.begin(), support.end()), support.end());
            pa.assign(support.size(), 0.0);
            pb.assign(support.size(), 0.0);
            auto index = [&](StateId x) {
                return static_cast<std::size_t>(std::lower_bound(support.begin(), support.end(), x) - support.begin());
            };
            for (const auto& o : m_a.row(s, a)) pa[index(o.next_state)] += o.probability;
            for (const auto& o : m_b.row(s, a)) pb[index(o.next_state)] += o.probability;
            const double w = solve_transport(std::span<const double>(pa), std::span<const double>(pb),
                                             [&](std::size_t i, std::size_t j) {
                                                 return m_a.metric(support[i], support[j]);
                                             })
                                 .cost;
            if (w > best.value) best = {w, s, a};
        }
    }
    return best;
}

inline double w1_initial_shift(const TabularEMDP& m_a, const TabularEMDP& m_b) {
    detail::require_comparable(m_a, m_b);
    return w1_discrete({m_a.initial_dist}, {m_b.initial_dist}, m_a.metric);
}

/// Standard total variation: half the L1 distance.
inline double tv_distance(std::span<const double> mu, std::span<const double> nu) {
    if (mu.size() != nu.size()) throw ShapeError("tv_distance: dimension mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) total += std::abs(mu[i] - nu[i]);
    return 0.5 * total;
}

/// KL(mu || nu) with 0 log 0 = 0; +infinity when mu is not absolutely
/// continuous with respect to nu.
inline double kl_divergence(std::span<const double> mu, std::span<const double> nu) {
    if (mu.size() != nu.size()) throw ShapeError("kl_divergence: dimension mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu[i] == 0.0) continue;
        if (nu[i] == 0.0) return std::numeric_limits<double>::infinity();
        total += mu[i] * std::log(mu[i] / nu[i]);
    }
    return total;
}

struct RademacherEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<double> per_draw;
};

/// Monte-Carlo estimate of (1/T) E_sigma sup_f sum_t sigma_t f(s_t) over a
/// finite family of state functions. Draw k uses sign stream k of `seed`, so
/// two families evaluated with the same seed see the same sign vectors.
/// Each draw is antithetic: it averages the sup under sigma and under -sigma,
/// which is (max_f - min_f) / 2T and therefore never negative.
inline RademacherEstimate empirical_rademacher(const std::vector<std::vector<double>>& family,
                                               std::span<const StateId> states, std::size_t draws,
                                               std::uint64_t seed) {
    if (family.empty()) throw std::invalid_argument("empirical_rademacher: empty function family");
    if (states.empty()) throw std::invalid_argument("empirical_rademacher: empty state sample");
    if (draws == 0) throw std::invalid_argument("empirical_rademacher: need at least one draw");
    const std::size_t dim = family.front().size();
    for (const auto& f : family)
        if (f.size() != dim) throw ShapeError("empirical_rademacher: functions have different domains");
    // Sum_t sigma_t f(s_t) = sum_s f(s) * c_s with c_s the signed visit count.
    std::vector<StateId> distinct(states.begin(), states.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (StateId s : distinct)
        if (s >= dim) throw std::out_of_range("empirical_rademacher: state outside function domain");
    std::vector<std::size_t> slot(dim, 0);
    for (std::size_t k = 0; k < distinct.size(); ++k) slot[distinct[k]] = k;
    std::vector<double> signed_counts(distinct.size());

    const CounterRng root(seed);
    const double inv_t = 1.0 / static_cast<double>(states.size());
    RademacherEstimate est;
    est.per_draw.reserve(draws);
    for (std::size_t k = 0; k < draws; ++k) {
        CounterRng rng = root.split(k);
        std::fill(signed_counts.begin(), signed_counts.end(), 0.0);
        std::uint64_t bits = 0;
        for (std::size_t t = 0; t < states.size(); ++t) {
            if (t % 64 == 0) bits = rng();
            signed_counts[slot[states[t]]] += (bits & 1) ? 1.0 : -1.0;
            bits >>= 1;
        }
        double hi = -std::numeric_limits<double>::infinity(), lo = -hi;
        for (const auto& f : family) {
            double acc = 0.0;
            for (std::size_t i = 0; i < distinct.size(); ++i) acc += f[distinct[i]] * signed_counts[i];
            hi = std::max(hi, acc);
            lo = std::min(lo, acc);
        }
        est.per_draw.push_back(0.5 * (hi - lo) * inv_t);
    }
    est.mean = std::accumulate(est.per_draw.begin(), est.per_draw.end(), 0.0) / static_cast<double>(draws);
    if (draws > 1) {
        double ss = 0.0;
        for (double x : est.per_draw) ss += (x - est.mean) * (x - est.mean);
        est.std_error = std::sqrt(ss / static_cast<double>(draws - 1) / static_cast<double>(draws));
    }
    return est;
}

}  // namespace rrl
