#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "rrl/rrl.hpp"

namespace oracle {

using rrl::ActionId;
using rrl::CounterRng;
using rrl::StateId;

/// Random EMDP with up to `max_succ` successors per (s,a), random rewards,
/// a random initial distribution and a random Euclidean metric on the line.
inline rrl::TabularEMDP random_emdp(std::size_t S, std::size_t A, std::size_t H, std::uint64_t seed,
                                    std::size_t max_succ = 3, bool terminals = false) {
    CounterRng rng(seed);
    rrl::TabularEMDP m(S, A, H);
    for (StateId s = 0; s < S; ++s)
        for (ActionId a = 0; a < A; ++a) {
            const std::size_t k = 1 + rng.below(std::min(max_succ, S));
            std::vector<double> w(k);
            double total = 0.0;
            for (auto& x : w) total += (x = 0.1 + rng.uniform());
            auto& row = m.row(s, a);
            for (std::size_t i = 0; i < k; ++i) {
                const bool term = terminals && rng.uniform() < 0.15;
                row.push_back({w[i] / total, rng.below(S), std::round(20.0 * rng.uniform() - 10.0) / 4.0, term});
            }
            double sum = 0.0;
            for (std::size_t i = 0; i + 1 < k; ++i) sum += row[i].probability;
            row.back().probability = 1.0 - sum;
        }
    double total = 0.0;
    for (auto& p : m.initial_dist) total += (p = rng.uniform());
    for (auto& p : m.initial_dist) p /= total;
    std::vector<double> pos(S);
    for (auto& x : pos) x = std::round(rng.uniform() * 1000.0) / 100.0;
    for (StateId i = 0; i < S; ++i)
        for (StateId j = i + 1; j < S; ++j) m.metric.set(i, j, std::max(0.25, std::abs(pos[i] - pos[j])));
    return m;
}

inline std::vector<double> random_distribution(std::size_t n, CounterRng& rng, double zero_prob = 0.0) {
    std::vector<double> p(n);
    double total = 0.0;
    for (auto& x : p) total += (x = rng.uniform() < zero_prob ? 0.0 : rng.uniform());
    if (total == 0.0) {
        p[rng.below(n)] = 1.0;
        return p;
    }
    for (auto& x : p) x /= total;
    return p;
}

inline rrl::TabularPolicy random_policy(std::size_t H, std::size_t S, std::size_t A, CounterRng& rng,
                                        bool stationary = false) {
    rrl::TabularPolicy pi(H, S, A, stationary);
    for (std::size_t h = 0; h < (stationary ? 1 : H); ++h)
        for (StateId s = 0; s < S; ++s) {
            auto p = random_distribution(A, rng, 0.3);
            std::copy(p.begin(), p.end(), pi.row(h, s).begin());
        }
    return pi;
}

/// Minimize c.x subject to A x = b, x >= 0 with a dense two-phase tableau and
/// Bland's rule. Returns the optimal objective.
inline double simplex_min(std::vector<std::vector<double>> A, std::vector<double> b, const std::vector<double>& c) {
    const std::size_t m = A.size(), n = c.size();
    for (std::size_t i = 0; i < m; ++i)
        if (b[i] < 0) {
            for (auto& x : A[i]) x = -x;
            b[i] = -b[i];
        }
    // Columns: n originals, m artificials, rhs.
    const std::size_t W = n + m + 1;
    std::vector<std::vector<double>> T(m + 1, std::vector<double>(W, 0.0));
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) T[i][j] = A[i][j];
        T[i][n + i] = 1.0;
        T[i][W - 1] = b[i];
        basis[i] = n + i;
    }
    const double eps = 1e-12;
    auto pivot = [&](std::size_t r, std::size_t col) {
        const double pv = T[r][col];
        for (auto& x : T[r]) x /= pv;
        for (std::size_t i = 0; i <= m; ++i)
            if (i != r && T[i][col] != 0.0) {
                const double f = T[i][col];
                for (std::size_t j = 0; j < W; ++j) T[i][j] -= f * T[r][j];
            }
        basis[r] = col;
    };
    auto run = [&](std::size_t allowed) {
        for (;;) {
            std::size_t col = W;
            for (std::size_t j = 0; j < allowed; ++j)
                if (T[m][j] < -eps) {
                    col = j;
                    break;
                }
            if (col == W) return;
            std::size_t row = m;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i)
                if (T[i][col] > eps) {
                    const double ratio = T[i][W - 1] / T[i][col];
                    if (ratio < best - eps || (std::abs(ratio - best) <= eps && basis[i] < basis[row])) {
                        best = ratio;
                        row = i;
                    }
                }
            if (row == m) throw std::runtime_error("simplex oracle: unbounded");
            pivot(row, col);
        }
    };
    // Phase I: minimize the sum of artificials.
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < W; ++j)
            if (j < n || j == W - 1) T[m][j] -= T[i][j];
    run(n + m);
    if (-T[m][W - 1] > 1e-9) throw std::runtime_error("simplex oracle: infeasible");
    // Drive remaining artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] >= n)
            for (std::size_t j = 0; j < n; ++j)
                if (std::abs(T[i][j]) > 1e-9) {
                    pivot(i, j);
                    break;
                }
    // Phase II objective row.
    std::fill(T[m].begin(), T[m].end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) T[m][j] = c[j];
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < n && c[basis[i]] != 0.0) {
            const double f = c[basis[i]];
            for (std::size_t j = 0; j < W; ++j) T[m][j] -= f * T[i][j];
        }
    run(n);
    return -T[m][W - 1];
}

/// W1 via the transport LP on the full supports.
inline double w1_simplex(const std::vector<double>& mu, const std::vector<double>& nu,
                         const std::function<double(std::size_t, std::size_t)>& d) {
    std::vector<std::size_t> I, J;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (mu[k] > 0) I.push_back(k);
        if (nu[k] > 0) J.push_back(k);
    }
    const std::size_t n = I.size() * J.size();
    std::vector<std::vector<double>> A;
    std::vector<double> b, c(n);
    for (std::size_t i = 0; i < I.size(); ++i) {
        std::vector<double> row(n, 0.0);
        for (std::size_t j = 0; j < J.size(); ++j) row[i * J.size() + j] = 1.0;
        A.push_back(row);
        b.push_back(mu[I[i]]);
    }
    for (std::size_t j = 0; j < J.size(); ++j) {
        std::vector<double> row(n, 0.0);
        for (std::size_t i = 0; i < I.size(); ++i) row[i * J.size() + j] = 1.0;
        A.push_back(row);
        b.push_back(nu[J[j]]);
    }
    for (std::size_t i = 0; i < I.size(); ++i)
        for (std::size_t j = 0; j < J.size(); ++j) c[i * J.size() + j] = d(I[i], J[j]);
    return simplex_min(A, b, c);
}

/// W1 on the real line: integral of |F - G| between sorted support points.
inline double w1_line(const std::vector<double>& mu, const std::vector<double>& nu, const std::vector<double>& pos) {
    std::vector<std::size_t> order(pos.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pos[a] < pos[b]; });
    double F = 0.0, G = 0.0, total = 0.0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        F += mu[order[k]];
        G += nu[order[k]];
        total += std::abs(F - G) * (pos[order[k + 1]] - pos[order[k]]);
    }
    return total;
}

/// Exact value of a deterministic non-stationary policy choice[h][s] from
/// every start state, by forward enumeration of successor distributions.
inline std::vector<double> policy_values(const rrl::TabularEMDP& m, const std::vector<std::vector<ActionId>>& choice) {
    std::vector<double> out(m.num_states);
    for (StateId s0 = 0; s0 < m.num_states; ++s0) {
        std::vector<double> d(m.num_states, 0.0);
        d[s0] = 1.0;
        double v = 0.0;
        for (std::size_t h = 0; h < m.horizon; ++h) {
            std::vector<double> next(m.num_states, 0.0);
            for (StateId s = 0; s < m.num_states; ++s) {
                if (d[s] == 0.0) continue;
                for (const auto& o : m.row(s, choice[h][s])) {
                    v += d[s] * o.probability * o.reward;
                    next[o.next_state] += d[s] * o.probability;
                }
            }
            d = std::move(next);
        }
        out[s0] = v;
    }
    return out;
}

/// max over all deterministic Markov policies of the value from each start
/// state (A^(S*H) candidates, so only for tiny instances).
inline std::vector<double> brute_force_optimal_values(const rrl::TabularEMDP& m) {
    const std::size_t slots = m.num_states * m.horizon;
    std::size_t total = 1;
    for (std::size_t k = 0; k < slots; ++k) total *= m.num_actions;
    std::vector<double> best(m.num_states, -std::numeric_limits<double>::infinity());
    std::vector<std::vector<ActionId>> choice(m.horizon, std::vector<ActionId>(m.num_states));
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (std::size_t h = 0; h < m.horizon; ++h)
            for (StateId s = 0; s < m.num_states; ++s) {
                choice[h][s] = c % m.num_actions;
                c /= m.num_actions;
            }
        const auto v = policy_values(m, choice);
        for (StateId s = 0; s < m.num_states; ++s) best[s] = std::max(best[s], v[s]);
    }
    return best;
}

/// Cheapest path cost (negated rewards) on a deterministic EMDP from `start`
/// into any terminal transition, by Dijkstra over the state graph.
inline double best_deterministic_return(const rrl::TabularEMDP& m, StateId start) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> cost(m.num_states, inf);
    using Item = std::pair<double, StateId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    cost[start] = 0.0;
    pq.push({0.0, start});
    double best = inf;
    while (!pq.empty()) {
        auto [c, s] = pq.top();
        pq.pop();
        if (c > cost[s]) continue;
        for (ActionId a = 0; a < m.num_actions; ++a) {
            const auto& o = m.row(s, a).front();
            const double nc = c - o.reward;
            if (o.terminal) {
                best = std::min(best, nc);
                continue;
            }
            if (nc < cost[o.next_state]) {
                cost[o.next_state] = nc;
                pq.push({nc, o.next_state});
            }
        }
    }
    return -best;
}

/// Upper alpha-quantile of the chi-square distribution (Wilson-Hilferty).
inline double chi_square_critical(std::size_t dof, double z_alpha = 2.3263478740408408) {
    const double k = static_cast<double>(dof);
    const double t = 1.0 - 2.0 / (9.0 * k) + z_alpha * std::sqrt(2.0 / (9.0 * k));
    return k * t * t * t;
}

/// Naive forward pass of the Q-network from explicit effective weights.
inline std::vector<double> naive_forward(const rrl::dqn::MlpQNet& net, StateId s) {
    const auto& L = net.layout();
    const auto p = net.parameters();
    const std::size_t I = L.inputs, Hd = L.hidden, O = L.outputs;
    const auto reg = net.regularizer();
    std::vector<std::vector<double>> W1(Hd, std::vector<double>(I)), W2(O, std::vector<double>(Hd));
    for (std::size_t j = 0; j < Hd; ++j) {
        double n = 0.0;
        for (std::size_t i = 0; i < I; ++i) n += p[L.w1 + j * I + i] * p[L.w1 + j * I + i];
        for (std::size_t i = 0; i < I; ++i)
            W1[j][i] = reg == rrl::dqn::Regularizer::weight_norm
                           ? (n > 0 ? p[L.g1 + j] * p[L.w1 + j * I + i] / std::sqrt(n) : 0.0)
                           : p[L.w1 + j * I + i];
    }
    for (std::size_t a = 0; a < O; ++a) {
        double n = 0.0;
        for (std::size_t j = 0; j < Hd; ++j) n += p[L.w2 + a * Hd + j] * p[L.w2 + a * Hd + j];
        for (std::size_t j = 0; j < Hd; ++j)
            W2[a][j] = reg == rrl::dqn::Regularizer::weight_norm
                           ? (n > 0 ? p[L.g2 + a] * p[L.w2 + a * Hd + j] / std::sqrt(n) : 0.0)
                           : p[L.w2 + a * Hd + j];
    }
    std::vector<double> x(I, 0.0);
    x[s] = 1.0;
    std::vector<double> z(Hd);
    for (std::size_t j = 0; j < Hd; ++j) {
        double acc = p[L.b1 + j];
        for (std::size_t i = 0; i < I; ++i) acc += W1[j][i] * x[i];
        z[j] = acc;
    }
    if (reg == rrl::dqn::Regularizer::layer_norm) {
        double mean = 0.0, var = 0.0;
        for (double v : z) mean += v;
        mean /= static_cast<double>(Hd);
        for (double v : z) var += (v - mean) * (v - mean);
        var /= static_cast<double>(Hd);
        for (std::size_t j = 0; j < Hd; ++j)
            z[j] = p[L.ln_gamma + j] * (z[j] - mean) / std::sqrt(var + rrl::dqn::kLayerNormEpsilon) + p[L.ln_beta + j];
    }
    for (auto& v : z) v = std::max(0.0, v);
    std::vector<double> out(O);
    for (std::size_t a = 0; a < O; ++a) {
        double acc = p[L.b2 + a];
        for (std::size_t j = 0; j < Hd; ++j) acc += W2[a][j] * z[j];
        out[a] = acc;
    }
    return out;
}

}  // namespace oracle
