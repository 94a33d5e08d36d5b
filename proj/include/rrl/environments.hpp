#pragma once

#include <array>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "rrl/emdp.hpp"

namespace rrl {

inline constexpr std::size_t kCliffRows = 4;
inline constexpr std::size_t kCliffCols = 12;
inline constexpr std::size_t kCliffDefaultHorizon = 100;
inline constexpr StateId kCliffStart = 36;
inline constexpr StateId kCliffGoal = 47;

inline constexpr std::size_t kTaxiSize = 5;
inline constexpr std::size_t kTaxiDefaultHorizon = 200;
inline constexpr std::size_t kTaxiInTaxi = 4;

/// Gridworld on a 4x12 board. Actions: 0 up, 1 right, 2 down, 3 left.
/// Every move costs 1; walking into the cliff costs 100 and teleports back to
/// the start without ending the episode; reaching the goal is terminal.
inline TabularEMDP build_cliffwalking(std::size_t horizon = kCliffDefaultHorizon) {
    constexpr std::array<int, 4> dr{-1, 0, 1, 0};
    constexpr std::array<int, 4> dc{0, 1, 0, -1};
    const std::size_t n = kCliffRows * kCliffCols;
    TabularEMDP m(n, 4, horizon);
    for (std::size_t r = 0; r < kCliffRows; ++r) {
        for (std::size_t c = 0; c < kCliffCols; ++c) {
            const StateId s = r * kCliffCols + c;
            for (ActionId a = 0; a < 4; ++a) {
                const int nr = std::clamp(static_cast<int>(r) + dr[a], 0, static_cast<int>(kCliffRows) - 1);
                const int nc = std::clamp(static_cast<int>(c) + dc[a], 0, static_cast<int>(kCliffCols) - 1);
                const StateId next = static_cast<StateId>(nr) * kCliffCols + static_cast<StateId>(nc);
                const bool cliff = nr == 3 && nc >= 1 && nc <= 10;
                if (cliff)
                    m.row(s, a) = {Outcome{1.0, kCliffStart, -100.0, false}};
                else
                    m.row(s, a) = {Outcome{1.0, next, -1.0, next == kCliffGoal}};
            }
        }
    }
    m.initial_dist[kCliffStart] = 1.0;
    for (StateId i = 0; i < n; ++i)
        for (StateId j = i + 1; j < n; ++j) {
            const auto ri = static_cast<int>(i / kCliffCols), ci = static_cast<int>(i % kCliffCols);
            const auto rj = static_cast<int>(j / kCliffCols), cj = static_cast<int>(j % kCliffCols);
            m.metric.set(i, j, std::abs(ri - rj) + std::abs(ci - cj));
        }
    return m;
}

struct TaxiState {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t passenger = 0;  // 0..3 landmark, 4 in taxi
    std::size_t destination = 0;

    friend bool operator==(const TaxiState&, const TaxiState&) = default;
};

inline constexpr StateId taxi_encode(const TaxiState& t) noexcept {
    return ((t.row * kTaxiSize + t.col) * 5 + t.passenger) * 4 + t.destination;
}

inline constexpr TaxiState taxi_decode(StateId s) noexcept {
    TaxiState t;
    t.destination = s % 4;
    s /= 4;
    t.passenger = s % 5;
    s /= 5;
    t.col = s % kTaxiSize;
    t.row = s / kTaxiSize;
    return t;
}

namespace detail {

// Walls of the 5x5 taxi map; ':' marks an open side.
inline constexpr std::array<std::string_view, 7> kTaxiMap{
    "+---------+", "|R: | : :G|", "| : | : : |", "| : : : : |", "| | : | : |", "|Y| : |B: |", "+---------+",
};

inline constexpr std::array<std::pair<std::size_t, std::size_t>, 4> kTaxiLandmarks{{{0, 0}, {0, 4}, {4, 0}, {4, 3}}};

inline int taxi_landmark_at(std::size_t r, std::size_t c) {
    for (std::size_t i = 0; i < kTaxiLandmarks.size(); ++i)
        if (kTaxiLandmarks[i].first == r && kTaxiLandmarks[i].second == c) return static_cast<int>(i);
    return -1;
}

}  // namespace detail

/// 5x5 taxi task. Actions: 0 south, 1 north, 2 east, 3 west, 4 pickup,
/// 5 dropoff. Rewards: -1 per step, +20 for the terminal dropoff, -10 for an
/// illegal pickup or dropoff. Starts are uniform over the 300 states whose
/// passenger waits at a landmark other than the destination.
inline TabularEMDP build_taxi(std::size_t horizon = kTaxiDefaultHorizon) {
    const std::size_t n = 500;
    TabularEMDP m(n, 6, horizon);
    std::size_t starts = 0;
    for (StateId s = 0; s < n; ++s) {
        const TaxiState t = taxi_decode(s);
        if (t.passenger < 4 && t.passenger != t.destination) {
            m.initial_dist[s] = 1.0;
            ++starts;
        }
        for (ActionId a = 0; a < 6; ++a) {
            TaxiState nt = t;
            double reward = -1.0;
            bool done = false;
            const int here = detail::taxi_landmark_at(t.row, t.col);
            switch (a) {
                case 0: nt.row = std::min(t.row + 1, kTaxiSize - 1); break;
                case 1: nt.row = t.row == 0 ? 0 : t.row - 1; break;
                case 2:
                    if (detail::kTaxiMap[1 + t.row][2 * t.col + 2] == ':') nt.col = std::min(t.col + 1, kTaxiSize - 1);
                    break;
                case 3:
                    if (detail::kTaxiMap[1 + t.row][2 * t.col] == ':') nt.col = t.col == 0 ? 0 : t.col - 1;
                    break;
                case 4:
                    if (t.passenger < 4 && here == static_cast<int>(t.passenger))
                        nt.passenger = kTaxiInTaxi;
                    else
                        reward = -10.0;
                    break;
                case 5:
                    if (t.passenger == kTaxiInTaxi && here == static_cast<int>(t.destination)) {
                        nt.passenger = t.destination;
                        done = true;
                        reward = 20.0;
                    } else if (t.passenger == kTaxiInTaxi && here >= 0) {
                        nt.passenger = static_cast<std::size_t>(here);
                    } else {
                        reward = -10.0;
                    }
                    break;
            }
            m.row(s, a) = {Outcome{1.0, taxi_encode(nt), reward, done}};
        }
    }
    for (auto& p : m.initial_dist) p /= static_cast<double>(starts);
    for (StateId i = 0; i < n; ++i) {
        const TaxiState a = taxi_decode(i);
        for (StateId j = i + 1; j < n; ++j) {
            const TaxiState b = taxi_decode(j);
            const double d = std::abs(static_cast<int>(a.row) - static_cast<int>(b.row)) +
                             std::abs(static_cast<int>(a.col) - static_cast<int>(b.col)) +
                             (a.passenger != b.passenger ? 1.0 : 0.0) + (a.destination != b.destination ? 1.0 : 0.0);
            m.metric.set(i, j, d);
        }
    }
    return m;
}

inline TabularEMDP build_environment(std::string_view name, std::size_t horizon = 0) {
    if (name == "cliffwalking") return build_cliffwalking(horizon ? horizon : kCliffDefaultHorizon);
    if (name == "taxi") return build_taxi(horizon ? horizon : kTaxiDefaultHorizon);
    throw std::invalid_argument("unknown environment '" + std::string(name) + "' (expected taxi or cliffwalking)");
}

/// Slip-kernel construction: with probability eps the executed action is
/// replaced by a uniformly random one. The action-averaged kernel is cached so
/// that repeated rebuilds (domain randomization) only redo the mixing.
class ActionRandomizer {
public:
    explicit ActionRandomizer(const TabularEMDP& base) : base_(base), averaged_(base.num_states) {
        const double w = 1.0 / static_cast<double>(base.num_actions);
        for (StateId s = 0; s < base.num_states; ++s)
            for (ActionId a = 0; a < base.num_actions; ++a)
                for (const auto& o : base.row(s, a)) accumulate(averaged_[s], o, w * o.probability);
    }

    [[nodiscard]] const TabularEMDP& base() const noexcept { return base_; }
    [[nodiscard]] const std::vector<Outcome>& averaged(StateId s) const { return averaged_[s]; }

    /// Mixed kernel rows (1 - eps) p(.|s,a) + eps pbar(.|s), indexed s * A + a.
    [[nodiscard]] std::vector<std::vector<Outcome>> mixed_rows(double eps) const {
        if (!(eps >= 0.0 && eps <= 1.0))
            throw std::invalid_argument("action randomization probability must lie in [0, 1], got " +
                                        std::to_string(eps));
        std::vector<std::vector<Outcome>> rows(base_.transitions.size());
        for (StateId s = 0; s < base_.num_states; ++s) {
            for (ActionId a = 0; a < base_.num_actions; ++a) {
                auto& row = rows[s * base_.num_actions + a];
                if (base_.sink && s == *base_.sink) {
                    row = base_.row(s, a);  // already action-independent
                    continue;
                }
                row.reserve(base_.row(s, a).size() + averaged_[s].size());
                for (const auto& o : base_.row(s, a)) accumulate(row, o, (1.0 - eps) * o.probability);
                if (eps > 0.0)
                    for (const auto& o : averaged_[s]) accumulate(row, o, eps * o.probability);
            }
        }
        return rows;
    }

    [[nodiscard]] TabularEMDP operator()(double eps) const {
        auto rows = mixed_rows(eps);
        TabularEMDP out = base_;
        out.transitions = std::move(rows);
        return out;
    }

private:
    static void accumulate(std::vector<Outcome>& row, const Outcome& o, double mass) {
        for (auto& e : row) {
            if (e.next_state == o.next_state && e.reward == o.reward && e.terminal == o.terminal) {
                e.probability += mass;
                return;
            }
        }
        row.push_back(Outcome{mass, o.next_state, o.reward, o.terminal});
    }

    TabularEMDP base_;
    std::vector<std::vector<Outcome>> averaged_;
};

inline TabularEMDP action_randomize(const TabularEMDP& m, double eps) { return ActionRandomizer(m)(eps); }

/// Training slip probabilities of the environment-shift sweep; 0 is the
/// deployment environment itself.
inline std::vector<double> challenge_levels() { return {0.0, 0.1, 0.3, 0.5, 0.7}; }

/// Fixed training slip probability of the regularization and domain
/// randomization comparisons.
inline constexpr double kComparisonChallenge = 0.25;

}  // namespace rrl
