#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace rrl;

namespace {

StateMetric line_metric(const std::vector<double>& pos) {
    StateMetric d(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i)
        for (std::size_t j = i + 1; j < pos.size(); ++j) d.set(i, j, std::abs(pos[i] - pos[j]));
    return d;
}

std::vector<double> random_positions(std::size_t n, CounterRng& rng) {
    std::vector<double> pos(n);
    for (auto& x : pos) x = 10.0 * rng.uniform();
    return pos;
}

}  // namespace

TEST(W1, TrivialCases) {
    const auto d = line_metric({0, 1, 2, 3});
    const StateDistribution mu{{0.1, 0.2, 0.3, 0.4}};
    EXPECT_EQ(w1_discrete(mu, mu, d), 0.0);
    EXPECT_EQ(w1_discrete(StateDistribution::point_mass(4, 0), StateDistribution::point_mass(4, 3), d), 3.0);
}

TEST(W1, HalfMassMovesTwoUnits) {
    const auto d = line_metric({0, 1, 2});
    const std::vector<double> mu{1.0, 0.0, 0.0}, nu{0.5, 0.0, 0.5};
    const double oracle_value = oracle::w1_simplex(mu, nu, [&](std::size_t a, std::size_t b) { return d(a, b); });
    EXPECT_NEAR(oracle_value, 1.0, 1e-12);
    EXPECT_NEAR(w1_discrete({mu}, {nu}, d), oracle_value, 1e-12);
}

TEST(W1, MatchesSimplexOracleOnGeneralMetrics) {
    CounterRng rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + rng.below(12);
        // Shortest-path closure of random edge weights is a metric.
        std::vector<std::vector<double>> g(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) g[i][j] = g[j][i] = 0.5 + 5.0 * rng.uniform();
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) g[i][j] = std::min(g[i][j], g[i][k] + g[k][j]);
        StateMetric d(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) d.set(i, j, g[i][j]);
        const auto mu = oracle::random_distribution(n, rng, 0.3);
        const auto nu = oracle::random_distribution(n, rng, 0.3);
        const auto sol = solve_transport({mu}, {nu}, d);
        const double ref = oracle::w1_simplex(mu, nu, [&](std::size_t a, std::size_t b) { return d(a, b); });
        EXPECT_NEAR(sol.cost, ref, 1e-9) << "trial " << trial;
        EXPECT_LE(sol.duality_gap(), 1e-9 * std::max(1.0, sol.cost));
    }
}

TEST(W1, MatchesClosedFormOnTheLine) {
    CounterRng rng(22);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + rng.below(60);
        const auto pos = random_positions(n, rng);
        const auto mu = oracle::random_distribution(n, rng, 0.5);
        const auto nu = oracle::random_distribution(n, rng, 0.5);
        EXPECT_NEAR(w1_discrete({mu}, {nu}, line_metric(pos)), oracle::w1_line(mu, nu, pos), 1e-9);
    }
}

TEST(W1, MetricAxioms) {
    CounterRng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.below(19);
        const auto d = line_metric(random_positions(n, rng));
        const StateDistribution a{oracle::random_distribution(n, rng, 0.4)};
        const StateDistribution b{oracle::random_distribution(n, rng, 0.4)};
        const StateDistribution c{oracle::random_distribution(n, rng, 0.4)};
        const double ab = w1_discrete(a, b, d), ba = w1_discrete(b, a, d);
        EXPECT_NEAR(ab, ba, 1e-12);
        EXPECT_EQ(w1_discrete(a, a, d), 0.0);
        EXPECT_LE(w1_discrete(a, c, d), ab + w1_discrete(b, c, d) + 1e-9);
        EXPECT_GE(ab, 0.0);
    }
}

TEST(W1, DualityGapOnLargeSupports) {
    CounterRng rng(24);
    const auto m = make_absorbing(build_taxi());
    for (int trial = 0; trial < 5; ++trial) {
        const auto mu = oracle::random_distribution(m.num_states, rng);
        const auto nu = oracle::random_distribution(m.num_states, rng);
        const auto sol = solve_transport({mu}, {nu}, m.metric);
        EXPECT_LE(sol.duality_gap(), 1e-9 * std::max(1.0, sol.cost));
        EXPECT_GT(sol.cost, 0.0);
    }
}

TEST(W1, RejectsBadInputs) {
    const auto d = line_metric({0, 1, 2});
    EXPECT_THROW(w1_discrete({{0.5, 0.5}}, {{0.2, 0.3, 0.5}}, d), ShapeError);
    EXPECT_THROW(w1_discrete({{0.5, 0.4, 0.0}}, {{0.2, 0.3, 0.5}}, d), std::invalid_argument);
    EXPECT_THROW(w1_discrete({{1.5, -0.5, 0.0}}, {{0.2, 0.3, 0.5}}, d), std::invalid_argument);
}

TEST(KernelShift, IdenticalAndZeroEps) {
    const auto m = make_absorbing(build_cliffwalking());
    EXPECT_EQ(w1_kernel_shift(m, m).value, 0.0);
    EXPECT_EQ(w1_kernel_shift(action_randomize(m, 0.0), m).value, 0.0);
}

TEST(KernelShift, MonotoneInChallengeLevel) {
    const auto m = make_absorbing(build_cliffwalking());
    const ActionRandomizer r(m);
    double prev = 0.0;
    for (double eps : challenge_levels()) {
        const auto shift = w1_kernel_shift(r(eps), m);
        EXPECT_GE(shift.value, prev - 1e-12) << eps;
        prev = shift.value;
        if (eps > 0) {
            EXPECT_GT(shift.value, 0.0);
        }
        // The argmax pair realises the reported value.
        const auto pa = r(eps).successor_distribution(shift.state, shift.action);
        const auto pb = m.successor_distribution(shift.state, shift.action);
        EXPECT_NEAR(w1_discrete({pa}, {pb}, m.metric), shift.value, 1e-12);
    }
}

TEST(KernelShift, ShapeMismatchThrows) {
    EXPECT_THROW(w1_kernel_shift(build_cliffwalking(), build_taxi()), ShapeError);
}

TEST(InitialShift, Cases) {
    const auto m = make_absorbing(build_taxi());
    EXPECT_EQ(w1_initial_shift(m, action_randomize(m, 0.7)), 0.0);
    auto a = build_cliffwalking(), b = build_cliffwalking();
    a.initial_dist.assign(48, 0.0);
    b.initial_dist.assign(48, 0.0);
    a.initial_dist[0] = 1.0;
    b.initial_dist[15] = 1.0;  // row 1, col 3: Manhattan distance 4
    EXPECT_EQ(w1_initial_shift(a, b), 4.0);
    EXPECT_EQ(w1_initial_shift(b, a), 4.0);
}

TEST(TotalVariation, Cases) {
    const std::vector<double> a{0.7, 0.3}, b{0.4, 0.6};
    EXPECT_DOUBLE_EQ(tv_distance(a, b), 0.3);
    EXPECT_EQ(tv_distance(a, a), 0.0);
    const std::vector<double> x{1, 0, 0}, y{0, 0, 1};
    EXPECT_EQ(tv_distance(x, y), 1.0);
    EXPECT_THROW(tv_distance(a, x), ShapeError);
}

TEST(KullbackLeibler, Cases) {
    const std::vector<double> a{1.0, 0.0}, u{0.5, 0.5};
    EXPECT_DOUBLE_EQ(kl_divergence(a, u), std::log(2.0));
    EXPECT_EQ(kl_divergence(u, u), 0.0);
    EXPECT_TRUE(std::isinf(kl_divergence(u, a)));
    CounterRng rng(30);
    for (std::size_t n : {2u, 4u, 6u}) {
        const auto mu = oracle::random_distribution(n, rng, 0.3);
        const std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
        double entropy = 0.0;
        for (double p : mu)
            if (p > 0) entropy -= p * std::log(p);
        const double kl = kl_divergence(mu, uniform);
        EXPECT_NEAR(kl, std::log(static_cast<double>(n)) - entropy, 1e-12);
        EXPECT_LE(kl, std::log(static_cast<double>(n)) + 1e-12);
    }
}

TEST(Pinsker, HoldsOnRandomPairs) {
    CounterRng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(10);
        const auto mu = oracle::random_distribution(n, rng, 0.2);
        const auto nu = oracle::random_distribution(n, rng);
        EXPECT_LE(tv_distance(mu, nu), std::sqrt(kl_divergence(mu, nu) / 2.0) + 1e-12);
    }
}

TEST(Rademacher, SingletonFamilyIsCentered) {
    CounterRng rng(40);
    std::vector<double> f(10);
    for (auto& x : f) x = rng.uniform() * 4 - 2;
    std::vector<StateId> states(200);
    for (auto& s : states) s = rng.below(10);
    const auto est = empirical_rademacher({f}, states, 400, 9);
    for (double x : est.per_draw) EXPECT_EQ(x, 0.0);
    EXPECT_LE(std::abs(est.mean), 3.0 * est.std_error);
}

TEST(Rademacher, MatchesExhaustiveSignEnumeration) {
    // Exact E_sigma sup_f over all 2^T sign vectors for small T.
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        CounterRng rng(60 + seed);
        const std::size_t T = 12, n = 6;
        std::vector<std::vector<double>> fam(4, std::vector<double>(n));
        for (auto& f : fam)
            for (auto& x : f) x = 10.0 * rng.uniform() - 5.0;
        std::vector<StateId> states(T);
        for (auto& s : states) s = rng.below(n);
        double exact = 0.0;
        for (std::uint64_t bits = 0; bits < (1u << T); ++bits) {
            double sup = -std::numeric_limits<double>::infinity();
            for (const auto& f : fam) {
                double acc = 0.0;
                for (std::size_t t = 0; t < T; ++t) acc += ((bits >> t) & 1 ? 1.0 : -1.0) * f[states[t]];
                sup = std::max(sup, acc);
            }
            exact += sup / static_cast<double>(T);
        }
        exact /= static_cast<double>(1u << T);
        const auto est = empirical_rademacher(fam, states, 4000, seed);
        EXPECT_GT(est.std_error, 0.0);
        EXPECT_LE(std::abs(est.mean - exact), 3.0 * est.std_error) << seed << " exact " << exact;
    }
}

TEST(Rademacher, SymmetricPairOnOneStateIsOne) {
    const std::vector<StateId> states{0};
    const auto est = empirical_rademacher({{1.0}, {-1.0}}, states, 50, 3);
    for (double x : est.per_draw) EXPECT_EQ(x, 1.0);
    EXPECT_EQ(est.mean, 1.0);
    EXPECT_EQ(est.std_error, 0.0);
}

TEST(Rademacher, NegationAndInclusion) {
    CounterRng rng(41);
    std::vector<std::vector<double>> fam;
    for (int k = 0; k < 4; ++k) {
        std::vector<double> f(12);
        for (auto& x : f) x = rng.uniform() - 0.5;
        fam.push_back(f);
        for (auto& x : f) x = -x;
        fam.push_back(f);
    }
    std::vector<StateId> states(300);
    for (auto& s : states) s = rng.below(12);
    auto negated = fam;
    for (auto& f : negated)
        for (auto& x : f) x = -x;
    const auto a = empirical_rademacher(fam, states, 100, 5);
    const auto b = empirical_rademacher(negated, states, 100, 5);
    for (std::size_t k = 0; k < 100; ++k) EXPECT_NEAR(a.per_draw[k], b.per_draw[k], 1e-12);
    const std::vector<std::vector<double>> subset(fam.begin(), fam.begin() + 3);
    const auto c = empirical_rademacher(subset, states, 100, 5);
    for (std::size_t k = 0; k < 100; ++k) EXPECT_LE(c.per_draw[k], a.per_draw[k] + 1e-15);
}

TEST(Rademacher, SnapshotFamilyIsBounded) {
    // Value slices of a few differently-horizoned optimal solves on visited cliff states.
    const auto m = make_absorbing(build_cliffwalking());
    std::vector<std::vector<double>> fam;
    double bound = 0.0;
    for (std::size_t H : {13u, 20u, 40u, 70u, 100u}) {
        const auto q = backward_induction(m.with_horizon(H));
        std::vector<double> f(49);
        for (StateId s = 0; s < 49; ++s) bound = std::max(bound, std::abs(f[s] = q.value(0, s)));
        fam.push_back(f);
    }
    const auto pi = greedy_policy(backward_induction(m));
    std::vector<StateId> states;
    for (std::uint64_t e = 0; e < 5; ++e)
        for (const auto& st : sample_episode(action_randomize(m, 0.3), pi, e).steps) states.push_back(st.state);
    const auto est = empirical_rademacher(fam, states, 200, 11);
    for (double x : est.per_draw) EXPECT_GE(x, 0.0);
    EXPECT_LE(est.mean, bound);
}

TEST(Rademacher, SameSeedReproducesAndErrorsAreReported) {
    const std::vector<StateId> states{0, 1, 1, 2};
    const std::vector<std::vector<double>> fam{{1, 2, 3}, {3, 2, 1}};
    EXPECT_EQ(empirical_rademacher(fam, states, 20, 7).per_draw, empirical_rademacher(fam, states, 20, 7).per_draw);
    EXPECT_THROW(empirical_rademacher({}, states, 5, 1), std::invalid_argument);
    EXPECT_THROW(empirical_rademacher(fam, {}, 5, 1), std::invalid_argument);
    EXPECT_THROW(empirical_rademacher(fam, states, 0, 1), std::invalid_argument);
}
