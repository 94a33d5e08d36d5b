#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrl/divergences.hpp"
#include "rrl/emdp.hpp"
#include "rrl/solver.hpp"

namespace rrl {

inline constexpr double kDefaultSoftmaxTemperature = 1e-7;
inline constexpr double kDefaultDelta = 0.05;

/// Recorded training states s_h^t: T episodes of exactly H states each,
/// padded with the sink after termination.
class VisitedStates {
public:
    VisitedStates() = default;
    explicit VisitedStates(std::size_t horizon) : horizon_(horizon) {}

    void add_episode(std::span<const StateId> states) {
        if (states.size() != horizon_)
            throw ShapeError("visited states: episode has " + std::to_string(states.size()) + " states, expected " +
                             std::to_string(horizon_));
        flat_.insert(flat_.end(), states.begin(), states.end());
    }

    [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::size_t episodes() const noexcept { return horizon_ ? flat_.size() / horizon_ : 0; }
    [[nodiscard]] StateId at(std::size_t episode, std::size_t h) const { return flat_[episode * horizon_ + h]; }
    [[nodiscard]] std::span<const StateId> episode(std::size_t t) const {
        return {flat_.data() + t * horizon_, horizon_};
    }

    /// States at step h across all episodes.
    [[nodiscard]] std::vector<StateId> column(std::size_t h) const {
        std::vector<StateId> out(episodes());
        for (std::size_t t = 0; t < out.size(); ++t) out[t] = at(t, h);
        return out;
    }

    friend bool operator==(const VisitedStates&, const VisitedStates&) = default;

private:
    std::size_t horizon_ = 0;
    std::vector<StateId> flat_;
};

struct RiskProfile {
    std::vector<double> per_step;
    double total = 0.0;
};

namespace detail {

inline double policy_expectation(std::span<const double> probs, std::span<const double> q) {
    double v = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) v += probs[a] * q[a];
    return v;
}

inline double rational_expectation(std::span<const double> q, double tau) {
    std::vector<double> p(q.size());
    softmax_row(q, tau, p);
    return policy_expectation(p, q);
}

inline void require_policy_matches(const QTensor& q, const TabularPolicy& pi) {
    if (pi.num_states() != q.num_states() || pi.num_actions() != q.num_actions())
        throw ShapeError("policy shape " + std::to_string(pi.num_states()) + "x" + std::to_string(pi.num_actions()) +
                         " does not match Q shape " + std::to_string(q.num_states()) + "x" +
                         std::to_string(q.num_actions()));
}

/// (1/T) sum_t E_{a~pi} Q_h(s_h^t, a) for every h.
inline std::vector<double> empirical_means(const QTensor& q, const VisitedStates& visited, const TabularPolicy& pi) {
    const std::size_t H = q.horizon();
    std::vector<double> out(H, 0.0);
    const std::size_t T = visited.episodes();
    std::vector<double> per_state(q.num_states());
    std::vector<double> counts(q.num_states());
    for (std::size_t h = 0; h < H; ++h) {
        std::fill(counts.begin(), counts.end(), 0.0);
        for (std::size_t t = 0; t < T; ++t) counts[visited.at(t, h)] += 1.0;
        double acc = 0.0;
        for (StateId s = 0; s < q.num_states(); ++s)
            if (counts[s] > 0.0) acc += counts[s] * policy_expectation(pi.row(h, s), q.row(h, s));
        out[h] = acc / static_cast<double>(T);
    }
    return out;
}

inline std::vector<double> population_means(const QTensor& q, const std::vector<StateDistribution>& dists,
                                            const TabularPolicy& pi) {
    std::vector<double> out(q.horizon());
    for (std::size_t h = 0; h < q.horizon(); ++h) out[h] = expected_q_under(dists[h], pi, q, h);
    return out;
}

}  // namespace detail

/// pi-circle: softmax of the deployment optimal Q.
inline TabularPolicy rational_policy(const QTensor& q_deploy, double tau = kDefaultSoftmaxTemperature) {
    return softmax_policy(q_deploy, tau);
}

/// E_{a~pi_rational} Q_h(s,a) - E_{a~pi_h(.|s)} Q_h(s,a).
inline double rational_value_loss(const QTensor& q_deploy, std::size_t h, StateId s, const TabularPolicy& pi,
                                  double tau = kDefaultSoftmaxTemperature) {
    detail::require_policy_matches(q_deploy, pi);
    if (h >= q_deploy.horizon() || s >= q_deploy.num_states())
        throw std::out_of_range("rational_value_loss: (h, s) out of range");
    const auto q = q_deploy.row(h, s);
    return detail::rational_expectation(q, tau) - detail::policy_expectation(pi.row(h, s), q);
}

/// Per-step expected rational value loss under the deployment distribution
/// induced by the deployment-optimal policy, and its sum over the horizon.
inline RiskProfile expected_rational_value_risk(const TabularEMDP& m_deploy, const QTensor& q_deploy,
                                                const TabularPolicy& pi, double tau = kDefaultSoftmaxTemperature) {
    if (q_deploy.num_states() != m_deploy.num_states || q_deploy.horizon() != m_deploy.horizon)
        throw ShapeError("expected_rational_value_risk: Q does not belong to the deployment EMDP");
    detail::require_policy_matches(q_deploy, pi);
    const auto rational = rational_policy(q_deploy, tau);
    const auto dists = induced_state_distributions(m_deploy, rational);
    RiskProfile out;
    for (std::size_t h = 0; h < q_deploy.horizon(); ++h) {
        const double loss = expected_q_under(dists[h], rational, q_deploy, h) - expected_q_under(dists[h], pi, q_deploy, h);
        out.per_step.push_back(loss);
        out.total += loss;
    }
    return out;
}

/// Training-side average of per-step losses over the recorded episodes. The
/// rational reference maximizes the training Q.
inline RiskProfile empirical_rational_value_risk(const QTensor& q_train, const VisitedStates& visited,
                                                 const TabularPolicy& pi, double tau = kDefaultSoftmaxTemperature) {
    detail::require_policy_matches(q_train, pi);
    if (visited.horizon() != q_train.horizon())
        throw ShapeError("empirical_rational_value_risk: visited episodes are not horizon-length");
    if (visited.episodes() == 0) throw std::invalid_argument("empirical_rational_value_risk: no episodes");
    const auto rational = softmax_policy(q_train, tau);
    const auto ref = detail::empirical_means(q_train, visited, rational);
    const auto got = detail::empirical_means(q_train, visited, pi);
    RiskProfile out;
    for (std::size_t h = 0; h < ref.size(); ++h) {
        out.per_step.push_back(ref[h] - got[h]);
        out.total += ref[h] - got[h];
    }
    return out;
}

inline double rational_risk_gap(double expected_risk, double empirical_risk) {
    return std::abs(expected_risk - empirical_risk);
}

/// Everything about a (training, deployment) pair that does not depend on the
/// agent: exact optimal Q functions, optimal-policy state distributions and
/// the shift measurements. Both EMDPs are in absorbing form.
struct ShiftAnalysis {
    TabularEMDP train;
    TabularEMDP deploy;
    QTensor q_train;
    QTensor q_deploy;
    TabularPolicy optimal_train;   // also the training-rational policy
    TabularPolicy optimal_deploy;  // pi-circle
    std::vector<StateDistribution> d_train;
    std::vector<StateDistribution> d_deploy;
    double tau = kDefaultSoftmaxTemperature;
    double w1_initial = 0.0;
    KernelShift w1_kernel;
    double lipschitz_value = 0.0;   // L_s
    double lipschitz_kernel = 0.0;  // L_p, zero when the kernels coincide
    double value_range = 0.0;

    static ShiftAnalysis build(const TabularEMDP& train, const TabularEMDP& deploy,
                               double tau = kDefaultSoftmaxTemperature, bool measure_lp = true) {
        ShiftAnalysis a;
        a.train = make_absorbing(train);
        a.deploy = make_absorbing(deploy);
        if (a.train.horizon != a.deploy.horizon) throw ShapeError("training and deployment horizons differ");
        detail::require_comparable(a.train, a.deploy);
        a.tau = tau;
        a.q_train = backward_induction(a.train);
        a.q_deploy = backward_induction(a.deploy);
        a.optimal_train = softmax_policy(a.q_train, tau);
        a.optimal_deploy = softmax_policy(a.q_deploy, tau);
        a.d_train = induced_state_distributions(a.train, a.optimal_train);
        a.d_deploy = induced_state_distributions(a.deploy, a.optimal_deploy);
        a.w1_initial = w1_initial_shift(a.deploy, a.train);
        a.w1_kernel = w1_kernel_shift(a.deploy, a.train);
        a.lipschitz_value = std::max(estimate_Ls(a.q_train, a.train), estimate_Ls(a.q_deploy, a.deploy));
        if (measure_lp && a.w1_kernel.value > 0.0)
            a.lipschitz_kernel = std::max(estimate_Lp(a.train, a.deploy, a.optimal_train),
                                          estimate_Lp(a.train, a.deploy, a.optimal_deploy));
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const QTensor* q : {&a.q_train, &a.q_deploy})
            for (double x : q->data()) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        a.value_range = hi - lo;
        return a;
    }
};

struct PolicyTerms {
    std::string name;
    std::vector<double> extrinsic;  // |E_{D_h deploy} Q_deploy - E_{D_h train} Q_train| under the policy
    std::vector<double> intrinsic;  // |E_{D_h train} Q_train - (1/T) sum_t Q_train(s_h^t)|
};

/// Named policy entering the finite surrogate of the sup over policies.
struct NamedPolicy {
    std::string name;
    TabularPolicy policy;
};

/// Extrinsic and intrinsic gap terms for the learned policy, the rational
/// reference and any extra policies. Entry 0 is the learned policy and entry 1
/// the rational reference, which is evaluated against each Q's own maximizer.
inline std::vector<PolicyTerms> decomposition_terms(const ShiftAnalysis& env, const VisitedStates& visited,
                                                    const TabularPolicy& learned,
                                                    const std::vector<NamedPolicy>& extra = {}) {
    if (visited.horizon() != env.q_train.horizon()) throw ShapeError("decomposition_terms: horizon mismatch");
    auto terms_for = [&](std::string name, const TabularPolicy& deploy_pi, const TabularPolicy& train_pi) {
        detail::require_policy_matches(env.q_deploy, deploy_pi);
        detail::require_policy_matches(env.q_train, train_pi);
        const auto xd = detail::population_means(env.q_deploy, env.d_deploy, deploy_pi);
        const auto xt = detail::population_means(env.q_train, env.d_train, train_pi);
        const auto y = detail::empirical_means(env.q_train, visited, train_pi);
        PolicyTerms t{std::move(name), {}, {}};
        for (std::size_t h = 0; h < xd.size(); ++h) {
            t.extrinsic.push_back(std::abs(xd[h] - xt[h]));
            t.intrinsic.push_back(std::abs(xt[h] - y[h]));
        }
        return t;
    };
    std::vector<PolicyTerms> out;
    out.push_back(terms_for("learned", learned, learned));
    out.push_back(terms_for("rational", env.optimal_deploy, env.optimal_train));
    for (const auto& p : extra) out.push_back(terms_for(p.name, p.policy, p.policy));
    return out;
}

/// Sum over {learned, rational} and h of extrinsic + intrinsic terms; the
/// triangle inequality makes this an upper bound on |R - R_hat|.
inline double decomposition_rhs(const std::vector<PolicyTerms>& terms) {
    if (terms.size() < 2) throw std::invalid_argument("decomposition_rhs: learned and rational terms are required");
    double total = 0.0;
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t h = 0; h < terms[k].extrinsic.size(); ++h) total += terms[k].extrinsic[h] + terms[k].intrinsic[h];
    return total;
}

struct BoundConstants {
    double lipschitz_value = 0.0;   // L_s
    double lipschitz_kernel = 0.0;  // L_p
    double lipschitz_policy = 1.0;  // L_Pi, supplied
    std::size_t num_actions = 1;
    std::size_t horizon = 1;
    std::size_t episodes = 1;  // T
    double delta = kDefaultDelta;
    double value_range = 0.0;  // replaces the unit-reward range in the concentration term
};

struct Bounds {
    BoundConstants constants;
    double w1_initial = 0.0;
    double w1_kernel = 0.0;
    std::vector<double> rademacher;
    double rademacher_sum = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double policy_drift = 0.0;   // L_Pi H sqrt(log|A|)
    double concentration = 0.0;  // 3 H^2 sqrt(log(H/delta)/(2T))
    double extrinsic_bound = 0.0;
    double intrinsic_bound = 0.0;
    double total_bound = 0.0;
    double expected_risk_bound = 0.0;
    double asymptotic_bound = 0.0;
    // Same bounds with one factor of H in the concentration term replaced by
    // the measured value range (rewards outside [0, 1]).
    double concentration_range = 0.0;
    double intrinsic_bound_range = 0.0;
    double total_bound_range = 0.0;
};

inline Bounds evaluate_bounds(const BoundConstants& c, double w1_initial, double w1_kernel,
                              std::vector<double> rademacher_per_step) {
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    if (c.episodes < 1) throw std::invalid_argument("need at least one episode");
    if (c.lipschitz_value < 0.0 || c.lipschitz_kernel < 0.0 || c.lipschitz_policy < 0.0 || w1_initial < 0.0 ||
        w1_kernel < 0.0)
        throw std::invalid_argument("bound constants must be nonnegative");
    Bounds b;
    b.constants = c;
    b.w1_initial = w1_initial;
    b.w1_kernel = w1_kernel;
    b.rademacher = std::move(rademacher_per_step);
    for (double r : b.rademacher) b.rademacher_sum += r;
    const double H = static_cast<double>(c.horizon);
    const double T = static_cast<double>(c.episodes);
    const double Ls = c.lipschitz_value;
    const double Lp = c.lipschitz_kernel;
    const double root = std::sqrt(std::log(H / c.delta) / (2.0 * T));
    b.beta1 = 2.0 * Ls * H;
    b.beta2 = 2.0 * H * H * Ls * (Lp + 1.0);
    b.policy_drift = c.lipschitz_policy * H * std::sqrt(std::log(static_cast<double>(c.num_actions)));
    b.concentration = 3.0 * H * H * root;
    b.extrinsic_bound = Ls * H * w1_initial + H * H * Ls * (Lp + 1.0) * w1_kernel;
    b.intrinsic_bound = b.policy_drift + 2.0 * b.rademacher_sum + b.concentration;
    b.total_bound = b.beta1 * w1_initial + b.beta2 * w1_kernel + 2.0 * b.policy_drift + 4.0 * b.rademacher_sum +
                    6.0 * H * H * root;
    b.expected_risk_bound = b.total_bound;
    b.asymptotic_bound = b.beta1 * w1_initial + b.beta2 * w1_kernel + 2.0 * b.policy_drift + 4.0 * b.rademacher_sum;
    b.concentration_range = 3.0 * H * c.value_range * root;
    b.intrinsic_bound_range = b.policy_drift + 2.0 * b.rademacher_sum + b.concentration_range;
    b.total_bound_range = 2.0 * b.extrinsic_bound + 2.0 * b.intrinsic_bound_range;
    return b;
}

struct RationalityReport {
    std::vector<double> per_h_expected_loss;
    std::vector<double> per_h_empirical_loss;
    double expected_risk = 0.0;
    double empirical_risk = 0.0;
    double gap = 0.0;
    std::vector<PolicyTerms> terms;
    double extrinsic_sum = 0.0;  // sum_h max over evaluated policies
    double intrinsic_sum = 0.0;
    double decomposition_rhs = 0.0;
    std::vector<double> rademacher_std_error;
    std::vector<double> rademacher_family_max;  // max_f max_s |f(s)| per step
    Bounds bounds;
};

struct MeasureOptions {
    double lipschitz_policy = 1.0;
    double delta = kDefaultDelta;
    std::size_t rademacher_draws = 100;
    std::uint64_t seed = 0;
};

/// Full measurement for one agent: risks, gap, decomposition and bounds.
/// `snapshots` are earlier policies of the same run; they join the learned,
/// optimal and rational policies in the finite surrogate policy class.
inline RationalityReport measure_rationality(const ShiftAnalysis& env, const VisitedStates& visited,
                                             const TabularPolicy& learned,
                                             const std::vector<NamedPolicy>& snapshots = {},
                                             const MeasureOptions& opt = {}) {
    RationalityReport r;
    const auto expected = expected_rational_value_risk(env.deploy, env.q_deploy, learned, env.tau);
    const auto empirical = empirical_rational_value_risk(env.q_train, visited, learned, env.tau);
    r.per_h_expected_loss = expected.per_step;
    r.per_h_empirical_loss = empirical.per_step;
    r.expected_risk = expected.total;
    r.empirical_risk = empirical.total;
    r.gap = rational_risk_gap(r.expected_risk, r.empirical_risk);

    std::vector<NamedPolicy> extra = snapshots;
    extra.push_back({"optimal_train", env.optimal_train});
    r.terms = decomposition_terms(env, visited, learned, extra);
    r.decomposition_rhs = decomposition_rhs(r.terms);
    const std::size_t H = env.q_train.horizon();
    for (std::size_t h = 0; h < H; ++h) {
        double ext = 0.0, in = 0.0;
        for (const auto& t : r.terms) {
            ext = std::max(ext, t.extrinsic[h]);
            in = std::max(in, t.intrinsic[h]);
        }
        r.extrinsic_sum += ext;
        r.intrinsic_sum += in;
    }

    // Rademacher family per step: s -> E_{a~pi'} Q_train_h(s, a) for every
    // policy of the surrogate class.
    std::vector<const TabularPolicy*> cls{&learned, &env.optimal_train, &env.optimal_deploy};
    for (const auto& p : snapshots) cls.push_back(&p.policy);
    std::vector<double> rad(H, 0.0);
    r.rademacher_std_error.assign(H, 0.0);
    r.rademacher_family_max.assign(H, 0.0);
    std::vector<std::vector<double>> family(cls.size(), std::vector<double>(env.q_train.num_states()));
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t k = 0; k < cls.size(); ++k)
            for (StateId s = 0; s < env.q_train.num_states(); ++s)
                family[k][s] = detail::policy_expectation(cls[k]->row(h, s), env.q_train.row(h, s));
        for (const auto& f : family)
            for (double x : f) r.rademacher_family_max[h] = std::max(r.rademacher_family_max[h], std::abs(x));
        const auto col = visited.column(h);
        const auto est = empirical_rademacher(family, col, opt.rademacher_draws, CounterRng(opt.seed).split(h)());
        rad[h] = est.mean;
        r.rademacher_std_error[h] = est.std_error;
    }

    BoundConstants c;
    c.lipschitz_value = env.lipschitz_value;
    c.lipschitz_kernel = env.lipschitz_kernel;
    c.lipschitz_policy = opt.lipschitz_policy;
    c.num_actions = env.q_train.num_actions();
    c.horizon = H;
    c.episodes = visited.episodes();
    c.delta = opt.delta;
    c.value_range = env.value_range;
    r.bounds = evaluate_bounds(c, env.w1_initial, env.w1_kernel.value, std::move(rad));
    return r;
}

}  // namespace rrl
