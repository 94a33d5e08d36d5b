#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "rrl/dqn/trainer.hpp"
#include "rrl/emdp_io.hpp"
#include "rrl/environments.hpp"
#include "rrl/rationality.hpp"

namespace rrl::harness {

enum class Method { vanilla, l2, layer_norm, weight_norm, domain_randomization };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::vanilla: return "vanilla";
        case Method::l2: return "l2";
        case Method::layer_norm: return "layer_norm";
        case Method::weight_norm: return "weight_norm";
        case Method::domain_randomization: return "domain_randomization";
    }
    return "unknown";
}

inline Method parse_method(std::string_view s) {
    for (Method m : {Method::vanilla, Method::l2, Method::layer_norm, Method::weight_norm, Method::domain_randomization})
        if (s == to_string(m)) return m;
    throw std::invalid_argument("unknown method '" + std::string(s) +
                                "' (expected vanilla, l2, layer_norm, weight_norm or domain_randomization)");
}

inline std::vector<Method> comparison_methods() {
    return {Method::vanilla, Method::l2, Method::layer_norm, Method::weight_norm, Method::domain_randomization};
}

struct ExperimentSpec {
    std::string environment = "cliffwalking";
    Method method = Method::vanilla;
    double train_challenge_eps = 0.0;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::size_t horizon = 0;  // 0 = environment default
    std::filesystem::path output_dir = "results";
    double delta = kDefaultDelta;
    double lipschitz_policy = 1.0;
    std::size_t rademacher_draws = 100;
    std::vector<double> randomization_levels = dqn::default_randomization_levels();
    dqn::TrainConfig train{};  // challenge_eps, regularizer, seed and DR are filled per run

    void validate() const {
        if (environment != "taxi" && environment != "cliffwalking")
            throw std::invalid_argument("unknown environment '" + environment + "'");
        if (seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
        if (!(train_challenge_eps >= 0.0 && train_challenge_eps <= 1.0))
            throw std::invalid_argument("train_challenge_eps must lie in [0, 1]");
        if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
        if (rademacher_draws == 0) throw std::invalid_argument("rademacher_draws must be positive");
    }

    /// Slip level that defines the measured training environment. Domain
    /// randomization trains on a mixture whose mean kernel is the kernel at
    /// the mean level (the construction is affine in eps).
    [[nodiscard]] double measured_train_eps() const {
        if (method != Method::domain_randomization) return train_challenge_eps;
        double s = 0.0;
        for (double e : randomization_levels) s += e;
        return s / static_cast<double>(randomization_levels.size());
    }

    [[nodiscard]] dqn::TrainConfig train_config(std::uint64_t seed) const {
        dqn::TrainConfig c = train;
        c.seed = seed;
        c.challenge_eps = train_challenge_eps;
        c.regularizer = dqn::Regularizer::none;
        c.domain_randomization.reset();
        switch (method) {
            case Method::vanilla: break;
            case Method::l2: c.regularizer = dqn::Regularizer::l2; break;
            case Method::layer_norm: c.regularizer = dqn::Regularizer::layer_norm; break;
            case Method::weight_norm: c.regularizer = dqn::Regularizer::weight_norm; break;
            case Method::domain_randomization: c.domain_randomization = randomization_levels; break;
        }
        return c;
    }
};

struct ResultRow {
    std::string env;
    std::string method;
    double challenge_eps = 0.0;
    std::uint64_t seed = 0;
    double expected_risk = 0.0;
    double empirical_risk = 0.0;
    double gap = 0.0;
    double extrinsic_sum = 0.0;
    double intrinsic_sum = 0.0;
    double total_bound = 0.0;
    double final_mean_return = 0.0;
    double decomposition_rhs = 0.0;
    double total_bound_range = 0.0;
    double first_mean_return = 0.0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct RunOutcome {
    ResultRow row;
    RationalityReport report;
    dqn::TrainResult training;
};

/// Caches the agent-independent analysis of (environment, horizon, eps), which
/// dominates measurement cost on Taxi. Thread-safe; each key is built once.
class AnalysisCache {
public:
    using Key = std::tuple<std::string, std::size_t, double>;

    std::shared_ptr<const ShiftAnalysis> get(const std::string& env, std::size_t horizon, double eps) {
        std::shared_future<std::shared_ptr<const ShiftAnalysis>> fut;
        std::promise<std::shared_ptr<const ShiftAnalysis>> mine;
        bool build = false;
        {
            std::lock_guard lock(mu_);
            auto it = entries_.find({env, horizon, eps});
            if (it == entries_.end()) {
                fut = mine.get_future().share();
                entries_.emplace(Key{env, horizon, eps}, fut);
                build = true;
            } else {
                fut = it->second;
            }
        }
        if (build) {
            try {
                const auto deploy = build_environment(env, horizon);
                const auto train = action_randomize(deploy, eps);
                mine.set_value(std::make_shared<const ShiftAnalysis>(ShiftAnalysis::build(train, deploy)));
            } catch (...) {
                mine.set_exception(std::current_exception());
            }
        }
        return fut.get();
    }

private:
    std::mutex mu_;
    std::map<Key, std::shared_future<std::shared_ptr<const ShiftAnalysis>>> entries_;
};

namespace detail {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
    }
}

inline double mean_of(const std::vector<double>& v, std::size_t first, std::size_t count) {
    if (count == 0) return 0.0;
    double s = 0.0;
    for (std::size_t k = first; k < first + count; ++k) s += v[k];
    return s / static_cast<double>(count);
}

}  // namespace detail

inline constexpr std::size_t kReturnWindow = 500;

/// Full pipeline for one seed: environments, exact solves, training and
/// measurement. Deterministic per (spec, seed).
inline RunOutcome run_experiment(const ExperimentSpec& spec, std::uint64_t seed, AnalysisCache& cache) {
    spec.validate();
    const auto base = detail::stage("environment", [&] { return build_environment(spec.environment, spec.horizon); });
    const auto env = detail::stage("exact solve", [&] {
        return cache.get(spec.environment, base.horizon, spec.measured_train_eps());
    });
    RunOutcome out;
    out.training = detail::stage("training", [&] { return dqn::train_dqn(base, spec.train_config(seed)); });
    const auto& log = out.training.log;
    const std::size_t S = env->train.num_states, H = env->train.horizon;
    const double tau = spec.train.softmax_tau;
    out.report = detail::stage("measurement", [&] {
        const auto learned = dqn::q_policy_from_net(out.training.net, tau, S, H);
        std::vector<NamedPolicy> snaps;
        for (const auto& sn : log.snapshots)
            snaps.push_back({"snapshot_" + std::to_string(sn.episode), dqn::q_policy_from_net(sn.net, tau, S, H)});
        MeasureOptions opt;
        opt.lipschitz_policy = spec.lipschitz_policy;
        opt.delta = spec.delta;
        opt.rademacher_draws = spec.rademacher_draws;
        opt.seed = CounterRng::from_keys({seed, 0x5ADE})();
        return measure_rationality(*env, log.visited, learned, snaps, opt);
    });
    auto& r = out.row;
    r.env = spec.environment;
    r.method = to_string(spec.method);
    r.challenge_eps = spec.train_challenge_eps;
    r.seed = seed;
    r.expected_risk = out.report.expected_risk;
    r.empirical_risk = out.report.empirical_risk;
    r.gap = out.report.gap;
    r.extrinsic_sum = out.report.extrinsic_sum;
    r.intrinsic_sum = out.report.intrinsic_sum;
    r.total_bound = out.report.bounds.total_bound;
    r.decomposition_rhs = out.report.decomposition_rhs;
    r.total_bound_range = out.report.bounds.total_bound_range;
    const std::size_t n = log.returns.size();
    const std::size_t w = std::min(kReturnWindow, n);
    r.final_mean_return = detail::mean_of(log.returns, n - w, w);
    r.first_mean_return = detail::mean_of(log.returns, 0, w);
    return out;
}

inline ResultRow run_row(const ExperimentSpec& spec, std::uint64_t seed, AnalysisCache& cache) {
    return run_experiment(spec, seed, cache).row;
}

/// Parallelism default: RATIONAL_RL_JOBS if set, else 1.
inline std::size_t default_jobs() {
    if (const char* v = std::getenv("RATIONAL_RL_JOBS")) {
        std::size_t n = 0;
        const std::string_view s(v);
        const auto r = std::from_chars(s.data(), s.data() + s.size(), n);
        if (r.ec == std::errc{} && r.ptr == s.data() + s.size() && n > 0) return n;
        throw std::invalid_argument("RATIONAL_RL_JOBS must be a positive integer, got '" + std::string(s) + "'");
    }
    return 1;
}

/// Runs `task(i)` for i in [0, n) on up to `jobs` threads. The first failure
/// is rethrown after all workers stop.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& task) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < jobs; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

inline bool row_less(const ResultRow& a, const ResultRow& b) {
    return std::tie(a.env, a.method, a.challenge_eps, a.seed) < std::tie(b.env, b.method, b.challenge_eps, b.seed);
}

/// Every (spec, seed) pair, run concurrently; output sorted by (env, method,
/// eps, seed).
inline std::vector<RunOutcome> run_all(const std::vector<ExperimentSpec>& specs, std::size_t jobs,
                                       AnalysisCache& cache) {
    std::vector<std::pair<const ExperimentSpec*, std::uint64_t>> work;
    for (const auto& s : specs) {
        s.validate();
        for (auto seed : s.seeds) work.emplace_back(&s, seed);
    }
    std::vector<RunOutcome> out(work.size());
    parallel_for(work.size(), jobs, [&](std::size_t i) { out[i] = run_experiment(*work[i].first, work[i].second, cache); });
    std::sort(out.begin(), out.end(), [](const RunOutcome& a, const RunOutcome& b) { return row_less(a.row, b.row); });
    return out;
}

inline std::vector<ExperimentSpec> h3_specs(const ExperimentSpec& base) {
    std::vector<ExperimentSpec> out;
    for (double eps : challenge_levels()) {
        ExperimentSpec s = base;
        s.method = Method::vanilla;
        s.train_challenge_eps = eps;
        out.push_back(s);
    }
    return out;
}

inline std::vector<ExperimentSpec> h1_h2_specs(const ExperimentSpec& base) {
    std::vector<ExperimentSpec> out;
    for (Method m : comparison_methods()) {
        ExperimentSpec s = base;
        s.method = m;
        s.train_challenge_eps = kComparisonChallenge;
        out.push_back(s);
    }
    return out;
}

inline std::vector<ResultRow> rows_of(const std::vector<RunOutcome>& runs) {
    std::vector<ResultRow> rows;
    for (const auto& r : runs) rows.push_back(r.row);
    return rows;
}

/// Vanilla DQN at every challenge level, one row per (level, seed).
inline std::vector<ResultRow> sweep_h3(const ExperimentSpec& base, std::size_t jobs, AnalysisCache& cache) {
    return rows_of(run_all(h3_specs(base), jobs, cache));
}

/// Every comparison method at the fixed training challenge level.
inline std::vector<ResultRow> sweep_h1_h2(const ExperimentSpec& base, std::size_t jobs, AnalysisCache& cache) {
    return rows_of(run_all(h1_h2_specs(base), jobs, cache));
}

// ---------------------------------------------------------------- CSV

inline std::string fmt9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

inline const char* kResultHeader =
    "env,method,challenge_eps,seed,expected_risk,empirical_risk,gap,extrinsic_sum,intrinsic_sum,total_bound,"
    "final_mean_return,decomposition_rhs,total_bound_range,first_mean_return";

inline void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << kResultHeader << '\n';
    for (const auto& r : rows)
        os << r.env << ',' << r.method << ',' << fmt9(r.challenge_eps) << ',' << r.seed << ',' << fmt9(r.expected_risk)
           << ',' << fmt9(r.empirical_risk) << ',' << fmt9(r.gap) << ',' << fmt9(r.extrinsic_sum) << ','
           << fmt9(r.intrinsic_sum) << ',' << fmt9(r.total_bound) << ',' << fmt9(r.final_mean_return) << ','
           << fmt9(r.decomposition_rhs) << ',' << fmt9(r.total_bound_range) << ',' << fmt9(r.first_mean_return)
           << '\n';
}

inline std::vector<ResultRow> read_results_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw io::FormatError("results.csv: empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kResultHeader) throw io::FormatError("results.csv: unexpected header");
    std::vector<ResultRow> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 14)
            throw io::FormatError("results.csv line " + std::to_string(line_no) + ": expected 14 fields");
        auto num = [&](std::size_t k) { return io::detail::parse_number<double>(f[k], line_no, "number"); };
        ResultRow r;
        r.env = f[0];
        r.method = f[1];
        r.challenge_eps = num(2);
        r.seed = io::detail::parse_number<std::uint64_t>(f[3], line_no, "seed");
        r.expected_risk = num(4);
        r.empirical_risk = num(5);
        r.gap = num(6);
        r.extrinsic_sum = num(7);
        r.intrinsic_sum = num(8);
        r.total_bound = num(9);
        r.final_mean_return = num(10);
        r.decomposition_rhs = num(11);
        r.total_bound_range = num(12);
        r.first_mean_return = num(13);
        rows.push_back(std::move(r));
    }
    return rows;
}

struct Stat {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for a single value
};

inline Stat stat_of(const std::vector<double>& v) {
    Stat s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

struct SummaryRow {
    std::string env;
    std::string method;
    double challenge_eps = 0.0;
    std::size_t runs = 0;
    Stat gap, expected_risk, empirical_risk, extrinsic_sum, intrinsic_sum, total_bound, final_mean_return;
};

/// Mean and std per (env, method, challenge_eps), in sorted key order.
inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    std::map<std::tuple<std::string, std::string, double>, std::vector<const ResultRow*>> groups;
    for (const auto& r : rows) groups[{r.env, r.method, r.challenge_eps}].push_back(&r);
    std::vector<SummaryRow> out;
    for (const auto& [key, members] : groups) {
        SummaryRow s;
        std::tie(s.env, s.method, s.challenge_eps) = key;
        s.runs = members.size();
        auto col = [&](double ResultRow::*field) {
            std::vector<double> v;
            for (const auto* r : members) v.push_back(r->*field);
            return stat_of(v);
        };
        s.gap = col(&ResultRow::gap);
        s.expected_risk = col(&ResultRow::expected_risk);
        s.empirical_risk = col(&ResultRow::empirical_risk);
        s.extrinsic_sum = col(&ResultRow::extrinsic_sum);
        s.intrinsic_sum = col(&ResultRow::intrinsic_sum);
        s.total_bound = col(&ResultRow::total_bound);
        s.final_mean_return = col(&ResultRow::final_mean_return);
        out.push_back(std::move(s));
    }
    return out;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << "env,method,challenge_eps,runs";
    for (const char* c : {"gap", "expected_risk", "empirical_risk", "extrinsic_sum", "intrinsic_sum", "total_bound",
                          "final_mean_return"})
        os << ',' << c << "_mean," << c << "_std";
    os << '\n';
    for (const auto& s : rows) {
        os << s.env << ',' << s.method << ',' << fmt9(s.challenge_eps) << ',' << s.runs;
        for (const Stat* st : {&s.gap, &s.expected_risk, &s.empirical_risk, &s.extrinsic_sum, &s.intrinsic_sum,
                               &s.total_bound, &s.final_mean_return})
            os << ',' << fmt9(st->mean) << ',' << fmt9(st->std);
        os << '\n';
    }
}

/// Per-row consistency checks repeated at aggregation time; returns one
/// message per failed check.
inline std::vector<std::string> check_rows(const std::vector<ResultRow>& rows, double tol = 1e-9) {
    std::vector<std::string> bad;
    for (const auto& r : rows) {
        const std::string id = r.env + "/" + r.method + "/eps=" + fmt9(r.challenge_eps) + "/seed=" + std::to_string(r.seed);
        const double scale = std::max(1.0, std::abs(r.expected_risk) + std::abs(r.empirical_risk));
        if (std::abs(r.gap - std::abs(r.expected_risk - r.empirical_risk)) > 1e-8 * scale)
            bad.push_back(id + ": gap differs from |expected - empirical|");
        if (r.gap > r.decomposition_rhs + tol * scale) bad.push_back(id + ": gap exceeds the decomposition sum");
        if (r.gap > r.total_bound) bad.push_back(id + ": gap exceeds the total bound");
    }
    return bad;
}

struct EmitResult {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> violations;
};

/// Writes results.csv, summary.csv and plot-ready curves_*.tsv into `outdir`.
/// For every (env, method) with several levels a curve over the level is
/// written; for every (env, level) with several methods a curve over the
/// method is written. Columns: x, y (mean gap), yerr (std).
inline EmitResult aggregate_and_emit(const std::vector<ResultRow>& rows, const std::filesystem::path& outdir) {
    if (rows.empty()) throw std::invalid_argument("aggregate_and_emit: no rows");
    std::filesystem::create_directories(outdir);
    EmitResult res;
    res.violations = check_rows(rows);
    auto open = [&](const std::string& name) {
        const auto path = outdir / name;
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot write " + path.string());
        res.files.push_back(path);
        return os;
    };
    auto sorted = rows;
    std::sort(sorted.begin(), sorted.end(), row_less);
    {
        auto os = open("results.csv");
        write_results_csv(os, sorted);
    }
    const auto summary = summarize(sorted);
    {
        auto os = open("summary.csv");
        write_summary_csv(os, summary);
    }
    std::map<std::pair<std::string, std::string>, std::vector<const SummaryRow*>> by_method;
    std::map<std::pair<std::string, double>, std::vector<const SummaryRow*>> by_level;
    for (const auto& s : summary) {
        by_method[{s.env, s.method}].push_back(&s);
        by_level[{s.env, s.challenge_eps}].push_back(&s);
    }
    for (const auto& [key, pts] : by_method) {
        if (pts.size() < 2) continue;
        auto os = open("curves_" + key.first + "_" + key.second + "_by_level.tsv");
        os << "x\ty\tyerr\n";
        for (const auto* p : pts) os << fmt9(p->challenge_eps) << '\t' << fmt9(p->gap.mean) << '\t' << fmt9(p->gap.std) << '\n';
    }
    for (const auto& [key, pts] : by_level) {
        if (pts.size() < 2) continue;
        auto os = open("curves_" + key.first + "_eps" + fmt9(key.second) + "_by_method.tsv");
        os << "x\ty\tyerr\n";
        for (const auto* p : pts) os << p->method << '\t' << fmt9(p->gap.mean) << '\t' << fmt9(p->gap.std) << '\n';
    }
    return res;
}

// ---------------------------------------------------------------- config

/// Parses a flat `key = value` file; '#' starts a comment.
inline std::map<std::string, std::string> parse_config(std::istream& is) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(is, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        out[key] = value;
    }
    return out;
}

namespace detail {

template <class T>
T config_number(const std::string& key, const std::string& v) {
    T out{};
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
        throw std::invalid_argument("config key '" + key + "': bad value '" + v + "'");
    return out;
}

template <class T>
std::vector<T> config_list(const std::string& key, const std::string& v) {
    std::vector<T> out;
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        out.push_back(config_number<T>(key, item));
    }
    return out;
}

}  // namespace detail

/// Applies configuration keys to a spec. Unknown keys are rejected.
inline void apply_config(const std::map<std::string, std::string>& cfg, ExperimentSpec& spec) {
    using detail::config_list;
    using detail::config_number;
    auto& t = spec.train;
    for (const auto& [k, v] : cfg) {
        if (k == "environment") spec.environment = v;
        else if (k == "method") spec.method = parse_method(v);
        else if (k == "challenge_eps" || k == "train_challenge_eps") spec.train_challenge_eps = config_number<double>(k, v);
        else if (k == "seeds") spec.seeds = config_list<std::uint64_t>(k, v);
        else if (k == "horizon") spec.horizon = config_number<std::size_t>(k, v);
        else if (k == "output_dir" || k == "out") spec.output_dir = v;
        else if (k == "delta") spec.delta = config_number<double>(k, v);
        else if (k == "lipschitz_policy") spec.lipschitz_policy = config_number<double>(k, v);
        else if (k == "rademacher_draws") spec.rademacher_draws = config_number<std::size_t>(k, v);
        else if (k == "domain_randomization") spec.randomization_levels = config_list<double>(k, v);
        else if (k == "batch_size") t.batch_size = config_number<std::size_t>(k, v);
        else if (k == "buffer_capacity") t.buffer_capacity = config_number<std::size_t>(k, v);
        else if (k == "softmax_tau") t.softmax_tau = config_number<double>(k, v);
        else if (k == "episodes") t.episodes = config_number<std::size_t>(k, v);
        else if (k == "warmup_steps") t.warmup_steps = config_number<std::size_t>(k, v);
        else if (k == "learning_rate") t.optimizer.learning_rate = config_number<double>(k, v);
        else if (k == "target_update_period") t.target_update_period = config_number<std::size_t>(k, v);
        else if (k == "hidden_dim") t.hidden_dim = config_number<std::size_t>(k, v);
        else if (k == "eps_start") t.eps_start = config_number<double>(k, v);
        else if (k == "eps_final") t.eps_final = config_number<double>(k, v);
        else if (k == "eps_decay_episodes") t.eps_decay_episodes = config_number<std::size_t>(k, v);
        else if (k == "gamma") t.gamma = config_number<double>(k, v);
        else if (k == "l2_lambda") t.l2_lambda = config_number<double>(k, v);
        else if (k == "snapshot_every") t.snapshot_every = config_number<std::size_t>(k, v);
        else throw std::invalid_argument("unknown config key '" + k + "'");
    }
}

}  // namespace rrl::harness
