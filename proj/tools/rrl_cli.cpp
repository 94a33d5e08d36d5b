// Command-line front end: environment export, exact solves, divergences,
// training, measurement and sweeps.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "rrl/rrl.hpp"

namespace fs = std::filesystem;
using namespace rrl;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string config;
    std::size_t jobs = 0;
    std::vector<std::string> overrides;
};

harness::ExperimentSpec load_spec(const Globals& g) {
    harness::ExperimentSpec spec;
    if (!g.config.empty()) {
        std::ifstream is(g.config);
        if (!is) throw std::runtime_error("cannot open config " + g.config);
        harness::apply_config(harness::parse_config(is), spec);
    }
    std::stringstream extra;
    for (const auto& kv : g.overrides) extra << kv << '\n';
    harness::apply_config(harness::parse_config(extra), spec);
    if (g.seed) spec.seeds = {*g.seed};
    if (!g.out.empty()) spec.output_dir = g.out;
    return spec;
}

std::size_t jobs_of(const Globals& g) { return g.jobs ? g.jobs : harness::default_jobs(); }

std::string fixed(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12f", x);
    return buf;
}

void print_report(std::ostream& os, const RationalityReport& r) {
    const auto& b = r.bounds;
    const auto& c = b.constants;
    os << "expected_risk = " << io::exact(r.expected_risk) << '\n'
       << "empirical_risk = " << io::exact(r.empirical_risk) << '\n'
       << "gap = " << io::exact(r.gap) << '\n'
       << "extrinsic_sum = " << io::exact(r.extrinsic_sum) << '\n'
       << "intrinsic_sum = " << io::exact(r.intrinsic_sum) << '\n'
       << "decomposition_rhs = " << io::exact(r.decomposition_rhs) << '\n'
       << "L_s = " << io::exact(c.lipschitz_value) << '\n'
       << "L_p = " << io::exact(c.lipschitz_kernel) << '\n'
       << "L_pi = " << io::exact(c.lipschitz_policy) << '\n'
       << "num_actions = " << c.num_actions << '\n'
       << "horizon = " << c.horizon << '\n'
       << "episodes = " << c.episodes << '\n'
       << "delta = " << io::exact(c.delta) << '\n'
       << "value_range = " << io::exact(c.value_range) << '\n'
       << "w1_initial = " << io::exact(b.w1_initial) << '\n'
       << "w1_kernel = " << io::exact(b.w1_kernel) << '\n'
       << "rademacher_sum = " << io::exact(b.rademacher_sum) << '\n'
       << "beta1 = " << io::exact(b.beta1) << '\n'
       << "beta2 = " << io::exact(b.beta2) << '\n'
       << "extrinsic_bound = " << io::exact(b.extrinsic_bound) << '\n'
       << "intrinsic_bound = " << io::exact(b.intrinsic_bound) << '\n'
       << "total_bound = " << io::exact(b.total_bound) << '\n'
       << "expected_risk_bound = " << io::exact(b.expected_risk_bound) << '\n'
       << "asymptotic_bound = " << io::exact(b.asymptotic_bound) << '\n'
       << "intrinsic_bound_range = " << io::exact(b.intrinsic_bound_range) << '\n'
       << "total_bound_range = " << io::exact(b.total_bound_range) << '\n';
    auto list = [&](const char* key, const std::vector<double>& v) {
        os << key << " =";
        for (std::size_t h = 0; h < v.size(); ++h) os << (h ? "," : " ") << io::exact(v[h]);
        os << '\n';
    };
    list("per_h_expected_loss", r.per_h_expected_loss);
    list("per_h_empirical_loss", r.per_h_empirical_loss);
    for (const auto& t : r.terms) {
        list(("extrinsic." + t.name).c_str(), t.extrinsic);
        list(("intrinsic." + t.name).c_str(), t.intrinsic);
    }
}

void write_training(const fs::path& dir, const dqn::TrainResult& res) {
    fs::create_directories(dir);
    dqn::save_checkpoint(res.net, dir / "final.rnn1");
    for (const auto& s : res.log.snapshots)
        dqn::save_checkpoint(s.net, dir / ("snapshot_" + std::to_string(s.episode) + ".rnn1"));
    std::ofstream v(dir / "visited.csv");
    io::write_visited_csv(v, res.log.visited);
    std::ofstream r(dir / "returns.csv");
    io::write_returns_csv(r, res.log.returns, res.log.challenge_eps);
    if (!v || !r) throw std::runtime_error("failed writing training logs to " + dir.string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rationality measurement for tabular reinforcement-learning agents"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Random seed (replaces the configured seed list)");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--config", g.config, "Flat key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--jobs", g.jobs, "Concurrent runs (default: RATIONAL_RL_JOBS or 1)");
    app.add_option("--set", g.overrides, "Configuration override key=value (repeatable, applied after --config)");

    // env
    auto* env_cmd = app.add_subcommand("env", "Export an environment in the EMDP v1 text format");
    std::string env_name = "cliffwalking";
    double env_eps = 0.0;
    std::size_t env_horizon = 0;
    bool env_absorbing = false;
    env_cmd->add_option("name", env_name, "taxi or cliffwalking")->required();
    env_cmd->add_option("--eps", env_eps, "Action-randomization probability");
    env_cmd->add_option("--horizon", env_horizon, "Horizon override");
    env_cmd->add_flag("--absorbing", env_absorbing, "Route terminal transitions into an explicit sink");

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Exact optimal Q by backward induction");
    std::string solve_in;
    solve_cmd->add_option("emdp", solve_in, "EMDP v1 file")->required()->check(CLI::ExistingFile);

    // divergence
    auto* div_cmd = app.add_subcommand("divergence", "Wasserstein shift between two EMDPs");
    std::string div_a, div_b;
    bool div_csv = false;
    div_cmd->add_option("train", div_a, "Training EMDP file")->required()->check(CLI::ExistingFile);
    div_cmd->add_option("deploy", div_b, "Deployment EMDP file")->required()->check(CLI::ExistingFile);
    div_cmd->add_flag("--csv", div_csv, "Machine-readable output");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train one DQN agent");
    std::optional<std::string> t_env, t_method;
    std::optional<double> t_eps;
    train_cmd->add_option("--env", t_env, "taxi or cliffwalking")->check(CLI::IsMember({"taxi", "cliffwalking"}));
    train_cmd->add_option("--eps", t_eps, "Training challenge level");
    train_cmd->add_option("--method", t_method, "vanilla, l2, layer_norm, weight_norm or domain_randomization");

    // measure
    auto* measure_cmd = app.add_subcommand("measure", "Rationality report for a trained agent");
    std::string m_train, m_deploy, m_qtrain, m_qdeploy, m_ckpt, m_policy, m_visited, m_env_label = "custom",
                                                                               m_method_label = "custom";
    std::vector<std::string> m_snapshots;
    double m_eps_label = 0.0;
    measure_cmd->add_option("--train-emdp", m_train)->required()->check(CLI::ExistingFile);
    measure_cmd->add_option("--deploy-emdp", m_deploy)->required()->check(CLI::ExistingFile);
    measure_cmd->add_option("--q-train", m_qtrain)->required()->check(CLI::ExistingFile);
    measure_cmd->add_option("--q-deploy", m_qdeploy)->required()->check(CLI::ExistingFile);
    auto* ck = measure_cmd->add_option("--checkpoint", m_ckpt, "RNN1 checkpoint")->check(CLI::ExistingFile);
    auto* po = measure_cmd->add_option("--policy", m_policy, "RPL1 policy table")->check(CLI::ExistingFile);
    ck->excludes(po);
    measure_cmd->add_option("--visited", m_visited, "Visited-state CSV")->required()->check(CLI::ExistingFile);
    measure_cmd->add_option("--snapshot", m_snapshots, "Extra checkpoints for the policy class")
        ->check(CLI::ExistingFile);
    measure_cmd->add_option("--env-label", m_env_label);
    measure_cmd->add_option("--method-label", m_method_label);
    measure_cmd->add_option("--eps-label", m_eps_label);

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Multi-seed experiment sweeps");
    std::string sweep_kind = "h3";
    std::vector<std::string> sweep_envs{"cliffwalking"};
    sweep_cmd->add_option("--kind", sweep_kind, "h3 (challenge levels), methods (regularizers and DR), or single")
        ->check(CLI::IsMember({"h3", "methods", "single"}));
    sweep_cmd->add_option("--env", sweep_envs, "Environments")->check(CLI::IsMember({"taxi", "cliffwalking"}));

    // report
    auto* report_cmd = app.add_subcommand("report", "Re-aggregate a results.csv");
    std::string report_in;
    report_cmd->add_option("results", report_in, "results.csv")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count()) g.seed = seed_value;

    try {
        if (*env_cmd) {
            auto m = action_randomize(build_environment(env_name, env_horizon), env_eps);
            if (env_absorbing) m = make_absorbing(m);
            if (g.out.empty())
                io::write_emdp(std::cout, m);
            else
                io::save_emdp(m, g.out);
        } else if (*solve_cmd) {
            auto m = make_absorbing(io::load_emdp(solve_in));
            const auto q = backward_induction(m);
            double v1 = 0.0;
            for (StateId s = 0; s < m.num_states; ++s) v1 += m.initial_dist[s] * q.value(0, s);
            std::cout << "states = " << m.num_states << "\nactions = " << m.num_actions << "\nhorizon = " << m.horizon
                      << "\ninitial_value = " << fixed(v1) << "\nbellman_residual = " << bellman_residual(q, m) << '\n';
            if (!g.out.empty()) io::save_binary(q, g.out, io::write_qtensor);
        } else if (*div_cmd) {
            const auto a = make_absorbing(io::load_emdp(div_a));
            const auto b = make_absorbing(io::load_emdp(div_b));
            const double w1i = w1_initial_shift(b, a);
            const auto w1k = w1_kernel_shift(b, a);
            if (div_csv)
                std::cout << "w1_initial,w1_kernel,argmax_state,argmax_action\n"
                          << fixed(w1i) << ',' << fixed(w1k.value) << ',' << w1k.state << ',' << w1k.action << '\n';
            else
                std::cout << "w1_initial = " << fixed(w1i) << "\nw1_kernel = " << fixed(w1k.value)
                          << "\nargmax = (" << w1k.state << ", " << w1k.action << ")\n";
        } else if (*train_cmd) {
            auto spec = load_spec(g);
            if (t_env) spec.environment = *t_env;
            if (t_eps) spec.train_challenge_eps = *t_eps;
            if (t_method) spec.method = harness::parse_method(*t_method);
            spec.validate();
            const auto base = build_environment(spec.environment, spec.horizon);
            const auto res = dqn::train_dqn(base, spec.train_config(spec.seeds.front()));
            const fs::path dir = g.out.empty() ? fs::path("train_out") : fs::path(g.out);
            write_training(dir, res);
            const std::size_t n = res.log.returns.size(), w = std::min<std::size_t>(500, n);
            double last = 0.0;
            for (std::size_t k = n - w; k < n; ++k) last += res.log.returns[k];
            std::cout << "episodes = " << n << "\nenv_steps = " << res.log.env_steps
                      << "\ngradient_steps = " << res.log.gradient_steps
                      << "\nfinal_mean_return = " << (w ? last / static_cast<double>(w) : 0.0) << "\noutput = "
                      << dir.string() << '\n';
        } else if (*measure_cmd) {
            const auto spec = load_spec(g);
            const auto train = io::load_emdp(m_train);
            const auto deploy = io::load_emdp(m_deploy);
            const auto env = ShiftAnalysis::build(train, deploy, spec.train.softmax_tau);
            const auto qt = io::load_binary(m_qtrain, io::read_qtensor);
            const auto qd = io::load_binary(m_qdeploy, io::read_qtensor);
            if (!(qt == env.q_train) || !(qd == env.q_deploy))
                throw std::runtime_error("supplied Q tensors do not match the exact solutions of the supplied EMDPs");
            std::ifstream vis(m_visited);
            const auto visited = io::read_visited_csv(vis);
            const std::size_t S = env.train.num_states, H = env.train.horizon;
            TabularPolicy learned;
            if (!m_ckpt.empty())
                learned = dqn::q_policy_from_net(dqn::load_checkpoint(m_ckpt), env.tau, S, H);
            else if (!m_policy.empty())
                learned = io::load_binary(m_policy, io::read_policy);
            else
                throw std::runtime_error("measure needs --checkpoint or --policy");
            std::vector<NamedPolicy> snaps;
            for (const auto& p : m_snapshots)
                snaps.push_back({fs::path(p).stem().string(), dqn::q_policy_from_net(dqn::load_checkpoint(p), env.tau, S, H)});
            MeasureOptions opt;
            opt.lipschitz_policy = spec.lipschitz_policy;
            opt.delta = spec.delta;
            opt.rademacher_draws = spec.rademacher_draws;
            opt.seed = spec.seeds.front();
            const auto report = measure_rationality(env, visited, learned, snaps, opt);
            print_report(std::cout, report);
            harness::ResultRow row;
            row.env = m_env_label;
            row.method = m_method_label;
            row.challenge_eps = m_eps_label;
            row.seed = spec.seeds.front();
            row.expected_risk = report.expected_risk;
            row.empirical_risk = report.empirical_risk;
            row.gap = report.gap;
            row.extrinsic_sum = report.extrinsic_sum;
            row.intrinsic_sum = report.intrinsic_sum;
            row.total_bound = report.bounds.total_bound;
            row.decomposition_rhs = report.decomposition_rhs;
            row.total_bound_range = report.bounds.total_bound_range;
            std::cout << '\n';
            harness::write_results_csv(std::cout, {row});
            if (!g.out.empty()) {
                std::ofstream os(g.out);
                harness::write_results_csv(os, {row});
            }
        } else if (*sweep_cmd) {
            const auto spec = load_spec(g);
            harness::AnalysisCache cache;
            std::vector<harness::ExperimentSpec> specs;
            for (const auto& e : sweep_envs) {
                auto s = spec;
                s.environment = e;
                std::vector<harness::ExperimentSpec> part;
                if (sweep_kind == "h3")
                    part = harness::h3_specs(s);
                else if (sweep_kind == "methods")
                    part = harness::h1_h2_specs(s);
                else
                    part = {s};
                specs.insert(specs.end(), part.begin(), part.end());
            }
            const auto rows = harness::rows_of(harness::run_all(specs, jobs_of(g), cache));
            const auto res = harness::aggregate_and_emit(rows, spec.output_dir);
            for (const auto& f : res.files) std::cout << "wrote " << f.string() << '\n';
            for (const auto& v : res.violations) std::cerr << "check failed: " << v << '\n';
            if (!res.violations.empty()) return 3;
        } else if (*report_cmd) {
            std::ifstream is(report_in);
            const auto rows = harness::read_results_csv(is);
            const fs::path dir = g.out.empty() ? fs::path(report_in).parent_path() : fs::path(g.out);
            const auto res = harness::aggregate_and_emit(rows, dir.empty() ? fs::path(".") : dir);
            for (const auto& f : res.files) std::cout << "wrote " << f.string() << '\n';
            for (const auto& v : res.violations) std::cerr << "check failed: " << v << '\n';
            if (!res.violations.empty()) return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
