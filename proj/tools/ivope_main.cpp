#include "selftest.hpp"

#include "ivope/config.hpp"
#include "ivope/errors.hpp"
#include "ivope/experiment.hpp"
#include "ivope/oracle.hpp"
#include "ivope/parallel.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

using namespace ivope;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

// "default", "tabular:p0,p1,..." or "logistic:b0,b1,...".
TargetPolicy parse_policy_arg(const std::string& text, const EnvSpec& env) {
    if (text == "default") return env.default_target();
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw InvalidArgument("policy must be default, tabular:... or logistic:...");
    const std::string kind = text.substr(0, colon);
    const std::vector<double> v = parse_double_list(text.substr(colon + 1), 0);
    if (kind == "tabular") return TargetPolicy::tabular(v);
    if (kind == "logistic") return TargetPolicy::logistic(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    throw InvalidArgument("unknown policy kind '" + kind + "'");
}

int run_command(const std::string& spec_path, int workers, const std::string& out_dir, std::optional<std::uint64_t> seed,
                const std::string& cache) {
    ExperimentSpec spec = parse_spec(spec_path);
    if (seed) spec.seed = *seed;
    RunOptions opts;
    opts.workers = workers;
    opts.out_dir = out_dir;
    opts.oracle_cache = cache;
    const ExperimentResult res = run_experiment(spec, opts);
    std::cout << summary_csv(res);
    if (res.any_failure) {
        std::cerr << "ivope: some replication cells failed; see first_error in the summary\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int oracle_command(const std::string& env_name, const std::string& policy, double gamma, const std::string& params,
                   int k, const std::string& method, int truncation, const OracleOptions& oopts) {
    ExperimentSpec spec;
    spec.env = env_name;
    spec.env_params = params;
    spec.highorder_k = k;
    const EnvSpec env = make_env(spec);
    const TargetPolicy pi = parse_policy_arg(policy, env);
    OracleValue v;
    if (method == "auto") v = oracle_value(env, pi, gamma, oopts);
    else if (method == "exact_dp") v = exact_dp(env, pi, gamma);
    else if (method == "brute_force") v = brute_force_sum(env, pi, gamma, truncation);
    else if (method == "eta_mc")
        v = eta_mc(env, pi, gamma, oopts.mc_episodes, oopts.mc_horizon, derive_rng_stream(oopts.seed, "oracle", 0),
                   oopts.workers);
    else if (method == "on_policy_mc")
        v = on_policy_mc(env, pi, gamma, oopts.mc_episodes, oopts.mc_horizon,
                         derive_rng_stream(oopts.seed, "oracle", 1), oopts.workers);
    else throw InvalidArgument("unknown oracle method '" + method + "'");
    std::printf("env,gamma,eta,method,error_bound,horizon,episodes,sample_sd\n%s,%.17g,%.17g,%s,%.17g,%d,%lld,%.17g\n",
                env.name().c_str(), gamma, v.eta, oracle_method_name(v.method).c_str(), v.error_bound, v.horizon,
                v.episodes, v.sample_sd);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Off-policy evaluation with instrumental variables"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment spec and write CSV tables");
    std::string spec_path, out_dir = ".", cache;
    int workers = default_workers();
    std::uint64_t seed_value = 0;
    run->add_option("spec", spec_path, "Experiment spec file")->required()->check(CLI::ExistingFile);
    run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "Output directory");
    auto* seed_opt = run->add_option("--seed", seed_value, "Override the spec seed");
    run->add_option("--oracle-cache", cache, "Oracle cache CSV file");

    auto* oracle = app.add_subcommand("oracle", "Ground-truth policy value");
    std::string env_name, policy = "default", params, method = "auto";
    double gamma = 0.9;
    int k = 2, truncation = 30;
    OracleOptions oopts;
    oopts.workers = default_workers();
    oracle->add_option("env", env_name, "Environment name")->required();
    oracle->add_option("pi", policy, "default, tabular:p0,p1,... or logistic:b0,b1,...");
    oracle->add_option("--gamma", gamma, "Discount factor")->required()->check(CLI::Range(0.0, 0.999999));
    oracle->add_option("--params", params, "AdCampaign parameter file");
    oracle->add_option("--order", k, "Order of highorder_* environments");
    oracle->add_option("--method", method, "auto, exact_dp, brute_force, eta_mc or on_policy_mc");
    oracle->add_option("--truncation", truncation, "Brute-force truncation horizon");
    oracle->add_option("--episodes", oopts.mc_episodes, "Monte Carlo episodes");
    oracle->add_option("--horizon", oopts.mc_horizon, "Monte Carlo horizon");
    oracle->add_option("--seed", oopts.seed, "Monte Carlo seed");
    oracle->add_option("--workers", oopts.workers, "Worker threads")->check(CLI::PositiveNumber);

    auto* selftest = app.add_subcommand("selftest", "Run the invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run) {
            std::optional<std::uint64_t> seed;
            if (*seed_opt) seed = seed_value;
            return run_command(spec_path, workers, out_dir, seed, cache);
        }
        if (*oracle) return oracle_command(env_name, policy, gamma, params, k, method, truncation, oopts);
        if (*selftest) return tools::run_selftest(std::cout) == 0 ? kExitOk : kExitNumerical;
    } catch (const ParseError& e) {
        std::cerr << "ivope: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        std::cerr << "ivope: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "ivope: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitUsage;
}
