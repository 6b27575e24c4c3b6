#pragma once

#include "ivope/envs.hpp"
#include "ivope/estimators.hpp"
#include "ivope/tabular.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ivope {

enum class OracleMethod { ExactDP, BruteForceSum, MonteCarloWeighted, MonteCarloInterventional };

std::string oracle_method_name(OracleMethod m);

struct OracleValue {
    double eta = 0.0;
    OracleMethod method = OracleMethod::ExactDP;
    double error_bound = 0.0;
    /// Truncation horizon (brute force, Monte Carlo) and episode count (Monte Carlo).
    int horizon = 0;
    long long episodes = 0;
    double sample_sd = 0.0;
};

/// π(1|s) on the model's (possibly augmented) states. Accepts a table over the
/// model states or over the observations.
std::vector<double> policy_on_model(const TabularModel& m, const TargetPolicy& pi);

/// Exact identified quantities of a tabular model under a target policy.
struct TabularTruth {
    std::vector<double> c1;  // [s]
    std::vector<double> V;   // [s]
    std::vector<double> Q;   // [s*4 + z*2 + a]
    double eta = 0.0;
};

TabularTruth tabular_truth(const TabularModel& m, const std::vector<double>& pi1, double gamma, double delta_min = 1e-3);

/// Identified value from the fixed point V = Σ c p_a {E[R] + γ Σ p(s') V(s')}.
OracleValue exact_dp(const EnvSpec& env, const TargetPolicy& pi, double gamma);

/// Interventional value (U_t enumerated, actions from π ignoring U_t and Z_t).
OracleValue exact_interventional_dp(const EnvSpec& env, const TargetPolicy& pi, double gamma);

enum class BruteForceMode {
    Auto,     // literal for T_trunc <= 4, grouped otherwise
    Literal,  // explicit enumeration of every (s_0, (z, a, r, s')_0..T) path
    Grouped   // same sum accumulated forward with paths grouped by end state
};

/// Truncated identification sum Σ_{t<=T_trunc} γ^t E[R_t ·Π c p_a p_{r,s}].
/// error_bound = γ^{T_trunc+1} R_max/(1-γ).
OracleValue brute_force_sum(const EnvSpec& env, const TargetPolicy& pi, double gamma, int t_trunc,
                            BruteForceMode mode = BruteForceMode::Auto);

inline constexpr int kBruteForceLiteralCap = 5;
inline constexpr int kBruteForceGroupedCap = 100000;

/// Weighted Monte Carlo oracle (1/N') Σ_i Σ_{t<T} γ^t R_t Π_{j<=t} c(Z_j|S_j)/p_z(Z_j|S_j)
/// over behavior episodes. error_bound = 3·sd/√N' plus γ^T R_max/(1-γ) when rewards are bounded.
OracleValue eta_mc(const EnvSpec& env, const TargetPolicy& pi, double gamma, long long n_episodes, int T,
                   const RngStream& rng, int workers = 1);

/// Mean discounted return of episodes drawn under π (interventional Monte Carlo).
OracleValue on_policy_mc(const EnvSpec& env, const TargetPolicy& pi, double gamma, long long n_episodes, int T,
                         const RngStream& rng, int workers = 1);

/// π(1|s) = Σ_z p_z(z|s) p_a(1|z,s) on the observed states of a ToyTabular env.
TargetPolicy behavior_implied_policy(const EnvSpec& env);

struct OracleOptions {
    long long mc_episodes = 200000;
    int mc_horizon = 200;
    std::uint64_t seed = 20240601;
    int workers = 1;
};

/// Ground truth for an environment: exact DP for tabular-exact environments,
/// weighted Monte Carlo for AdCampaign, interventional Monte Carlo otherwise.
OracleValue oracle_value(const EnvSpec& env, const TargetPolicy& pi, double gamma, const OracleOptions& opts = {});

std::uint64_t policy_hash(const TargetPolicy& pi);

/// CSV cache of oracle values keyed by (env hash, π hash, γ, method, params).
class OracleCache {
public:
    explicit OracleCache(std::string path);
    static std::string key(const EnvSpec& env, const TargetPolicy& pi, double gamma, const OracleOptions& opts);
    bool lookup(const std::string& key, OracleValue& out) const;
    void store(const std::string& key, const OracleValue& v);

private:
    std::string path_;
    std::map<std::string, OracleValue> entries_;
};

OracleValue cached_oracle_value(OracleCache& cache, const EnvSpec& env, const TargetPolicy& pi, double gamma,
                                const OracleOptions& opts = {});

/// True nuisances of a tabular environment: exact p_z, p_a, Q and
/// ω = d^π / p_D with p_D the behavior state law pooled over t < T.
NuisanceSet oracle_nuisances(const EnvSpec& env, const TargetPolicy& pi, double gamma, int T,
                             double delta_min = 1e-3);

}  // namespace ivope
