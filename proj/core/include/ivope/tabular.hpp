#pragma once

#include "ivope/envs.hpp"
#include "ivope/history.hpp"

#include <vector>

namespace ivope {

/// Exact conditional laws of a tabular environment, obtained by enumerating
/// the latent U_t and the IV noise δ_t. High-order environments are expressed
/// on the augmented state (see HistoryCoding).
struct TabularModel {
    HistoryCoding coding;
    int num_states = 0;
    int num_obs = 0;
    int num_u = 0;
    std::vector<double> reward_values;

    std::vector<double> nu;     // [s]
    std::vector<double> pz1;    // [s]
    std::vector<double> pa1;    // [s*2 + z], observational
    std::vector<double> joint;  // [((s*4 + z*2 + a) * nR + r) * nO + o'], observational

    // Latent-level laws, used by the interventional DP.
    std::vector<double> pu;       // [s*nU + u]
    std::vector<double> pa1_u;    // [(s*2 + z)*nU + u]
    std::vector<double> joint_u;  // [(((s*2 + a)*nU + u) * nR + r) * nO + o']

    int num_rewards() const noexcept { return static_cast<int>(reward_values.size()); }
    int next_state(int s, int z, int a, int o_next) const;
    double pa(int a, int z, int s) const { return a == 1 ? pa1[s * 2 + z] : 1.0 - pa1[s * 2 + z]; }
    double pz(int z, int s) const { return z == 1 ? pz1[s] : 1.0 - pz1[s]; }
    double prob_rs(int s, int z, int a, int r, int o_next) const {
        return joint[((s * 4 + z * 2 + a) * num_rewards() + r) * num_obs + o_next];
    }
    double mean_reward(int s, int z, int a) const;
};

/// Model for ToyTabular (any order). Throws for other environments.
TabularModel tabular_model(const EnvSpec& env);

}  // namespace ivope
