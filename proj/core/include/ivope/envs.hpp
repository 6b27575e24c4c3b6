#pragma once

#include "ivope/core.hpp"
#include "ivope/rng.hpp"

#include <cstdint>
#include <string>
#include <variant>

namespace ivope {

enum class EnvKind { ToyTabular, Continuous2D, AdCampaign, PartialObs };

/// Binary state, U_t ~ Ber(0.5) on {0,1}, δ_t ∈ {0.25, 0} inside the IV channel.
/// With `confounded` false the action ignores U_t.
struct ToyTabularParams {
    bool confounded = true;
};

/// Two-dimensional linear-Gaussian-start environment with U_t ∈ {-0.5, 0.5}.
struct Continuous2DParams {
    bool confounded = true;
};

/// Surrogate ad-bidding environment. Regressor layouts:
///   beta_a over (1, S, Z), beta_r over (1, S, Z, A), transition rows over (1, S, Z, A).
/// U_t ∈ {-0.5, 0.5} enters the action logit, reward logit and the next state.
struct AdCampaignParams {
    int state_dim = 6;
    double p_z = 0.5;
    Vector beta_a;
    Vector beta_r;
    Matrix transition;
    Vector sigma;
    double u_action = 0.0;
    double u_reward = 0.0;
    Vector u_state;

    void validate() const;
};

/// Latent binary state observed through a flip channel; the behavior action
/// depends only on the observation and the IV.
struct PartialObsParams {
    double flip_prob = 0.2;
};

using EnvParams = std::variant<ToyTabularParams, Continuous2DParams, AdCampaignParams, PartialObsParams>;

class EnvSpec {
public:
    static EnvSpec toy_tabular(ToyTabularParams p = {});
    static EnvSpec continuous_2d(Continuous2DParams p = {});
    static EnvSpec ad_campaign(AdCampaignParams p);
    static EnvSpec partial_obs(PartialObsParams p = {});

    EnvKind kind() const noexcept;
    const EnvParams& params() const noexcept { return params_; }
    /// Markov order of the observed process (1 unless built by make_highorder).
    int order() const noexcept { return order_; }
    double lag_prob_high() const noexcept { return lag_hi_; }
    double lag_prob_low() const noexcept { return lag_lo_; }

    int state_dim() const;
    bool discrete() const;
    /// Observed tabular state count (0 for continuous environments).
    int num_states() const;
    /// Largest |R_t|; infinity when rewards are unbounded.
    double reward_bound() const;
    std::string name() const;
    std::uint64_t hash() const;

    /// Observational P(Z=1|s) and P(A=1|z,s) on the observed state. Defined when
    /// the observed process is first-order Markov.
    double true_pz1(Eigen::Ref<const Eigen::RowVectorXd> s) const;
    double true_pa1(int z, Eigen::Ref<const Eigen::RowVectorXd> s) const;
    bool has_true_conditionals() const noexcept { return order_ == 1; }

    /// Target policy used by the experiments for this environment.
    TargetPolicy default_target() const;

private:
    friend EnvSpec make_highorder(const EnvSpec& base, int k, double q_hi, double q_lo);
    explicit EnvSpec(EnvParams p) : params_(std::move(p)) {}

    EnvParams params_;
    int order_ = 1;
    double lag_hi_ = 0.5;
    double lag_lo_ = 0.5;
};

/// Order-k variant: P(U_t = high) is q_hi when A_{t-k+1} = 1 and q_lo when it
/// is 0 (0.5 for t < k-1). Supported for ToyTabular and Continuous2D bases.
EnvSpec make_highorder(const EnvSpec& base, int k, double q_hi = 0.85, double q_lo = 0.15);

/// n episodes of length T under the embedded behavior policy. Episode i uses
/// rng.substream(i).
Dataset sample_dataset(const EnvSpec& env, int n, int T, const RngStream& rng);

/// As sample_dataset, but A_t ~ π(·|S_t) ignoring U_t and Z_t.
Dataset sample_under_target(const EnvSpec& env, const TargetPolicy& pi, int n, int T, const RngStream& rng);

/// Simulates one episode; `pi` null means the behavior policy.
Trajectory simulate_episode(const EnvSpec& env, const TargetPolicy* pi, int T, RngStream& rng);

}  // namespace ivope
