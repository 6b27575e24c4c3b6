#include "ivope/envs.hpp"

#include "ivope/errors.hpp"

#include <charconv>
#include <cmath>
#include <limits>

namespace ivope {

namespace {

double checked(double p, bool check) {
    if (check && !(p > 0.0 && p < 1.0))
        throw InvalidArgument("environment: success probability left (0,1) on a reachable state");
    return p;
}

// Probability that U_t takes its "high" value (1 for ToyTabular, +0.5 otherwise).
double u_high_prob(const EnvSpec& env, const std::vector<int>& actions, int t) {
    const int k = env.order();
    if (k == 1) return 0.5;
    const int lag = t - k + 1;
    if (lag < 0) return 0.5;
    return actions[lag] == 1 ? env.lag_prob_high() : env.lag_prob_low();
}

Trajectory simulate(const EnvSpec& env, const TargetPolicy* pi, int T, RngStream& rng, bool check) {
    const int d = env.state_dim();
    Trajectory tr;
    tr.states = RowMatrix::Zero(T + 1, d);
    tr.ivs.assign(T, 0);
    tr.actions.assign(T, 0);
    tr.rewards.assign(T, 0.0);

    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, ToyTabularParams>) {
                int s = rng.bernoulli(0.5) ? 1 : 0;
                tr.states(0, 0) = s;
                for (int t = 0; t < T; ++t) {
                    const double delta = rng.bernoulli(0.5) ? 0.25 : 0.0;
                    const int u = rng.bernoulli(u_high_prob(env, tr.actions, t)) ? 1 : 0;
                    const int z = rng.bernoulli(sigmoid(s + delta - 2.0)) ? 1 : 0;
                    const double pa = pi ? pi->prob1(tr.states.row(t))
                                         : sigmoid(s + 2.0 * z + (p.confounded ? 0.5 * u : 0.0) - 2.0);
                    const int a = rng.bernoulli(pa) ? 1 : 0;
                    const double pr = checked(sigmoid(s + a + u - 2.0), check);
                    tr.rewards[t] = rng.bernoulli(pr) ? 10.0 : 0.0;
                    s = rng.bernoulli(pr) ? 1 : 0;
                    tr.ivs[t] = z;
                    tr.actions[t] = a;
                    tr.states(t + 1, 0) = s;
                }
            } else if constexpr (std::is_same_v<P, Continuous2DParams>) {
                double s1 = rng.normal();
                double s2 = rng.normal();
                tr.states(0, 0) = s1;
                tr.states(0, 1) = s2;
                for (int t = 0; t < T; ++t) {
                    const double u = rng.bernoulli(u_high_prob(env, tr.actions, t)) ? 0.5 : -0.5;
                    const double x = s1 + s2;
                    const int z = rng.bernoulli(checked(sigmoid(x), check)) ? 1 : 0;
                    const double pa = pi ? pi->prob1(tr.states.row(t))
                                         : checked(sigmoid(x + 2.0 * z + (p.confounded ? u : 0.0)), check);
                    const int a = rng.bernoulli(pa) ? 1 : 0;
                    tr.rewards[t] = x + 2.0 * a + 2.5 * u;
                    s1 = s1 + 0.5 * u + a - 0.5;
                    s2 = s2 - 0.5 * u - a + 0.5;
                    tr.ivs[t] = z;
                    tr.actions[t] = a;
                    tr.states(t + 1, 0) = s1;
                    tr.states(t + 1, 1) = s2;
                }
            } else if constexpr (std::is_same_v<P, AdCampaignParams>) {
                Vector s(d);
                for (int j = 0; j < d; ++j) s(j) = rng.normal();
                tr.states.row(0) = s.transpose();
                Vector xa(d + 2), xr(d + 3);
                for (int t = 0; t < T; ++t) {
                    const double u = rng.bernoulli(0.5) ? 0.5 : -0.5;
                    const int z = rng.bernoulli(p.p_z) ? 1 : 0;
                    xa << 1.0, s, static_cast<double>(z);
                    const double pa = pi ? pi->prob1(tr.states.row(t))
                                         : checked(sigmoid(xa.dot(p.beta_a) + p.u_action * u), check);
                    const int a = rng.bernoulli(pa) ? 1 : 0;
                    xr << 1.0, s, static_cast<double>(z), static_cast<double>(a);
                    const double pr = checked(sigmoid(xr.dot(p.beta_r) + p.u_reward * u), check);
                    tr.rewards[t] = rng.bernoulli(pr) ? 1.0 : 0.0;
                    Vector next = p.transition * xr + p.u_state * u;
                    for (int j = 0; j < d; ++j) next(j) += p.sigma(j) * rng.normal();
                    if (check && !next.allFinite()) throw InvalidArgument("environment: non-finite state");
                    s = next;
                    tr.ivs[t] = z;
                    tr.actions[t] = a;
                    tr.states.row(t + 1) = s.transpose();
                }
            } else {
                int latent = rng.bernoulli(0.5) ? 1 : 0;
                for (int t = 0; t <= T; ++t) {
                    const int o = rng.bernoulli(p.flip_prob) ? 1 - latent : latent;
                    tr.states(t, 0) = o;
                    if (t == T) break;
                    const int z = rng.bernoulli(sigmoid(o - 1.0)) ? 1 : 0;
                    const double pa = pi ? pi->prob1(tr.states.row(t)) : sigmoid(o + 2.0 * z - 1.5);
                    const int a = rng.bernoulli(pa) ? 1 : 0;
                    tr.rewards[t] = rng.bernoulli(sigmoid(2.0 * latent + a - 1.5)) ? 10.0 : 0.0;
                    latent = rng.bernoulli(sigmoid(3.0 * latent + a - 2.0)) ? 1 : 0;
                    tr.ivs[t] = z;
                    tr.actions[t] = a;
                }
            }
        },
        env.params());
    return tr;
}

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
    out.push_back(',');
}

}  // namespace

void AdCampaignParams::validate() const {
    const int d = state_dim;
    if (d < 1) throw InvalidArgument("ad campaign: state_dim must be positive");
    if (!(p_z > 0.0 && p_z < 1.0)) throw InvalidArgument("ad campaign: p_z must lie in (0,1)");
    if (beta_a.size() != d + 2) throw InvalidArgument("ad campaign: beta_a needs state_dim + 2 entries (1, S, Z)");
    if (beta_r.size() != d + 3) throw InvalidArgument("ad campaign: beta_r needs state_dim + 3 entries (1, S, Z, A)");
    if (transition.rows() != d || transition.cols() != d + 3)
        throw InvalidArgument("ad campaign: transition must be state_dim x (state_dim + 3)");
    if (sigma.size() != d || (sigma.array() <= 0.0).any())
        throw InvalidArgument("ad campaign: sigma needs state_dim positive entries");
    if (u_state.size() != d) throw InvalidArgument("ad campaign: u_state needs state_dim entries");
    if (!beta_a.allFinite() || !beta_r.allFinite() || !transition.allFinite() || !u_state.allFinite())
        throw InvalidArgument("ad campaign: non-finite coefficient");
}

EnvSpec EnvSpec::toy_tabular(ToyTabularParams p) { return EnvSpec(p); }
EnvSpec EnvSpec::continuous_2d(Continuous2DParams p) { return EnvSpec(p); }
EnvSpec EnvSpec::partial_obs(PartialObsParams p) {
    if (!(p.flip_prob >= 0.0 && p.flip_prob < 0.5)) throw InvalidArgument("partial obs: flip_prob must lie in [0, 0.5)");
    return EnvSpec(p);
}

EnvSpec EnvSpec::ad_campaign(AdCampaignParams p) {
    p.validate();
    EnvSpec env(std::move(p));
    // Reachability check of every logistic success probability.
    RngStream rng = derive_rng_stream(0x5eed, "ad-campaign-check", 0);
    for (int i = 0; i < 200; ++i) {
        RngStream ep = rng.substream(i);
        simulate(env, nullptr, 50, ep, true);
    }
    return env;
}

EnvKind EnvSpec::kind() const noexcept { return static_cast<EnvKind>(params_.index()); }

int EnvSpec::state_dim() const {
    switch (kind()) {
    case EnvKind::Continuous2D: return 2;
    case EnvKind::AdCampaign: return std::get<AdCampaignParams>(params_).state_dim;
    default: return 1;
    }
}

bool EnvSpec::discrete() const { return kind() == EnvKind::ToyTabular || kind() == EnvKind::PartialObs; }

int EnvSpec::num_states() const { return discrete() ? 2 : 0; }

double EnvSpec::reward_bound() const {
    switch (kind()) {
    case EnvKind::ToyTabular:
    case EnvKind::PartialObs: return 10.0;
    case EnvKind::AdCampaign: return 1.0;
    default: return std::numeric_limits<double>::infinity();
    }
}

std::string EnvSpec::name() const {
    std::string base;
    switch (kind()) {
    case EnvKind::ToyTabular: base = "toy_tabular"; break;
    case EnvKind::Continuous2D: base = "continuous_2d"; break;
    case EnvKind::AdCampaign: base = "ad_campaign"; break;
    case EnvKind::PartialObs: base = "partial_obs"; break;
    }
    if (order_ > 1) base = "highorder" + std::to_string(order_) + "_" + base;
    return base;
}

std::uint64_t EnvSpec::hash() const {
    std::string key = name() + ",";
    append_double(key, lag_hi_);
    append_double(key, lag_lo_);
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, ToyTabularParams> || std::is_same_v<P, Continuous2DParams>) {
                key += p.confounded ? "c" : "u";
            } else if constexpr (std::is_same_v<P, PartialObsParams>) {
                append_double(key, p.flip_prob);
            } else {
                append_double(key, p.p_z);
                for (double v : p.beta_a) append_double(key, v);
                for (double v : p.beta_r) append_double(key, v);
                for (Eigen::Index i = 0; i < p.transition.size(); ++i) append_double(key, p.transition.data()[i]);
                for (double v : p.sigma) append_double(key, v);
                append_double(key, p.u_action);
                append_double(key, p.u_reward);
                for (double v : p.u_state) append_double(key, v);
            }
        },
        params_);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : key) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

double EnvSpec::true_pz1(Eigen::Ref<const Eigen::RowVectorXd> s) const {
    switch (kind()) {
    case EnvKind::ToyTabular: return 0.5 * sigmoid(s(0) + 0.25 - 2.0) + 0.5 * sigmoid(s(0) - 2.0);
    case EnvKind::Continuous2D: return sigmoid(s(0) + s(1));
    case EnvKind::AdCampaign: return std::get<AdCampaignParams>(params_).p_z;
    case EnvKind::PartialObs: return sigmoid(s(0) - 1.0);
    }
    return 0.0;
}

double EnvSpec::true_pa1(int z, Eigen::Ref<const Eigen::RowVectorXd> s) const {
    if (order_ != 1) throw InvalidArgument("true_pa1: observed process is not first-order Markov");
    switch (kind()) {
    case EnvKind::ToyTabular: {
        const bool conf = std::get<ToyTabularParams>(params_).confounded;
        const double base = s(0) + 2.0 * z - 2.0;
        return conf ? 0.5 * sigmoid(base) + 0.5 * sigmoid(base + 0.5) : sigmoid(base);
    }
    case EnvKind::Continuous2D: {
        const bool conf = std::get<Continuous2DParams>(params_).confounded;
        const double base = s(0) + s(1) + 2.0 * z;
        return conf ? 0.5 * sigmoid(base - 0.5) + 0.5 * sigmoid(base + 0.5) : sigmoid(base);
    }
    case EnvKind::AdCampaign: {
        const auto& p = std::get<AdCampaignParams>(params_);
        const int d = p.state_dim;
        const double eta = p.beta_a(0) + s.dot(p.beta_a.segment(1, d).transpose()) + p.beta_a(d + 1) * z;
        return 0.5 * sigmoid(eta - 0.5 * p.u_action) + 0.5 * sigmoid(eta + 0.5 * p.u_action);
    }
    case EnvKind::PartialObs: return sigmoid(s(0) + 2.0 * z - 1.5);
    }
    return 0.0;
}

TargetPolicy EnvSpec::default_target() const {
    switch (kind()) {
    case EnvKind::ToyTabular: return TargetPolicy::tabular({0.25, 0.5});
    case EnvKind::Continuous2D: {
        // Close to the low end of the range P(A=1|Z=0,s)..P(A=1|Z=1,s) that the
        // instrument can reach, where confounding moves the NUC baselines most.
        Vector beta(3);
        beta << 0.25, 1.0, 1.0;
        return TargetPolicy::logistic(beta);
    }
    case EnvKind::AdCampaign: {
        // Behavior action model with the IV replaced by its mean.
        const auto& p = std::get<AdCampaignParams>(params_);
        const int d = p.state_dim;
        Vector beta = p.beta_a.head(d + 1);
        beta(0) += p.beta_a(d + 1) * p.p_z;
        return TargetPolicy::logistic(beta);
    }
    case EnvKind::PartialObs: return TargetPolicy::tabular({0.3, 0.7});
    }
    return TargetPolicy();
}

EnvSpec make_highorder(const EnvSpec& base, int k, double q_hi, double q_lo) {
    if (k < 2) throw InvalidArgument("make_highorder: k must be >= 2");
    if (base.kind() != EnvKind::ToyTabular && base.kind() != EnvKind::Continuous2D)
        throw InvalidArgument("make_highorder: base must be ToyTabular or Continuous2D");
    if (base.order() != 1) throw InvalidArgument("make_highorder: base is already high-order");
    if (!(q_hi > 0.0 && q_hi < 1.0 && q_lo > 0.0 && q_lo < 1.0))
        throw InvalidArgument("make_highorder: lag probabilities must lie in (0,1)");
    EnvSpec env = base;
    env.order_ = k;
    env.lag_hi_ = q_hi;
    env.lag_lo_ = q_lo;
    return env;
}

Trajectory simulate_episode(const EnvSpec& env, const TargetPolicy* pi, int T, RngStream& rng) {
    if (T < 1) throw InvalidArgument("simulate_episode: T must be >= 1");
    return simulate(env, pi, T, rng, false);
}

namespace {

Dataset sample_impl(const EnvSpec& env, const TargetPolicy* pi, int n, int T, const RngStream& rng) {
    if (n < 1 || T < 1) throw InvalidArgument("sample: n and T must be >= 1");
    Dataset data;
    data.state_dim = env.state_dim();
    data.discrete = env.discrete();
    data.num_states = env.num_states();
    data.trajectories.reserve(n);
    for (int i = 0; i < n; ++i) {
        RngStream ep = rng.substream(static_cast<std::uint64_t>(i));
        data.trajectories.push_back(simulate(env, pi, T, ep, false));
    }
    return data;
}

}  // namespace

Dataset sample_dataset(const EnvSpec& env, int n, int T, const RngStream& rng) {
    return sample_impl(env, nullptr, n, T, rng);
}

Dataset sample_under_target(const EnvSpec& env, const TargetPolicy& pi, int n, int T, const RngStream& rng) {
    return sample_impl(env, &pi, n, T, rng);
}

}  // namespace ivope
