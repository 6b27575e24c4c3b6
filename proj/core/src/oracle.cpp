#include "ivope/oracle.hpp"

#include "ivope/errors.hpp"
#include "ivope/parallel.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace ivope {

std::string oracle_method_name(OracleMethod m) {
    switch (m) {
    case OracleMethod::ExactDP: return "exact_dp";
    case OracleMethod::BruteForceSum: return "brute_force_sum";
    case OracleMethod::MonteCarloWeighted: return "eta_mc";
    case OracleMethod::MonteCarloInterventional: return "on_policy_mc";
    }
    return "?";
}

std::vector<double> policy_on_model(const TabularModel& m, const TargetPolicy& pi) {
    if (!pi.is_tabular()) throw InvalidArgument("tabular oracle needs a tabular target policy");
    const auto& table = std::get<TabularPolicy>(pi.kind()).prob1;
    std::vector<double> out(m.num_states);
    if (static_cast<int>(table.size()) == m.num_states) return table;
    if (static_cast<int>(table.size()) != m.num_obs)
        throw InvalidArgument("target policy table size matches neither states nor observations");
    for (int s = 0; s < m.num_states; ++s) out[s] = table[s % m.num_obs];
    return out;
}

namespace {

double prob_next_obs(const TabularModel& m, int s, int z, int a, int o) {
    double p = 0.0;
    for (int r = 0; r < m.num_rewards(); ++r) p += m.prob_rs(s, z, a, r, o);
    return p;
}

std::vector<double> solve_values(const Matrix& P, const Vector& b, double gamma) {
    const int n = static_cast<int>(b.size());
    const Matrix A = Matrix::Identity(n, n) - gamma * P;
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible()) throw SingularSystem("exact_dp: singular Bellman system");
    const Vector v = lu.solve(b);
    return {v.data(), v.data() + n};
}

double c_weight(const std::vector<double>& c1, int s, int z) {
    return z == 1 ? c1[s] : 1.0 - c1[s];
}

}  // namespace

TabularTruth tabular_truth(const TabularModel& m, const std::vector<double>& pi1, double gamma, double delta_min) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in [0,1)");
    const int nS = m.num_states;
    TabularTruth tt;
    tt.c1.resize(nS);
    for (int s = 0; s < nS; ++s) {
        const double p1 = m.pa1[s * 2 + 1], p0 = m.pa1[s * 2];
        if (std::abs(p1 - p0) < delta_min) throw IvWeakError(std::abs(p1 - p0), delta_min);
        tt.c1[s] = (pi1[s] - p0) / (p1 - p0);
    }
    Matrix P = Matrix::Zero(nS, nS);
    Vector b = Vector::Zero(nS);
    for (int s = 0; s < nS; ++s)
        for (int z = 0; z < 2; ++z)
            for (int a = 0; a < 2; ++a) {
                const double w = c_weight(tt.c1, s, z) * m.pa(a, z, s);
                b(s) += w * m.mean_reward(s, z, a);
                for (int o = 0; o < m.num_obs; ++o) P(s, m.next_state(s, z, a, o)) += w * prob_next_obs(m, s, z, a, o);
            }
    tt.V = solve_values(P, b, gamma);
    tt.Q.assign(nS * 4, 0.0);
    for (int s = 0; s < nS; ++s)
        for (int z = 0; z < 2; ++z)
            for (int a = 0; a < 2; ++a) {
                double q = m.mean_reward(s, z, a);
                for (int o = 0; o < m.num_obs; ++o)
                    q += gamma * prob_next_obs(m, s, z, a, o) * tt.V[m.next_state(s, z, a, o)];
                tt.Q[s * 4 + z * 2 + a] = q;
            }
    tt.eta = 0.0;
    for (int s = 0; s < nS; ++s) tt.eta += m.nu[s] * tt.V[s];
    return tt;
}

OracleValue exact_dp(const EnvSpec& env, const TargetPolicy& pi, double gamma) {
    const TabularModel m = tabular_model(env);
    const TabularTruth tt = tabular_truth(m, policy_on_model(m, pi), gamma);
    OracleValue v;
    v.eta = tt.eta;
    v.method = OracleMethod::ExactDP;
    v.error_bound = 0.0;
    return v;
}

OracleValue exact_interventional_dp(const EnvSpec& env, const TargetPolicy& pi, double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in [0,1)");
    const TabularModel m = tabular_model(env);
    const std::vector<double> pi1 = policy_on_model(m, pi);
    const int nS = m.num_states, nU = m.num_u, nR = m.num_rewards(), nO = m.num_obs;
    Matrix P = Matrix::Zero(nS, nS);
    Vector b = Vector::Zero(nS);
    for (int s = 0; s < nS; ++s)
        for (int u = 0; u < nU; ++u)
            for (int a = 0; a < 2; ++a) {
                const double w = m.pu[s * nU + u] * (a == 1 ? pi1[s] : 1.0 - pi1[s]);
                for (int r = 0; r < nR; ++r)
                    for (int o = 0; o < nO; ++o) {
                        const double p = m.joint_u[(((s * 2 + a) * nU + u) * nR + r) * nO + o];
                        b(s) += w * p * m.reward_values[r];
                        // Z_t is still drawn from p_z; it only enters the successor through the lag window.
                        for (int z = 0; z < 2; ++z) P(s, m.next_state(s, z, a, o)) += w * m.pz(z, s) * p;
                    }
            }
    const std::vector<double> V = solve_values(P, b, gamma);
    OracleValue v;
    for (int s = 0; s < nS; ++s) v.eta += m.nu[s] * V[s];
    v.method = OracleMethod::ExactDP;
    return v;
}

OracleValue brute_force_sum(const EnvSpec& env, const TargetPolicy& pi, double gamma, int t_trunc, BruteForceMode mode) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in [0,1)");
    if (t_trunc < 0) throw InvalidArgument("brute_force_sum: T_trunc must be >= 0");
    const TabularModel m = tabular_model(env);
    const std::vector<double> pi1 = policy_on_model(m, pi);
    const int nS = m.num_states, nR = m.num_rewards(), nO = m.num_obs;
    std::vector<double> c1(nS);
    for (int s = 0; s < nS; ++s) {
        const double p1 = m.pa1[s * 2 + 1], p0 = m.pa1[s * 2];
        if (std::abs(p1 - p0) < 1e-3) throw IvWeakError(std::abs(p1 - p0), 1e-3);
        c1[s] = (pi1[s] - p0) / (p1 - p0);
    }
    if (mode == BruteForceMode::Auto) mode = t_trunc <= 4 ? BruteForceMode::Literal : BruteForceMode::Grouped;

    double total = 0.0;
    if (mode == BruteForceMode::Literal) {
        if (t_trunc > kBruteForceLiteralCap)
            throw InvalidArgument("brute_force_sum: literal enumeration capped at T_trunc = " +
                                  std::to_string(kBruteForceLiteralCap));
        std::vector<double> discount(t_trunc + 1, 1.0);
        for (int t = 1; t <= t_trunc; ++t) discount[t] = discount[t - 1] * gamma;
        std::function<void(int, int, double)> rec = [&](int s, int depth, double weight) {
            for (int z = 0; z < 2; ++z)
                for (int a = 0; a < 2; ++a) {
                    const double wza = weight * c_weight(c1, s, z) * m.pa(a, z, s);
                    for (int r = 0; r < nR; ++r)
                        for (int o = 0; o < nO; ++o) {
                            const double w = wza * m.prob_rs(s, z, a, r, o);
                            if (w == 0.0) continue;
                            total += discount[depth] * m.reward_values[r] * w;
                            if (depth < t_trunc) rec(m.next_state(s, z, a, o), depth + 1, w);
                        }
                }
        };
        for (int s = 0; s < nS; ++s)
            if (m.nu[s] != 0.0) rec(s, 0, m.nu[s]);
    } else {
        if (t_trunc > kBruteForceGroupedCap) throw InvalidArgument("brute_force_sum: T_trunc above cap");
        std::vector<double> mass = m.nu, next(nS);
        double discount = 1.0;
        for (int t = 0; t <= t_trunc; ++t) {
            std::fill(next.begin(), next.end(), 0.0);
            for (int s = 0; s < nS; ++s) {
                if (mass[s] == 0.0) continue;
                for (int z = 0; z < 2; ++z)
                    for (int a = 0; a < 2; ++a) {
                        const double wza = mass[s] * c_weight(c1, s, z) * m.pa(a, z, s);
                        for (int r = 0; r < nR; ++r)
                            for (int o = 0; o < nO; ++o) {
                                const double w = wza * m.prob_rs(s, z, a, r, o);
                                total += discount * m.reward_values[r] * w;
                                next[m.next_state(s, z, a, o)] += w;
                            }
                    }
            }
            mass.swap(next);
            discount *= gamma;
        }
    }
    OracleValue v;
    v.eta = total;
    v.method = OracleMethod::BruteForceSum;
    v.horizon = t_trunc;
    v.error_bound = std::pow(gamma, t_trunc + 1) * env.reward_bound() / (1.0 - gamma);
    return v;
}

namespace {

OracleValue monte_carlo(const EnvSpec& env, const TargetPolicy& pi, double gamma, long long n_episodes, int T,
                        const RngStream& rng, int workers, bool weighted) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in [0,1)");
    if (n_episodes < 2 || n_episodes > std::numeric_limits<int>::max() || T < 1)
        throw InvalidArgument("Monte Carlo oracle: need 2 <= N' < 2^31 and T >= 1");
    if (weighted && !env.has_true_conditionals())
        throw InvalidArgument("eta_mc: environment has no first-order observational conditionals");
    const int n = static_cast<int>(n_episodes);
    std::vector<double> values(n);
    parallel_for(n, workers, [&](int i) {
        RngStream r = rng.substream(static_cast<std::uint64_t>(i));
        const Trajectory tr = simulate_episode(env, weighted ? nullptr : &pi, T, r);
        double w = 1.0, disc = 1.0, total = 0.0;
        for (int t = 0; t < T; ++t) {
            if (weighted) {
                const auto s = tr.state(t);
                const int z = tr.ivs[t];
                const double pz1 = env.true_pz1(s);
                const double p1 = env.true_pa1(1, s), p0 = env.true_pa1(0, s);
                const double c1 = (pi.prob1(s) - p0) / (p1 - p0);
                w *= z == 1 ? c1 / pz1 : (1.0 - c1) / (1.0 - pz1);
            }
            total += disc * w * tr.rewards[t];
            disc *= gamma;
        }
        values[i] = total;
    });
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    OracleValue out;
    out.eta = mean;
    out.method = weighted ? OracleMethod::MonteCarloWeighted : OracleMethod::MonteCarloInterventional;
    out.horizon = T;
    out.episodes = n_episodes;
    out.sample_sd = std::sqrt(ss / (n - 1));
    out.error_bound = 3.0 * out.sample_sd / std::sqrt(static_cast<double>(n));
    if (std::isfinite(env.reward_bound())) out.error_bound += std::pow(gamma, T) * env.reward_bound() / (1.0 - gamma);
    return out;
}

}  // namespace

OracleValue eta_mc(const EnvSpec& env, const TargetPolicy& pi, double gamma, long long n_episodes, int T,
                   const RngStream& rng, int workers) {
    return monte_carlo(env, pi, gamma, n_episodes, T, rng, workers, true);
}

OracleValue on_policy_mc(const EnvSpec& env, const TargetPolicy& pi, double gamma, long long n_episodes, int T,
                         const RngStream& rng, int workers) {
    return monte_carlo(env, pi, gamma, n_episodes, T, rng, workers, false);
}

TargetPolicy behavior_implied_policy(const EnvSpec& env) {
    if (!env.discrete() || !env.has_true_conditionals())
        throw InvalidArgument("behavior_implied_policy: needs a first-order tabular environment");
    std::vector<double> table(env.num_states());
    Eigen::RowVectorXd s(1);
    for (int c = 0; c < env.num_states(); ++c) {
        s(0) = c;
        const double pz1 = env.true_pz1(s);
        table[c] = pz1 * env.true_pa1(1, s) + (1.0 - pz1) * env.true_pa1(0, s);
    }
    return TargetPolicy::tabular(std::move(table));
}

OracleValue oracle_value(const EnvSpec& env, const TargetPolicy& pi, double gamma, const OracleOptions& opts) {
    if (env.kind() == EnvKind::ToyTabular) return exact_dp(env, pi, gamma);
    const RngStream rng = derive_rng_stream(opts.seed, "oracle", env.hash() ^ policy_hash(pi));
    if (env.kind() == EnvKind::AdCampaign)
        return eta_mc(env, pi, gamma, opts.mc_episodes, opts.mc_horizon, rng, opts.workers);
    return on_policy_mc(env, pi, gamma, opts.mc_episodes, opts.mc_horizon, rng, opts.workers);
}

std::uint64_t policy_hash(const TargetPolicy& pi) {
    std::string key = pi.is_tabular() ? "tab" : "log";
    auto add = [&](double v) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof buf, v);
        key.append(buf, res.ptr);
        key.push_back(',');
    };
    if (pi.is_tabular()) {
        for (double v : std::get<TabularPolicy>(pi.kind()).prob1) add(v);
    } else {
        for (double v : std::get<LogisticPolicy>(pi.kind()).beta) add(v);
    }
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : key) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

OracleCache::OracleCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string key, eta, method, bound, horizon, episodes, sd;
        std::getline(ss, key, ',');
        std::getline(ss, eta, ',');
        std::getline(ss, method, ',');
        std::getline(ss, bound, ',');
        std::getline(ss, horizon, ',');
        std::getline(ss, episodes, ',');
        std::getline(ss, sd, ',');
        OracleValue v;
        try {
            v.eta = std::stod(eta);
            v.error_bound = std::stod(bound);
            v.horizon = std::stoi(horizon);
            v.episodes = std::stoll(episodes);
            v.sample_sd = std::stod(sd);
        } catch (const std::exception&) {
            continue;
        }
        for (OracleMethod m : {OracleMethod::ExactDP, OracleMethod::BruteForceSum, OracleMethod::MonteCarloWeighted,
                               OracleMethod::MonteCarloInterventional})
            if (oracle_method_name(m) == method) v.method = m;
        entries_[key] = v;
    }
}

std::string OracleCache::key(const EnvSpec& env, const TargetPolicy& pi, double gamma, const OracleOptions& opts) {
    std::ostringstream k;
    k << std::hex << env.hash() << '-' << policy_hash(pi) << std::dec << '-';
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, gamma);
    k << std::string(buf, res.ptr);
    if (env.kind() != EnvKind::ToyTabular) k << '-' << opts.mc_episodes << '-' << opts.mc_horizon << '-' << opts.seed;
    return k.str();
}

bool OracleCache::lookup(const std::string& key, OracleValue& out) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return false;
    out = it->second;
    return true;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

void OracleCache::store(const std::string& key, const OracleValue& v) {
    entries_[key] = v;
    if (path_.empty()) return;
    const std::filesystem::path p(path_);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write oracle cache '" + path_ + "'");
    out << "key,eta,method,error_bound,horizon,episodes,sample_sd\n";
    for (const auto& [k, e] : entries_)
        out << k << ',' << fmt(e.eta) << ',' << oracle_method_name(e.method) << ',' << fmt(e.error_bound) << ','
            << e.horizon << ',' << e.episodes << ',' << fmt(e.sample_sd) << '\n';
}

OracleValue cached_oracle_value(OracleCache& cache, const EnvSpec& env, const TargetPolicy& pi, double gamma,
                                const OracleOptions& opts) {
    const std::string k = OracleCache::key(env, pi, gamma, opts);
    OracleValue v;
    if (cache.lookup(k, v)) return v;
    v = oracle_value(env, pi, gamma, opts);
    cache.store(k, v);
    return v;
}

NuisanceSet oracle_nuisances(const EnvSpec& env, const TargetPolicy& pi, double gamma, int T, double delta_min) {
    if (T < 1) throw InvalidArgument("oracle_nuisances: T must be >= 1");
    const TabularModel m = tabular_model(env);
    const std::vector<double> pi1 = policy_on_model(m, pi);
    const TabularTruth tt = tabular_truth(m, pi1, gamma, delta_min);
    const int nS = m.num_states;

    // Discounted occupancy of the identified π-chain and the pooled behavior law.
    Matrix Ppi = Matrix::Zero(nS, nS), Pb = Matrix::Zero(nS, nS);
    for (int s = 0; s < nS; ++s)
        for (int z = 0; z < 2; ++z)
            for (int a = 0; a < 2; ++a)
                for (int o = 0; o < m.num_obs; ++o) {
                    const double p = m.pa(a, z, s) * prob_next_obs(m, s, z, a, o);
                    const int sn = m.next_state(s, z, a, o);
                    Ppi(s, sn) += (z == 1 ? tt.c1[s] : 1.0 - tt.c1[s]) * p;
                    Pb(s, sn) += m.pz(z, s) * p;
                }
    const Eigen::RowVectorXd nu = Eigen::Map<const Eigen::RowVectorXd>(m.nu.data(), nS);
    const Eigen::RowVectorXd occ =
        (1.0 - gamma) * (Matrix::Identity(nS, nS) - gamma * Ppi).transpose().fullPivLu().solve(nu.transpose()).transpose();
    Eigen::RowVectorXd pt = nu, pooled = Eigen::RowVectorXd::Zero(nS);
    for (int t = 0; t < T; ++t) {
        pooled += pt / T;
        pt = pt * Pb;
    }
    std::vector<double> omega(nS, 0.0);
    for (int s = 0; s < nS; ++s) omega[s] = pooled(s) > 0.0 ? occ(s) / pooled(s) : 0.0;

    TargetPolicy pim = TargetPolicy::tabular(pi1);
    CondModel pz = CondModel::table(CondTarget::ZGivenS, m.pz1);
    CondModel pa = CondModel::table(CondTarget::AGivenZS, m.pa1);
    RatioSet ratios(pa, pz, pim, delta_min);
    QModel q = QModel::table(nS, tt.Q, gamma);
    return NuisanceSet{std::move(ratios), std::move(q), OmegaModel::table(std::move(omega)), gamma};
}

}  // namespace ivope
