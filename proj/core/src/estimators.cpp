#include "ivope/estimators.hpp"

#include "ivope/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <charconv>
#include <cmath>

namespace ivope {

std::string method_name(Method m) {
    switch (m) {
    case Method::DM: return "dm";
    case Method::MIS: return "mis";
    case Method::DR: return "dr";
    case Method::NucDM: return "nuc_dm";
    case Method::NucMIS: return "nuc_mis";
    case Method::NucDRL: return "nuc_drl";
    case Method::PomdpDM: return "pomdp_dm";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::DM, Method::MIS, Method::DR, Method::NucDM, Method::NucMIS, Method::NucDRL,
                     Method::PomdpDM})
        if (method_name(m) == name) return m;
    throw InvalidArgument("unknown estimator '" + name + "'");
}

NuisanceOptions NuisanceOptions::from(const RunConfig& cfg) {
    cfg.validate();
    NuisanceOptions o;
    o.gamma = cfg.gamma;
    o.delta_min = cfg.overlap_floor;
    o.fqe.max_iters = cfg.fqe_max_iters;
    o.fqe.tol = cfg.fqe_tol;
    return o;
}

NuisanceSet fit_nuisances(const Dataset& data, const TargetPolicy& pi, const NuisanceOptions& opts) {
    data.validate();
    CondModel pz = fit_cond(data, CondTarget::ZGivenS);
    CondModel pa = fit_cond(data, CondTarget::AGivenZS);
    RatioSet ratios = build_ratios(pa, pz, pi, opts.delta_min);
    const SzaBasis qb = opts.q_basis ? *opts.q_basis : SzaBasis::default_for(data, true);
    const StateBasis ob = opts.omega_basis ? *opts.omega_basis : StateBasis::default_for(data);
    QModel q = fqe_iv(data, ratios, opts.gamma, qb, opts.fqe);
    OmegaModel omega = fit_omega(data, ratios, opts.gamma, ob, opts.nu);
    return NuisanceSet{std::move(ratios), std::move(q), std::move(omega), opts.gamma};
}

EstimateReport make_report(Method method, std::vector<double> contribs, double alpha) {
    if (contribs.empty()) throw InvalidArgument("estimate: no trajectories");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("estimate: alpha must lie in (0,1)");
    EstimateReport r;
    r.method = method;
    r.alpha = alpha;
    const double n = static_cast<double>(contribs.size());
    double mean = 0.0;
    for (double v : contribs) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : contribs) ss += (v - mean) * (v - mean);
    const double var = contribs.size() > 1 ? ss / (n - 1.0) : 0.0;
    r.eta_hat = mean;
    r.se = std::sqrt(var / n);
    const double zq = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
    r.ci_lo = mean - zq * r.se;
    r.ci_hi = mean + zq * r.se;
    r.contribs = std::move(contribs);
    return r;
}

namespace {

void put(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

std::string report_csv_header() { return "method,n,T,gamma,eta_hat,se,ci_lo,ci_hi,seed"; }

std::string report_csv_row(const EstimateReport& r, int n, int T, double gamma, std::uint64_t seed) {
    std::string s = method_name(r.method) + "," + std::to_string(n) + "," + std::to_string(T) + ",";
    put(s, gamma);
    for (double v : {r.eta_hat, r.se, r.ci_lo, r.ci_hi}) {
        s += ",";
        put(s, v);
    }
    s += "," + std::to_string(seed);
    return s;
}

EstimateReport estimate_dm(const Dataset& data, const NuisanceSet& nuis, double alpha) {
    std::vector<double> contribs;
    contribs.reserve(data.size());
    for (const auto& tr : data.trajectories) contribs.push_back(value_from_q(nuis.q, nuis.ratios, tr.state(0)));
    EstimateReport r = make_report(Method::DM, std::move(contribs), alpha);
    r.diagnostics.converged = nuis.q.converged;
    return r;
}

EstimateReport estimate_mis(const Dataset& data, const NuisanceSet& nuis, double alpha) {
    const int T = data.horizon();
    if (T < 1) throw InvalidArgument("estimate_mis: empty horizon");
    const double scale = 1.0 / ((1.0 - nuis.gamma) * T);
    std::vector<double> contribs;
    contribs.reserve(data.size());
    for (const auto& tr : data.trajectories) {
        double acc = 0.0;
        for (int t = 0; t < T; ++t)
            acc += nuis.omega(tr.state(t)) * nuis.ratios.rho(tr.state(t), tr.ivs[t]) * tr.rewards[t];
        contribs.push_back(acc * scale);
    }
    EstimateReport r = make_report(Method::MIS, std::move(contribs), alpha);
    r.diagnostics.omega_jittered = nuis.omega.jittered;
    return r;
}

AugmentationTerms augmentation_terms(const Dataset& data, const NuisanceSet& nuis) {
    const int T = data.horizon();
    const double g = nuis.gamma;
    const double inv = 1.0 / (1.0 - g);
    AugmentationTerms out;
    const std::size_t N = static_cast<std::size_t>(data.total_steps());
    for (auto* v : {&out.y, &out.e_y, &out.e_a, &out.delta, &out.weight, &out.phi, &out.psi1, &out.psi2, &out.psi3})
        v->reserve(N);
    const auto& q = nuis.q;
    const auto& rs = nuis.ratios;
    for (const auto& tr : data.trajectories) {
        for (int t = 0; t < T; ++t) {
            const auto s = tr.state(t);
            const int z = tr.ivs[t], a = tr.actions[t];
            const double y = tr.rewards[t] + g * value_from_q(q, rs, tr.state(t + 1));
            double ey_z[2];
            for (int zz = 0; zz < 2; ++zz) ey_z[zz] = rs.pa(0, zz, s) * q(s, zz, 0) + rs.pa(1, zz, s) * q(s, zz, 1);
            const double gap = rs.p1A(s) - rs.p0A(s);
            if (!(std::abs(gap) >= rs.delta_min())) throw IvWeakError(std::abs(gap), rs.delta_min());
            const double delta = (ey_z[1] - ey_z[0]) / gap;
            const double e_a = rs.pa(1, z, s);
            const double w = nuis.omega(s) * rs.rho(s, z);
            const double qa = q(s, z, a);
            out.y.push_back(y);
            out.e_y.push_back(ey_z[z]);
            out.e_a.push_back(e_a);
            out.delta.push_back(delta);
            out.weight.push_back(w);
            out.phi.push_back(inv * w * (y - ey_z[z] - (a - e_a) * delta));
            out.psi1.push_back(inv * w * (y - qa));
            out.psi2.push_back(inv * w * (qa - ey_z[z]));
            out.psi3.push_back(-inv * w * (a - e_a) * delta);
        }
    }
    return out;
}

EstimateReport estimate_dr(const Dataset& data, const NuisanceSet& nuis, double alpha) {
    const int T = data.horizon();
    if (T < 1) throw InvalidArgument("estimate_dr: empty horizon");
    const AugmentationTerms aug = augmentation_terms(data, nuis);
    std::vector<double> contribs;
    contribs.reserve(data.size());
    std::size_t row = 0;
    for (const auto& tr : data.trajectories) {
        double acc = 0.0;
        for (int t = 0; t < T; ++t, ++row) acc += aug.phi[row];
        contribs.push_back(value_from_q(nuis.q, nuis.ratios, tr.state(0)) + acc / T);
    }
    EstimateReport r = make_report(Method::DR, std::move(contribs), alpha);
    r.diagnostics.converged = nuis.q.converged;
    r.diagnostics.omega_jittered = nuis.omega.jittered;
    return r;
}

std::string scenario_name(Scenario s) {
    switch (s) {
    case Scenario::M0: return "M0";
    case Scenario::M1: return "M1";
    case Scenario::M2: return "M2";
    case Scenario::M3: return "M3";
    }
    return "?";
}

Scenario parse_scenario(const std::string& name) {
    for (Scenario s : {Scenario::M0, Scenario::M1, Scenario::M2, Scenario::M3})
        if (scenario_name(s) == name) return s;
    throw InvalidArgument("unknown misspecification scenario '" + name + "'");
}

std::vector<double> draw_q_shift(RngStream rng, int cells, double mean, double variance) {
    if (cells < 1 || !(variance >= 0.0)) throw InvalidArgument("draw_q_shift: invalid arguments");
    std::vector<double> beta(cells);
    const double sd = std::sqrt(variance);
    for (double& b : beta) b = mean + sd * rng.normal();
    return beta;
}

MisspecSpec scenario_misspec(Scenario s, const std::vector<double>& q_beta, double pz_alpha) {
    MisspecSpec spec;
    if (s == Scenario::M1 || s == Scenario::M3) {
        spec.omega_shift = true;
        spec.pz_alpha = pz_alpha;
    }
    if (s == Scenario::M2 || s == Scenario::M3) spec.q_beta = q_beta;
    return spec;
}

NuisanceSet apply_misspecification(const NuisanceSet& nuis, const MisspecSpec& spec) {
    NuisanceSet out = nuis;
    if (spec.omega_shift) {
        if (nuis.omega.basis.kind() != StateBasis::Kind::OneHot || nuis.omega.beta.size() != 2)
            throw InvalidArgument("apply_misspecification: ω shift needs a one-hot ω over two states");
        out.omega.beta(0) *= 2.0;
        out.omega.beta(1) *= 0.5;
    }
    if (spec.pz_alpha != 1.0) {
        if (!(spec.pz_alpha >= 0.0 && spec.pz_alpha <= 1.0))
            throw InvalidArgument("apply_misspecification: α must lie in [0,1]");
        const CondModel& pz = nuis.pz();
        if (pz.kind() != CondModel::Kind::FrequencyTable)
            throw InvalidArgument("apply_misspecification: p_z shift needs a tabular p_z");
        std::vector<double> cells = pz.cells();
        for (double& p : cells) p = spec.pz_alpha * p + (1.0 - spec.pz_alpha) * (1.0 - p);
        out.ratios = nuis.ratios.with_pz(CondModel::table(CondTarget::ZGivenS, std::move(cells)));
    }
    if (!spec.q_beta.empty()) {
        if (!nuis.q.is_table() || static_cast<Eigen::Index>(spec.q_beta.size()) != nuis.q.theta.size())
            throw InvalidArgument("apply_misspecification: Q shift needs a table Q with one draw per cell");
        for (std::size_t c = 0; c < spec.q_beta.size(); ++c) out.q.theta(static_cast<Eigen::Index>(c)) += spec.q_beta[c];
    }
    return out;
}

Dataset append_iv_to_state(const Dataset& data) {
    data.validate();
    const int T = data.horizon();
    if (T < 2) throw InvalidArgument("append_iv_to_state: horizon must be >= 2");
    Dataset out;
    out.discrete = data.discrete;
    out.state_dim = data.discrete ? 1 : data.state_dim + 1;
    out.num_states = data.discrete ? 2 * data.state_count() : 0;
    out.trajectories.reserve(data.size());
    for (const auto& tr : data.trajectories) {
        Trajectory n;
        n.states.resize(T, out.state_dim);
        for (int t = 0; t < T; ++t) {
            if (data.discrete) {
                n.states(t, 0) = tr.code(t) * 2 + tr.ivs[t];
            } else {
                n.states.row(t).head(data.state_dim) = tr.states.row(t);
                n.states(t, data.state_dim) = tr.ivs[t];
            }
        }
        n.ivs.assign(tr.ivs.begin(), tr.ivs.end() - 1);
        n.actions.assign(tr.actions.begin(), tr.actions.end() - 1);
        n.rewards.assign(tr.rewards.begin(), tr.rewards.end() - 1);
        out.trajectories.push_back(std::move(n));
    }
    return out;
}

namespace {

TargetPolicy policy_ignoring_iv(const TargetPolicy& pi, const Dataset& original) {
    if (original.discrete) {
        const auto& base = std::get<TabularPolicy>(pi.kind()).prob1;
        std::vector<double> table(2 * base.size());
        for (std::size_t s = 0; s < base.size(); ++s) table[2 * s] = table[2 * s + 1] = base[s];
        return TargetPolicy::tabular(std::move(table));
    }
    const Vector& beta = std::get<LogisticPolicy>(pi.kind()).beta;
    Vector ext = Vector::Zero(beta.size() + 1);
    ext.head(beta.size()) = beta;
    return TargetPolicy::logistic(std::move(ext));
}

struct NucSetup {
    Dataset data;
    TargetPolicy pi;
};

NucSetup nuc_setup(const Dataset& data, const TargetPolicy& pi, const NucOptions& opts) {
    if (!(opts.gamma >= 0.0 && opts.gamma < 1.0)) throw InvalidArgument("NUC: gamma must lie in [0,1)");
    if (opts.iv_in_state) return {append_iv_to_state(data), policy_ignoring_iv(pi, data)};
    data.validate();
    return {data, pi};
}

double nuc_value(const NucSetup& su, const QModel& q, Eigen::Ref<const Eigen::RowVectorXd> s) {
    return value_from_q_nuc(q, su.pi, s);
}

}  // namespace

std::vector<double> nuc_policy_ratios(const Dataset& data, const TargetPolicy& pi, const CondModel& pi0,
                                      double overlap_floor) {
    if (pi0.target() != CondTarget::AGivenS) throw InvalidArgument("NUC: π̂_0 must model A given S");
    const int T = data.horizon();
    std::vector<double> out;
    out.reserve(data.total_steps());
    for (const auto& tr : data.trajectories)
        for (int t = 0; t < T; ++t) {
            const double b = pi0.prob(tr.actions[t], tr.state(t));
            if (!(b >= overlap_floor))
                throw OverlapError("NUC: fitted behavior probability below overlap floor");
            out.push_back(pi.prob(tr.actions[t], tr.state(t)) / b);
        }
    return out;
}

EstimateReport estimate_nuc_dm(const Dataset& data, const TargetPolicy& pi, const NucOptions& opts, double alpha) {
    const NucSetup su = nuc_setup(data, pi, opts);
    const QModel q = fqe_nuc(su.data, su.pi, opts.gamma, opts.fqe);
    std::vector<double> contribs;
    contribs.reserve(su.data.size());
    for (const auto& tr : su.data.trajectories) contribs.push_back(nuc_value(su, q, tr.state(0)));
    EstimateReport r = make_report(Method::NucDM, std::move(contribs), alpha);
    r.diagnostics.converged = q.converged;
    return r;
}

EstimateReport estimate_nuc_mis(const Dataset& data, const TargetPolicy& pi, const NucOptions& opts, double alpha) {
    const NucSetup su = nuc_setup(data, pi, opts);
    const CondModel pi0 = fit_cond(su.data, CondTarget::AGivenS);
    const std::vector<double> beta = nuc_policy_ratios(su.data, su.pi, pi0, opts.overlap_floor);
    const OmegaModel omega = fit_omega_weighted(su.data, beta, opts.gamma, StateBasis::default_for(su.data));
    const int T = su.data.horizon();
    const double scale = 1.0 / ((1.0 - opts.gamma) * T);
    std::vector<double> contribs;
    contribs.reserve(su.data.size());
    std::size_t row = 0;
    for (const auto& tr : su.data.trajectories) {
        double acc = 0.0;
        for (int t = 0; t < T; ++t, ++row) acc += omega(tr.state(t)) * beta[row] * tr.rewards[t];
        contribs.push_back(acc * scale);
    }
    EstimateReport r = make_report(Method::NucMIS, std::move(contribs), alpha);
    r.diagnostics.omega_jittered = omega.jittered;
    return r;
}

EstimateReport estimate_nuc_drl(const Dataset& data, const TargetPolicy& pi, const NucOptions& opts, double alpha) {
    const NucSetup su = nuc_setup(data, pi, opts);
    const QModel q = fqe_nuc(su.data, su.pi, opts.gamma, opts.fqe);
    const CondModel pi0 = fit_cond(su.data, CondTarget::AGivenS);
    const std::vector<double> beta = nuc_policy_ratios(su.data, su.pi, pi0, opts.overlap_floor);
    const OmegaModel omega = fit_omega_weighted(su.data, beta, opts.gamma, StateBasis::default_for(su.data));
    const int T = su.data.horizon();
    const double inv = 1.0 / (1.0 - opts.gamma);
    std::vector<double> contribs;
    contribs.reserve(su.data.size());
    std::size_t row = 0;
    for (const auto& tr : su.data.trajectories) {
        double acc = 0.0;
        for (int t = 0; t < T; ++t, ++row) {
            const double y = tr.rewards[t] + opts.gamma * nuc_value(su, q, tr.state(t + 1));
            acc += inv * omega(tr.state(t)) * beta[row] * (y - q(tr.state(t), 0, tr.actions[t]));
        }
        contribs.push_back(nuc_value(su, q, tr.state(0)) + acc / T);
    }
    EstimateReport r = make_report(Method::NucDRL, std::move(contribs), alpha);
    r.diagnostics.converged = q.converged;
    r.diagnostics.omega_jittered = omega.jittered;
    return r;
}

}  // namespace ivope
