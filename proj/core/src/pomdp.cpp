#include "ivope/pomdp.hpp"

#include "ivope/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ivope {

namespace {

Eigen::RowVectorXd future_window(const Trajectory& tr, int t, int m_f, const HfDataset& hf, int d) {
    if (hf.discrete) {
        long long code = 0, scale = 1;
        for (int j = 0; j < m_f; ++j) {
            code += scale * tr.code(t + j);
            scale *= hf.n_obs;
        }
        for (int j = 0; j + 1 < m_f; ++j) {
            code += scale * tr.actions[t + j];
            scale *= 2;
        }
        return Eigen::RowVectorXd::Constant(1, static_cast<double>(code));
    }
    Eigen::RowVectorXd f(hf.future_dim);
    for (int j = 0; j < m_f; ++j) f.segment(j * d, d) = tr.states.row(t + j);
    for (int j = 0; j + 1 < m_f; ++j) f(m_f * d + j) = tr.actions[t + j];
    return f;
}

Eigen::RowVectorXd history_window(const Trajectory& tr, int t, int m_h, const HfDataset& hf, int d) {
    if (hf.discrete) {
        long long code = 0, scale = 1;
        const int radix = 2 * hf.n_obs + 1;
        for (int j = 1; j <= m_h; ++j) {
            const int s = t - j;
            const int slot = s < 0 ? 2 * hf.n_obs : tr.code(s) * 2 + tr.actions[s];
            code += scale * slot;
            scale *= radix;
        }
        return Eigen::RowVectorXd::Constant(1, static_cast<double>(code));
    }
    Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(hf.history_dim);
    for (int j = 1; j <= m_h; ++j) {
        const int s = t - j;
        if (s < 0) continue;
        const int off = (j - 1) * (d + 2);
        h.segment(off, d) = tr.states.row(s);
        h(off + d) = tr.actions[s];
        h(off + d + 1) = 1.0;
    }
    return h;
}

long long ipow(long long b, int e) {
    long long r = 1;
    for (int i = 0; i < e; ++i) {
        r *= b;
        if (r > (1LL << 24)) throw InvalidArgument("window code space too large");
    }
    return r;
}

}  // namespace

HfDataset build_hf_dataset(const Dataset& data, int m_h, int m_f, bool pad_history) {
    if (m_h < 1 || m_f < 1) throw InvalidArgument("build_hf_dataset: M_H and M_F must be >= 1");
    data.validate();
    const int T = data.horizon();
    if (T < m_h + m_f + 1) throw InvalidArgument("build_hf_dataset: horizon too short for the windows");
    HfDataset hf;
    hf.m_h = m_h;
    hf.m_f = m_f;
    hf.pad_history = pad_history;
    hf.discrete = data.discrete;
    const int d = data.state_dim;
    if (data.discrete) {
        hf.n_obs = data.state_count();
        hf.future_codes = static_cast<int>(ipow(hf.n_obs, m_f) * ipow(2, m_f - 1));
        hf.history_codes = static_cast<int>(ipow(2 * hf.n_obs + 1, m_h));
        hf.future_dim = hf.history_dim = 1;
    } else {
        hf.future_dim = m_f * d + (m_f - 1);
        hf.history_dim = m_h * (d + 2);
    }
    const int t0 = pad_history ? 0 : m_h;
    const int t1 = T - m_f;  // inclusive
    hf.pairs.reserve(static_cast<std::size_t>(data.size()) * (t1 - t0 + 1));
    for (int i = 0; i < data.size(); ++i) {
        const Trajectory& tr = data.trajectories[i];
        hf.initial_index.push_back(static_cast<int>(hf.pairs.size()));
        for (int t = t0; t <= t1; ++t) {
            HistoryFuturePair p;
            p.episode = i;
            p.t = t;
            p.history = history_window(tr, t, m_h, hf, d);
            p.future = future_window(tr, t, m_f, hf, d);
            p.future_next = future_window(tr, t + 1, m_f, hf, d);
            p.obs = tr.states.row(t);
            p.obs_next = tr.states.row(t + 1);
            p.z = tr.ivs[t];
            p.a = tr.actions[t];
            p.r = tr.rewards[t];
            hf.pairs.push_back(std::move(p));
        }
    }
    return hf;
}

GQModel fit_gq(const HfDataset& hf, const RatioSet& ratios, double gamma, const GqOptions& opts) {
    if (hf.pairs.empty()) throw InvalidArgument("fit_gq: no history/future pairs");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("fit_gq: gamma must lie in [0,1)");
    const GqPenalties& pen = opts.penalties;
    if (!(pen.lambda > 0.0) || pen.alpha < 0.0 || pen.alpha_prime < 0.0)
        throw InvalidArgument("fit_gq: need λ > 0 and α, α' >= 0");
    GQModel g;
    g.penalties = pen;
    g.gamma = gamma;
    g.q_basis = opts.q_basis ? *opts.q_basis
                             : (hf.discrete ? SzaBasis::table(hf.future_codes) : SzaBasis::interactions(hf.future_dim));
    g.xi_basis = opts.xi_basis ? *opts.xi_basis
                               : (hf.discrete ? SzaBasis::table(hf.history_codes) : SzaBasis::interactions(hf.history_dim));
    const int p = g.q_basis.dim(), k = g.xi_basis.dim();
    Vector b = Vector::Zero(k);
    Matrix K = Matrix::Zero(k, p), G = Matrix::Zero(k, k);
    Vector phi(p), phi_bar(p), tmp(p), psi(k);
    for (const auto& pr : hf.pairs) {
        g.q_basis.eval(pr.future, pr.z, pr.a, phi);
        phi_bar.setZero();
        const auto c = ratios.c(pr.obs_next);
        for (int z = 0; z < 2; ++z)
            for (int a = 0; a < 2; ++a) {
                g.q_basis.eval(pr.future_next, z, a, tmp);
                phi_bar += c[z] * ratios.pa(a, z, pr.obs_next) * tmp;
            }
        g.xi_basis.eval(pr.history, pr.z, pr.a, psi);
        b += pr.r * psi;
        K.noalias() += psi * (phi - gamma * phi_bar).transpose();
        G.noalias() += psi * psi.transpose();
    }
    const double n = static_cast<double>(hf.pairs.size());
    b /= n;
    K /= n;
    G /= n;

    Eigen::JacobiSVD<Matrix> svd_k(K);
    const auto& sk = svd_k.singularValues();
    const double kmax = sk(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sk.size(); ++i)
        if (sk(i) > 1e-10 * kmax) ++rank;
    if (!(kmax > 0.0) || rank < p)
        throw SingularSystem("fit_gq: rank(K) = " + std::to_string(rank) + " < dim θ = " + std::to_string(p) +
                             " (invertibility condition fails for these bases)");
    g.k_condition = kmax / sk(std::min<Eigen::Index>(p, sk.size()) - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(G, Eigen::EigenvaluesOnly);
    const double gmin = eig.eigenvalues().minCoeff(), gmax = eig.eigenvalues().maxCoeff();
    g.gram_condition = gmin > 0.0 ? gmax / gmin : std::numeric_limits<double>::infinity();

    // Ridge terms are measured against the mean diagonal of the matrix they
    // regularize so the penalties do not depend on the scale of R or the bases.
    const double g_scale = std::max(G.diagonal().mean(), std::numeric_limits<double>::min());
    const Matrix M = pen.lambda * G + pen.alpha * g_scale * Matrix::Identity(k, k);
    Eigen::LDLT<Matrix> mldlt(M);
    if (mldlt.info() != Eigen::Success) throw SingularSystem("fit_gq: discriminator system not positive definite");
    const Matrix MinvK = mldlt.solve(K);
    const Vector Minvb = mldlt.solve(b);
    const Matrix KtMK = K.transpose() * MinvK;
    const double q_scale = std::max(KtMK.diagonal().mean(), std::numeric_limits<double>::min());
    const Matrix A = KtMK + pen.alpha_prime * q_scale * Matrix::Identity(p, p);
    g.theta = A.ldlt().solve(K.transpose() * Minvb);
    if (!g.theta.allFinite()) throw SingularSystem("fit_gq: non-finite solution");
    g.moments = b - K * g.theta;
    g.w = mldlt.solve(g.moments);
    g.penalty_gradient = pen.lambda * (G * g.w) + pen.alpha * g_scale * g.w;
    g.residual_norm = g.moments.norm();
    g.objective = 0.5 * g.moments.dot(g.w) + 0.5 * pen.alpha_prime * q_scale * g.theta.squaredNorm();
    return g;
}

EstimateReport estimate_pomdp_dm(const HfDataset& hf, const GQModel& gq, const RatioSet& ratios, double alpha) {
    if (hf.initial_index.empty()) throw InvalidArgument("estimate_pomdp_dm: no episodes");
    const double cap = 1.0 / ratios.delta_min();
    std::vector<double> contribs;
    contribs.reserve(hf.initial_index.size());
    for (int idx : hf.initial_index) {
        const HistoryFuturePair& p = hf.pairs[idx];
        const auto c = ratios.c(p.obs);
        if (std::abs(c[0]) > cap || std::abs(c[1]) > cap)
            throw OverlapError("estimate_pomdp_dm: |c(z|o)| exceeds 1/δ_min");
        double v = 0.0;
        for (int z = 0; z < 2; ++z)
            for (int a = 0; a < 2; ++a) v += c[z] * ratios.pa(a, z, p.obs) * gq(p.future, z, a);
        contribs.push_back(v);
    }
    return make_report(Method::PomdpDM, std::move(contribs), alpha);
}

EstimateReport pomdp_dm(const Dataset& data, const TargetPolicy& pi, const PomdpOptions& opts, double alpha) {
    const CondModel pz = fit_cond(data, CondTarget::ZGivenS);
    const CondModel pa = fit_cond(data, CondTarget::AGivenZS);
    const RatioSet ratios = build_ratios(pa, pz, pi, opts.delta_min);
    const HfDataset hf = build_hf_dataset(data, opts.m_h, opts.m_f, opts.pad_history);
    const GQModel gq = fit_gq(hf, ratios, opts.gamma, opts.gq);
    return estimate_pomdp_dm(hf, gq, ratios, alpha);
}

}  // namespace ivope
