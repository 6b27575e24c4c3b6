#include "ivope/history.hpp"

#include "ivope/errors.hpp"

namespace ivope {

int HistoryCoding::num_states() const {
    if (!discrete()) return 0;
    long long n = n_obs;
    for (int j = 1; j < order; ++j) {
        n *= lag_radix();
        if (n > (1LL << 24)) throw InvalidArgument("augmented state space too large");
    }
    return static_cast<int>(n);
}

HistoryCoding history_coding(const Dataset& data, int k) {
    if (k < 1) throw InvalidArgument("history order must be >= 1");
    HistoryCoding c;
    c.order = k;
    if (data.discrete) {
        c.n_obs = data.state_count();
        c.obs_dim = 1;
    } else {
        c.obs_dim = data.state_dim;
    }
    return c;
}

Dataset augment_history(const Dataset& data, int k) {
    const HistoryCoding coding = history_coding(data, k);
    if (k == 1) return data;
    data.validate();
    Dataset out;
    out.discrete = data.discrete;
    out.state_dim = coding.state_dim();
    out.num_states = coding.num_states();
    out.trajectories.reserve(data.trajectories.size());
    const int d = coding.obs_dim;
    for (const Trajectory& tr : data.trajectories) {
        Trajectory aug;
        aug.ivs = tr.ivs;
        aug.actions = tr.actions;
        aug.rewards = tr.rewards;
        const int T = tr.horizon();
        aug.states = RowMatrix::Zero(T + 1, out.state_dim);
        for (int t = 0; t <= T; ++t) {
            if (coding.discrete()) {
                long long code = tr.code(t);
                long long scale = coding.n_obs;
                for (int j = 1; j < k; ++j) {
                    const int s = t - j;
                    const int lag = s < 0 ? coding.pad_code()
                                          : tr.code(s) * 4 + tr.ivs[s] * 2 + tr.actions[s];
                    code += scale * lag;
                    scale *= coding.lag_radix();
                }
                aug.states(t, 0) = static_cast<double>(code);
            } else {
                aug.states.row(t).head(d) = tr.states.row(t);
                for (int j = 1; j < k; ++j) {
                    const int s = t - j;
                    if (s < 0) continue;
                    const int off = d + (j - 1) * (d + 3);
                    aug.states.row(t).segment(off, d) = tr.states.row(s);
                    aug.states(t, off + d) = tr.ivs[s];
                    aug.states(t, off + d + 1) = tr.actions[s];
                    aug.states(t, off + d + 2) = 1.0;
                }
            }
        }
        out.trajectories.push_back(std::move(aug));
    }
    return out;
}

TargetPolicy augment_policy(const TargetPolicy& pi, const HistoryCoding& coding) {
    if (coding.order == 1) return pi;
    if (coding.discrete()) {
        if (!pi.is_tabular()) throw InvalidArgument("tabular data needs a tabular target policy");
        const auto& base = std::get<TabularPolicy>(pi.kind()).prob1;
        if (static_cast<int>(base.size()) < coding.n_obs)
            throw InvalidArgument("target policy table smaller than observation space");
        std::vector<double> table(coding.num_states());
        for (int c = 0; c < coding.num_states(); ++c) table[c] = base[coding.observation(c)];
        return TargetPolicy::tabular(std::move(table));
    }
    if (pi.is_tabular()) throw InvalidArgument("continuous data needs a logistic target policy");
    const Vector& beta = std::get<LogisticPolicy>(pi.kind()).beta;
    Vector ext = Vector::Zero(1 + coding.state_dim());
    ext.head(beta.size()) = beta;
    return TargetPolicy::logistic(std::move(ext));
}

}  // namespace ivope
