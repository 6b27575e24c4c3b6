#include "ivope/core.hpp"

#include "ivope/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ivope {

void Trajectory::validate() const {
    const auto T = actions.size();
    if (ivs.size() != T || rewards.size() != T)
        throw InvalidArgument("trajectory: ivs/actions/rewards lengths differ");
    if (static_cast<std::size_t>(states.rows()) != T + 1)
        throw InvalidArgument("trajectory: states must have horizon + 1 rows");
    for (std::size_t t = 0; t < T; ++t) {
        if ((ivs[t] != 0 && ivs[t] != 1) || (actions[t] != 0 && actions[t] != 1))
            throw InvalidArgument("trajectory: Z_t and A_t must be binary (t=" + std::to_string(t) + ")");
    }
}

int Dataset::state_count() const {
    if (num_states > 0) return num_states;
    int hi = -1;
    for (const auto& tr : trajectories)
        for (Eigen::Index t = 0; t < tr.states.rows(); ++t) hi = std::max(hi, static_cast<int>(tr.states(t, 0)));
    return hi + 1;
}

void Dataset::validate() const {
    if (state_dim <= 0) throw InvalidArgument("dataset: state_dim must be positive");
    const int T = horizon();
    for (const auto& tr : trajectories) {
        tr.validate();
        if (tr.horizon() != T) throw InvalidArgument("dataset: trajectories must share one horizon");
        if (tr.state_dim() != state_dim) throw InvalidArgument("dataset: state_dim mismatch");
        if (discrete) {
            for (Eigen::Index t = 0; t < tr.states.rows(); ++t) {
                const double v = tr.states(t, 0);
                if (v < 0 || v != std::floor(v)) throw InvalidArgument("dataset: tabular states must be codes 0..|S|-1");
            }
        }
    }
}

TargetPolicy::TargetPolicy(TabularPolicy p) : kind_(std::move(p)) {
    for (double v : std::get<TabularPolicy>(kind_).prob1)
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("target policy: π(1|s) must lie in [0,1]");
}

TargetPolicy::TargetPolicy(LogisticPolicy p) : kind_(std::move(p)) {
    if (std::get<LogisticPolicy>(kind_).beta.size() == 0)
        throw InvalidArgument("target policy: empty logistic coefficients");
}

double TargetPolicy::prob1(Eigen::Ref<const Eigen::RowVectorXd> s) const {
    if (const auto* tab = std::get_if<TabularPolicy>(&kind_)) {
        const auto code = static_cast<std::size_t>(s(0));
        if (code >= tab->prob1.size()) throw InvalidArgument("target policy: state code out of range");
        return tab->prob1[code];
    }
    const auto& beta = std::get<LogisticPolicy>(kind_).beta;
    if (beta.size() != s.size() + 1) throw InvalidArgument("target policy: coefficient length must be state_dim + 1");
    return sigmoid(beta(0) + s.dot(beta.tail(s.size()).transpose()));
}

void RunConfig::validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in [0,1)");
    if (n_trajectories < 1 || horizon < 1) throw InvalidArgument("n_trajectories and horizon must be positive");
    if (!(overlap_floor > 0.0)) throw InvalidArgument("overlap floor must be positive");
    if (!(alpha_ci > 0.0 && alpha_ci < 1.0)) throw InvalidArgument("alpha_ci must lie in (0,1)");
    if (fqe_max_iters < 1 || !(fqe_tol > 0.0)) throw InvalidArgument("invalid FQE solver settings");
}

double discounted_return(const Trajectory& traj, double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in [0,1)");
    double total = 0.0;
    double discount = 1.0;
    for (double r : traj.rewards) {
        total += discount * r;
        discount *= gamma;
    }
    return total;
}

}  // namespace ivope
