#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace ivope {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double sigmoid(double x) noexcept {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// One observed episode (S_0..S_T, Z_0..Z_{T-1}, A_0..A_{T-1}, R_0..R_{T-1}).
/// Row t of `states` is S_t; tabular states are integer codes in a 1-column matrix.
struct Trajectory {
    RowMatrix states;
    std::vector<int> ivs;
    std::vector<int> actions;
    std::vector<double> rewards;

    int horizon() const noexcept { return static_cast<int>(actions.size()); }
    int state_dim() const noexcept { return static_cast<int>(states.cols()); }
    Eigen::Ref<const Eigen::RowVectorXd> state(int t) const { return states.row(t); }
    /// Integer code of a tabular state.
    int code(int t) const { return static_cast<int>(states(t, 0)); }

    /// Throws InvalidArgument when the shape or binary-value invariants fail.
    void validate() const;
};

/// Rectangular panel of i.i.d. episodes.
struct Dataset {
    std::vector<Trajectory> trajectories;
    int state_dim = 1;
    bool discrete = false;
    /// Size of the tabular state space; 0 means "infer from the data".
    int num_states = 0;

    int size() const noexcept { return static_cast<int>(trajectories.size()); }
    int horizon() const noexcept { return trajectories.empty() ? 0 : trajectories.front().horizon(); }
    int total_steps() const noexcept { return size() * horizon(); }
    /// Tabular state count: num_states when set, otherwise max observed code + 1.
    int state_count() const;

    void validate() const;
};

/// Target policy π(1|s). Tabular tables are indexed by state code; the logistic
/// form is σ(β₀ + β₁ᵀs).
struct TabularPolicy {
    std::vector<double> prob1;
};
struct LogisticPolicy {
    Vector beta;
};

class TargetPolicy {
public:
    TargetPolicy() : TargetPolicy(TabularPolicy{{0.5}}) {}
    explicit TargetPolicy(TabularPolicy p);
    explicit TargetPolicy(LogisticPolicy p);

    static TargetPolicy tabular(std::vector<double> prob1) { return TargetPolicy(TabularPolicy{std::move(prob1)}); }
    static TargetPolicy logistic(Vector beta) { return TargetPolicy(LogisticPolicy{std::move(beta)}); }

    double prob1(Eigen::Ref<const Eigen::RowVectorXd> s) const;
    double prob(int a, Eigen::Ref<const Eigen::RowVectorXd> s) const {
        const double p = prob1(s);
        return a == 1 ? p : 1.0 - p;
    }
    bool is_tabular() const noexcept { return std::holds_alternative<TabularPolicy>(kind_); }
    const std::variant<TabularPolicy, LogisticPolicy>& kind() const noexcept { return kind_; }

private:
    std::variant<TabularPolicy, LogisticPolicy> kind_;
};

struct RunConfig {
    double gamma = 0.9;
    int n_trajectories = 500;
    int horizon = 100;
    std::uint64_t seed = 42;
    double overlap_floor = 1e-3;
    int fqe_max_iters = 500;
    double fqe_tol = 1e-6;
    double alpha_ci = 0.05;

    void validate() const;
};

double discounted_return(const Trajectory& traj, double gamma);

}  // namespace ivope
