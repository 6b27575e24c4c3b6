#pragma once

#include "ivope/core.hpp"

#include <string>

namespace ivope {

/// Feature map ξ(s) over states.
class StateBasis {
public:
    enum class Kind { OneHot, Linear, Quadratic, Cubic };

    /// Indicator of each tabular state code 0..num_states-1.
    static StateBasis one_hot(int num_states);
    /// (1, s).
    static StateBasis linear(int state_dim);
    /// (1, s, s_i s_j for i <= j).
    static StateBasis quadratic(int state_dim);
    /// Quadratic terms plus s_i s_j s_k for i <= j <= k.
    static StateBasis cubic(int state_dim);
    /// One-hot for tabular data, quadratic otherwise.
    static StateBasis default_for(const Dataset& data);

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    int input_dim() const noexcept { return input_dim_; }
    void eval(Eigen::Ref<const Eigen::RowVectorXd> s, Eigen::Ref<Vector> out) const;
    Vector operator()(Eigen::Ref<const Eigen::RowVectorXd> s) const;

private:
    StateBasis(Kind kind, int input_dim, int dim) : kind_(kind), input_dim_(input_dim), dim_(dim) {}
    Kind kind_;
    int input_dim_;
    int dim_;
};

/// Name of a state basis kind ("one_hot", "linear", "quadratic", "cubic").
std::string state_basis_name(StateBasis::Kind k);

/// Feature map φ(s, z, a) over state, instrument and action. With `with_iv`
/// false the instrument is ignored, giving the (s, a) maps used by the
/// no-unmeasured-confounding baselines.
class SzaBasis {
public:
    enum class Kind { Table, Interactions, Tensor, Constant };

    /// One-hot over cells (s, z, a), index s*4 + z*2 + a (or s*2 + a without IV).
    static SzaBasis table(int num_states, bool with_iv = true);
    /// (1, s, z, a, s·z, s·a, z·a), or (1, s, a, s·a) without IV.
    static SzaBasis interactions(int state_dim, bool with_iv = true);
    /// ξ(s) ⊗ (1, z, a, z·a), or ξ(s) ⊗ (1, a) without IV.
    static SzaBasis tensor(const StateBasis& state, bool with_iv = true);
    /// The constant function only.
    static SzaBasis constant();
    static SzaBasis default_for(const Dataset& data, bool with_iv = true);

    Kind kind() const noexcept { return kind_; }
    bool with_iv() const noexcept { return with_iv_; }
    int dim() const noexcept { return dim_; }
    int input_dim() const noexcept { return input_dim_; }
    int cell(int s, int z, int a) const noexcept { return with_iv_ ? s * 4 + z * 2 + a : s * 2 + a; }
    void eval(Eigen::Ref<const Eigen::RowVectorXd> s, int z, int a, Eigen::Ref<Vector> out) const;
    Vector operator()(Eigen::Ref<const Eigen::RowVectorXd> s, int z, int a) const;

private:
    SzaBasis(Kind kind, bool with_iv, int input_dim, int dim)
        : kind_(kind), with_iv_(with_iv), input_dim_(input_dim), dim_(dim), state_(StateBasis::linear(1)) {}
    Kind kind_;
    bool with_iv_;
    int input_dim_;
    int dim_;
    StateBasis state_;
};

}  // namespace ivope
