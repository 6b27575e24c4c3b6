#pragma once

#include "ivope/core.hpp"
#include "ivope/features.hpp"
#include "ivope/nuisance.hpp"

#include <vector>

namespace ivope {

/// Linear Q-function θᵀφ(s, z, a). Table kind is the one-hot basis. Models
/// built with a basis that ignores the IV are Q(s, a) functions.
struct QModel {
    SzaBasis basis = SzaBasis::constant();
    Vector theta = Vector::Zero(1);
    double gamma = 0.0;
    bool converged = true;
    int iterations = 0;
    /// Max-abs coefficient change per iteration.
    std::vector<double> change_history;

    bool is_table() const noexcept { return basis.kind() == SzaBasis::Kind::Table; }
    double operator()(Eigen::Ref<const Eigen::RowVectorXd> s, int z, int a) const;

    /// Q from explicit per-cell values on a table basis.
    static QModel table(int num_states, std::vector<double> cells, double gamma, bool with_iv = true);
};

struct FqeOptions {
    int max_iters = 500;
    double tol = 1e-6;
    /// Throw NonConvergence instead of returning an unconverged model.
    bool throw_on_nonconvergence = true;
};

/// The fitted-Q regression problem: design X = φ(S_t, Z_t, A_t), targets
/// R_t + γ·Φ̄'θ where Φ̄' averages φ(S_{t+1}, ·, ·) under the target weights.
class FqeProblem {
public:
    /// IV weights c(z|s') p_a(a|z,s') over (z, a).
    static FqeProblem iv(const Dataset& data, const RatioSet& ratios, const SzaBasis& basis);
    /// NUC weights π(a|s') over a; the basis must ignore the IV.
    static FqeProblem nuc(const Dataset& data, const TargetPolicy& pi, const SzaBasis& basis);

    /// One regression step θ ↦ (XᵀX)⁻¹Xᵀ(R + γΦ̄'θ).
    Vector update(const Vector& theta, double gamma) const;
    /// Iterates from θ = 0 until the max-abs change drops below tol.
    QModel solve(double gamma, const FqeOptions& opts = {}) const;
    /// (1/NT) Σ {R + γΦ̄'θ − Xθ} φ, the normal-equation residual.
    Vector residual(const Vector& theta, double gamma) const;

    const SzaBasis& basis() const noexcept { return basis_; }

private:
    FqeProblem(SzaBasis basis) : basis_(std::move(basis)) {}
    void factorize();

    SzaBasis basis_;
    Matrix X_;
    Matrix next_;   // Φ̄'
    Vector r_;
    Eigen::LDLT<Matrix> gram_;
};

/// Fitted-Q evaluation of Q^π(s, z, a). Defaults to the table basis for tabular
/// data and (1, s, z, a, s·z, s·a, z·a) otherwise.
QModel fqe_iv(const Dataset& data, const RatioSet& ratios, double gamma, const FqeOptions& opts = {});
QModel fqe_iv(const Dataset& data, const RatioSet& ratios, double gamma, const SzaBasis& basis,
              const FqeOptions& opts = {});

/// Fitted-Q evaluation of Q^π(s, a) under no unmeasured confounding.
QModel fqe_nuc(const Dataset& data, const TargetPolicy& pi, double gamma, const FqeOptions& opts = {});

/// V(s) = Σ_{z,a} c(z|s) p_a(a|z,s) Q(s,z,a).
double value_from_q(const QModel& q, const RatioSet& ratios, Eigen::Ref<const Eigen::RowVectorXd> s);
/// V(s) = Σ_a π(a|s) Q(s,a).
double value_from_q_nuc(const QModel& q, const TargetPolicy& pi, Eigen::Ref<const Eigen::RowVectorXd> s);

}  // namespace ivope
