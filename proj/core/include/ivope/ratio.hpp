#pragma once

#include "ivope/core.hpp"
#include "ivope/features.hpp"
#include "ivope/nuisance.hpp"

#include <span>
#include <vector>

namespace ivope {

/// Linear marginal density ratio ω(s) = ξ(s)ᵀβ.
struct OmegaModel {
    StateBasis basis = StateBasis::one_hot(1);
    Vector beta = Vector::Ones(1);
    /// True when the moment matrix needed ridge jitter.
    bool jittered = false;
    /// Reciprocal condition number of the moment matrix.
    double rcond = 1.0;

    double operator()(Eigen::Ref<const Eigen::RowVectorXd> s) const;

    /// ω from explicit per-state values on a one-hot basis.
    static OmegaModel table(std::vector<double> values);
};

/// Initial-state law: exact probabilities over tabular codes, or (when empty)
/// the empirical law of S_{i,0}.
using InitialLaw = std::vector<double>;

/// Closed-form linear minimax fit. Solves M β = (1-γ)·NT·E_ν ξ with
/// M_{jk} = Σ_{i,t} {ξ_j(S_t) − γ ρ̂(S_t, Z_t) ξ_j(S_{t+1})} ξ_k(S_t).
OmegaModel fit_omega(const Dataset& data, const RatioSet& ratios, double gamma, const StateBasis& basis,
                     const InitialLaw& nu = {});
OmegaModel fit_omega(const Dataset& data, const RatioSet& ratios, double gamma, const InitialLaw& nu = {});

/// Same system with arbitrary per-transition weights in place of ρ̂ (row i*T + t).
OmegaModel fit_omega_weighted(const Dataset& data, std::span<const double> weights, double gamma,
                              const StateBasis& basis, const InitialLaw& nu = {});

/// ρ̂(S_{i,t}, Z_{i,t}) for every transition, row i*T + t.
std::vector<double> transition_rho(const Dataset& data, const RatioSet& ratios);

/// Empirical L(ω, ξ_j) for every basis coordinate j:
/// (1-γ)E_ν ξ_j − (NT)⁻¹ Σ ω(S_t){ξ_j(S_t) − γ ρ ξ_j(S_{t+1})}.
Vector omega_moments(const Dataset& data, const OmegaModel& omega, std::span<const double> weights, double gamma,
                     const StateBasis& basis, const InitialLaw& nu = {});

/// (NT)⁻¹ Σ ω(S_t)(1 − γρ_t) − (1−γ); zero for a fitted ω whose basis spans constants.
double omega_identity_residual(const Dataset& data, const OmegaModel& omega, std::span<const double> weights,
                               double gamma);

}  // namespace ivope
