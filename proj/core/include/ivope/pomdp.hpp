#pragma once

#include "ivope/core.hpp"
#include "ivope/estimators.hpp"
#include "ivope/features.hpp"
#include "ivope/nuisance.hpp"

#include <optional>
#include <vector>

namespace ivope {

/// One training tuple for the future-dependent Q-function. Windows are
/// stored as feature inputs: a single mixed-radix code for tabular data, a
/// flattened vector otherwise.
struct HistoryFuturePair {
    int episode = 0;
    int t = 0;
    Eigen::RowVectorXd history;
    Eigen::RowVectorXd future;
    Eigen::RowVectorXd future_next;
    Eigen::RowVectorXd obs;       // O_t
    Eigen::RowVectorXd obs_next;  // O_{t+1}
    int z = 0;
    int a = 0;
    double r = 0.0;
};

struct HfDataset {
    std::vector<HistoryFuturePair> pairs;
    int m_h = 1;
    int m_f = 1;
    bool pad_history = false;
    bool discrete = false;
    int n_obs = 0;
    /// Tabular code counts (0 for continuous data).
    int history_codes = 0;
    int future_codes = 0;
    int history_dim = 0;
    int future_dim = 0;
    /// Index of each episode's first pair; its future window is F_{i,0}.
    std::vector<int> initial_index;
};

/// H = (O_{t-M_H:t-1}, A_{t-M_H:t-1}), F = (O_{t:t+M_F-1}, A_{t:t+M_F-2}).
/// Without padding t runs over M_H..T-M_F (T - M_H - M_F + 1 pairs per
/// episode). With padding, history slots before the episode start take a
/// reserved "absent" value and t starts at 0, so F_{i,0} is the window at t = 0.
HfDataset build_hf_dataset(const Dataset& data, int m_h, int m_f, bool pad_history = false);

/// Ridge weights are relative: α multiplies the mean diagonal of the
/// discriminator Gram matrix and α' the mean diagonal of KᵀM⁻¹K.
struct GqPenalties {
    double lambda = 1.0;
    double alpha = 1e-3;
    double alpha_prime = 1e-5;
};

/// g_Q(F, z, a) = θᵀφ_F(F, z, a) with discriminator ξ(H, Z, A) = wᵀψ_H(H, Z, A).
struct GQModel {
    SzaBasis q_basis = SzaBasis::constant();
    SzaBasis xi_basis = SzaBasis::constant();
    Vector theta;
    Vector w;
    GqPenalties penalties;
    double gamma = 0.0;
    /// Minimax objective ½(b − Kθ)ᵀM⁻¹(b − Kθ) + ½α'|θ|².
    double objective = 0.0;
    /// |b − Kθ|, the empirical moment norm.
    double residual_norm = 0.0;
    /// Condition numbers of K and of the discriminator Gram matrix.
    double k_condition = 0.0;
    double gram_condition = 0.0;
    /// Per-coordinate empirical moments mean_i 𝓛(g, ψ_j) = (b − Kθ)_j.
    Vector moments;
    /// λ G w + α w, the penalty-gradient counterpart of the moments.
    Vector penalty_gradient;

    double operator()(Eigen::Ref<const Eigen::RowVectorXd> f, int z, int a) const { return q_basis(f, z, a).dot(theta); }
};

struct GqOptions {
    GqPenalties penalties;
    std::optional<SzaBasis> q_basis;
    std::optional<SzaBasis> xi_basis;
};

/// Closed-form linear minimax: θ = (KᵀM⁻¹K + α'I)⁻¹KᵀM⁻¹b with b = E[ψR],
/// K = E[ψ(φ − γφ̄')ᵀ], G = E[ψψᵀ], M = λG + αI. Throws SingularSystem when
/// rank(K) < dim θ.
GQModel fit_gq(const HfDataset& hf, const RatioSet& ratios, double gamma, const GqOptions& opts = {});

/// (1/n) Σ_i Σ_{z,a} c(z|O_{i,0}) p_a(a|z,O_{i,0}) g_Q(F_{i,0}, z, a). Throws
/// OverlapError when |c| exceeds 1/δ_min.
EstimateReport estimate_pomdp_dm(const HfDataset& hf, const GQModel& gq, const RatioSet& ratios, double alpha = 0.05);

struct PomdpOptions {
    int m_h = 1;
    int m_f = 1;
    bool pad_history = true;
    double gamma = 0.9;
    double delta_min = 1e-3;
    GqOptions gq;
};

/// Fits p_z, p_a on observations, then g_Q, then the DM value.
EstimateReport pomdp_dm(const Dataset& data, const TargetPolicy& pi, const PomdpOptions& opts, double alpha = 0.05);

}  // namespace ivope
