#pragma once

#include "ivope/core.hpp"
#include "ivope/nuisance.hpp"
#include "ivope/qlearn.hpp"
#include "ivope/ratio.hpp"
#include "ivope/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ivope {

enum class Method { DM, MIS, DR, NucDM, NucMIS, NucDRL, PomdpDM };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct NuisanceSet {
    RatioSet ratios;
    QModel q;
    OmegaModel omega;
    double gamma = 0.9;

    const CondModel& pa() const noexcept { return ratios.pa_model(); }
    const CondModel& pz() const noexcept { return ratios.pz_model(); }
};

struct NuisanceOptions {
    double gamma = 0.9;
    double delta_min = 1e-3;
    FqeOptions fqe;
    std::optional<SzaBasis> q_basis;
    std::optional<StateBasis> omega_basis;
    /// Exact initial law for the ω fit; empty means empirical S_0.
    InitialLaw nu;

    static NuisanceOptions from(const RunConfig& cfg);
};

/// Fits p_z, p_a, ratios, Q (fitted-Q) and ω (linear minimax) on `data`.
NuisanceSet fit_nuisances(const Dataset& data, const TargetPolicy& pi, const NuisanceOptions& opts);

struct EstimateDiagnostics {
    bool converged = true;
    bool omega_jittered = false;
    int weak_iv_count = 0;
};

struct EstimateReport {
    Method method = Method::DR;
    double eta_hat = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double alpha = 0.05;
    std::vector<double> contribs;
    EstimateDiagnostics diagnostics;
};

/// η̂ = mean of per-trajectory contributions, se = sd/√n, Wald interval.
EstimateReport make_report(Method method, std::vector<double> contribs, double alpha = 0.05);

std::string report_csv_header();
std::string report_csv_row(const EstimateReport& r, int n, int T, double gamma, std::uint64_t seed);

EstimateReport estimate_dm(const Dataset& data, const NuisanceSet& nuis, double alpha = 0.05);
EstimateReport estimate_mis(const Dataset& data, const NuisanceSet& nuis, double alpha = 0.05);
EstimateReport estimate_dr(const Dataset& data, const NuisanceSet& nuis, double alpha = 0.05);

/// Per-transition pieces of the augmentation term, row i*T + t.
struct AugmentationTerms {
    std::vector<double> y, e_y, e_a, delta, weight, phi, psi1, psi2, psi3;
};
AugmentationTerms augmentation_terms(const Dataset& data, const NuisanceSet& nuis);

enum class Scenario { M0, M1, M2, M3 };
std::string scenario_name(Scenario s);
Scenario parse_scenario(const std::string& name);

struct MisspecSpec {
    /// ω doubled at s = 0 and halved at s = 1.
    bool omega_shift = false;
    /// p_z(1|s) ↦ α p_z(1|s) + (1-α) p_z(0|s).
    double pz_alpha = 1.0;
    /// Per-cell additive shift of Q; empty means no shift.
    std::vector<double> q_beta;
};

/// Frozen per-cell Q shifts β(s,z,a) ~ N(mean, variance).
std::vector<double> draw_q_shift(RngStream rng, int cells, double mean = 5.0, double variance = 4.0);

/// M0: none; M1: ω and p_z shifted (Q correct); M2: Q shifted (ω, p_z correct); M3: all shifted.
MisspecSpec scenario_misspec(Scenario s, const std::vector<double>& q_beta, double pz_alpha = 0.55);

/// Shifted copy of tabular nuisances.
NuisanceSet apply_misspecification(const NuisanceSet& nuis, const MisspecSpec& spec);

struct NucOptions {
    double gamma = 0.9;
    /// Append Z_t to the state (the horizon shrinks by one step).
    bool iv_in_state = false;
    /// Smallest admissible fitted behavior probability π̂_0(a|s).
    double overlap_floor = 1e-4;
    FqeOptions fqe;
};

/// Dataset whose state is (S_t, Z_t), horizon T-1.
Dataset append_iv_to_state(const Dataset& data);

EstimateReport estimate_nuc_dm(const Dataset& data, const TargetPolicy& pi, const NucOptions& opts, double alpha = 0.05);
EstimateReport estimate_nuc_mis(const Dataset& data, const TargetPolicy& pi, const NucOptions& opts,
                                double alpha = 0.05);
EstimateReport estimate_nuc_drl(const Dataset& data, const TargetPolicy& pi, const NucOptions& opts,
                                double alpha = 0.05);

/// π(A_t|S_t)/π̂_0(A_t|S_t) per transition; throws OverlapError below the floor.
std::vector<double> nuc_policy_ratios(const Dataset& data, const TargetPolicy& pi, const CondModel& pi0,
                                      double overlap_floor);

}  // namespace ivope
