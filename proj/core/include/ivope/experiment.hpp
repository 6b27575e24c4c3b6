#pragma once

#include "ivope/envs.hpp"
#include "ivope/estimators.hpp"
#include "ivope/oracle.hpp"
#include "ivope/pomdp.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ivope {

/// Estimators available to the experiment runner: the IV estimators dm, mis,
/// dr; the baselines nuc_dm, nuc_mis, nuc_drl; pomdp_dm; and select_dr
/// (order selection followed by DR or the POMDP direct method).
struct ExperimentSpec {
    std::string name = "experiment";
    /// toy_tabular, toy_unconfounded, continuous_2d, continuous_unconfounded,
    /// ad_campaign, partial_obs, highorder_toy, highorder_continuous.
    std::string env = "toy_tabular";
    std::string env_params;  // AdCampaign parameter file
    int highorder_k = 2;
    std::vector<std::string> estimators = {"dr"};
    std::vector<int> n_grid = {500};
    int horizon = 100;
    double gamma = 0.9;
    int replications = 10;
    std::uint64_t seed = 42;
    std::vector<Scenario> scenarios = {Scenario::M0};
    /// "fitted" or "oracle" (true tabular nuisances, ToyTabular only).
    std::string nuisances = "fitted";
    double pz_alpha = 0.55;
    double q_shift_mean = 5.0;
    double q_shift_variance = 4.0;
    std::string output = "summary.csv";

    // [policy]
    std::string policy_kind = "default";  // default, tabular, logistic
    std::vector<double> policy_values;

    // [estimation]
    double delta_min = 1e-3;
    int fqe_max_iters = 500;
    double fqe_tol = 1e-6;
    double alpha_ci = 0.05;
    bool nuc_iv_in_state = false;
    int max_order = 3;
    double order_alpha = 0.05;
    int m_h = 1;
    int m_f = 1;
    bool pad_history = true;
    GqPenalties penalties;

    // [oracle]
    OracleOptions oracle;

    /// Directory of the spec file, used to resolve relative paths.
    std::string base_dir;

    void validate() const;
};

ExperimentSpec parse_spec(std::istream& in, const std::string& source = "<stream>");
ExperimentSpec parse_spec(const std::string& path);

EnvSpec make_env(const ExperimentSpec& spec);
TargetPolicy make_policy(const ExperimentSpec& spec, const EnvSpec& env);

struct SummaryRow {
    std::string estimator;
    std::string scenario;
    int n = 0;
    int successes = 0;
    int failures = 0;
    double mean_estimate = 0.0;
    double rel_abs_bias = 0.0;
    double rel_mse = 0.0;
    double median_rel_sq_err = 0.0;
    double coverage = 0.0;
    double mean_se = 0.0;
    double median_se = 0.0;
    double mean_order = 0.0;
    double wall_seconds = 0.0;
    std::string first_error;
};

struct ReplicationRecord {
    std::string estimator;
    std::string scenario;
    int n = 0;
    int rep = 0;
    bool ok = false;
    EstimateReport report;
    int order = -1;
    std::string error;
};

struct ExperimentResult {
    ExperimentSpec spec;
    OracleValue oracle;
    std::vector<SummaryRow> rows;
    std::vector<ReplicationRecord> replications;
    bool any_failure = false;
};

struct RunOptions {
    int workers = 1;
    /// Output directory; empty means do not write files.
    std::string out_dir;
    /// Oracle cache file; empty disables caching.
    std::string oracle_cache;
};

/// Runs every (estimator, n, scenario, replication) cell. Module errors are
/// recorded per cell and the run continues. Writes <out>/<output> (summary),
/// <out>/<name>_replications.csv and <out>/<name>_timing.csv. The summary and
/// replication files depend only on the spec.
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {});

std::string summary_csv(const ExperimentResult& r);
std::string replications_csv(const ExperimentResult& r);
std::string timing_csv(const ExperimentResult& r);

}  // namespace ivope
