#include "selftest.hpp"

#include "ivope/dataset_io.hpp"
#include "ivope/envs.hpp"
#include "ivope/estimators.hpp"
#include "ivope/experiment.hpp"
#include "ivope/oracle.hpp"
#include "ivope/pomdp.hpp"
#include "ivope/ratio.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace ivope::tools {

namespace {

struct Check {
    std::string name;
    std::function<std::string()> run;  // empty string on success, else the reason
};

std::string fail_if(bool bad, const std::string& why) { return bad ? why : std::string(); }

}  // namespace

int run_selftest(std::ostream& out) {
    const EnvSpec env = EnvSpec::toy_tabular();
    const TargetPolicy pi = env.default_target();
    const double gamma = 0.9;
    const Dataset data = sample_dataset(env, 300, 50, derive_rng_stream(7, "selftest", 0));
    NuisanceOptions nopts;
    nopts.gamma = gamma;
    const NuisanceSet nuis = fit_nuisances(data, pi, nopts);

    std::vector<Check> checks = {
        {"rng streams are reproducible",
         [] {
             RngStream a = derive_rng_stream(42, "env", 0), b = derive_rng_stream(42, "env", 0);
             for (int i = 0; i < 100; ++i)
                 if (a.uniform() != b.uniform()) return std::string("draw ") + std::to_string(i) + " differs";
             return std::string();
         }},
        {"c(0|s) + c(1|s) = 1",
         [&] {
             for (int s = 0; s < 2; ++s) {
                 const auto c = nuis.ratios.c(Eigen::RowVectorXd::Constant(1, s));
                 if (std::abs(c[0] + c[1] - 1.0) > 1e-14) return "state " + std::to_string(s);
             }
             return std::string();
         }},
        {"constant reward gives Q = 1/(1-gamma)",
         [&] {
             Dataset ones = data;
             for (auto& tr : ones.trajectories) std::fill(tr.rewards.begin(), tr.rewards.end(), 1.0);
             FqeOptions f;
             f.tol = 1e-12;
             f.max_iters = 2000;
             const QModel q = fqe_iv(ones, nuis.ratios, gamma, f);
             return fail_if((q.theta.array() - 1.0 / (1.0 - gamma)).abs().maxCoeff() > 1e-8, "Q not constant");
         }},
        {"DR - DM equals the mean augmentation",
         [&] {
             const double dm = estimate_dm(data, nuis).eta_hat, dr = estimate_dr(data, nuis).eta_hat;
             const AugmentationTerms aug = augmentation_terms(data, nuis);
             double s = 0.0;
             for (double v : aug.phi) s += v;
             return fail_if(std::abs(dr - dm - s / static_cast<double>(aug.phi.size())) > 1e-9, "decomposition off");
         }},
        {"phi = psi1 + psi2 + psi3 pointwise",
         [&] {
             const AugmentationTerms aug = augmentation_terms(data, nuis);
             for (std::size_t i = 0; i < aug.phi.size(); ++i)
                 if (std::abs(aug.phi[i] - aug.psi1[i] - aug.psi2[i] - aug.psi3[i]) > 1e-9 * (1.0 + std::abs(aug.phi[i])))
                     return "row " + std::to_string(i);
             return std::string();
         }},
        {"omega normal-equation identity",
         [&] {
             const auto rho = transition_rho(data, nuis.ratios);
             return fail_if(std::abs(omega_identity_residual(data, nuis.omega, rho, gamma)) > 1e-9, "residual");
         }},
        {"exact DP agrees with truncated brute force",
         [&] {
             const OracleValue dp = exact_dp(env, pi, gamma);
             const OracleValue bf = brute_force_sum(env, pi, gamma, 30);
             return fail_if(std::abs(dp.eta - bf.eta) > bf.error_bound, "gap exceeds bound");
         }},
        {"dataset csv round trip is bit exact",
         [&] {
             std::stringstream ss;
             write_dataset_csv(ss, data);
             const Dataset back = read_dataset_csv(ss, true);
             for (int i = 0; i < data.size(); ++i) {
                 const auto& a = data.trajectories[i];
                 const auto& b = back.trajectories[i];
                 if (a.states != b.states || a.ivs != b.ivs || a.actions != b.actions || a.rewards != b.rewards)
                     return "episode " + std::to_string(i);
             }
             return std::string();
         }},
        {"g_Q closed form is stationary",
         [&] {
             const HfDataset hf = build_hf_dataset(data, 1, 1, true);
             const GQModel g = fit_gq(hf, nuis.ratios, gamma);
             return fail_if((g.moments - g.penalty_gradient).cwiseAbs().maxCoeff() > 1e-10, "moment mismatch");
         }},
        {"experiment output is deterministic",
         [] {
             std::istringstream in("[experiment]\nname = selftest\nenv = toy_tabular\nestimators = dm, dr\n"
                                   "n_grid = 50\nhorizon = 20\nreplications = 2\nseed = 3\n");
             ExperimentSpec spec = parse_spec(in);
             RunOptions ro;
             const std::string a = summary_csv(run_experiment(spec, ro));
             const std::string b = summary_csv(run_experiment(spec, ro));
             return fail_if(a != b, "summaries differ");
         }},
    };

    int failures = 0;
    for (const auto& c : checks) {
        std::string why;
        try {
            why = c.run();
        } catch (const std::exception& e) {
            why = e.what();
        }
        if (why.empty()) {
            out << "PASS " << c.name << '\n';
        } else {
            ++failures;
            out << "FAIL " << c.name << ": " << why << '\n';
        }
    }
    out << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << '\n';
    return failures;
}

}  // namespace ivope::tools
