// Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when any
// criterion fails. Optional arguments select criteria by number.

#include "ivope/envs.hpp"
#include "ivope/errors.hpp"
#include "ivope/estimators.hpp"
#include "ivope/experiment.hpp"
#include "ivope/oracle.hpp"
#include "ivope/parallel.hpp"
#include "ivope/pomdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace ivope;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentSpec load(const std::string& name) {
    return parse_spec(std::string(IVOPE_SOURCE_DIR) + "/configs/experiments/" + name + ".cfg");
}

int workers() { return default_workers(); }

const SummaryRow& row(const ExperimentResult& r, const std::string& est, const std::string& sc, int n) {
    for (const auto& x : r.rows)
        if (x.estimator == est && x.scenario == sc && x.n == n) return x;
    throw Error("no summary row for " + est + "/" + sc + "/" + std::to_string(n));
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string failures_note(const ExperimentResult& r) {
    int bad = 0;
    for (const auto& x : r.rows) bad += x.failures;
    return bad ? "; failed cells " + std::to_string(bad) : std::string();
}

// 1. exact DP, truncated sum and weighted Monte Carlo agree within their bounds.
Outcome triple_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    const EnvSpec env = EnvSpec::toy_tabular();
    const TargetPolicy pi = env.default_target();
    const OracleValue dp = exact_dp(env, pi, 0.9);
    const OracleValue bf = brute_force_sum(env, pi, 0.9, 10);
    const OracleValue mc = eta_mc(env, pi, 0.9, 1000000, 150, derive_rng_stream(20240601, "acceptance-mc", 0), workers());
    const double secs = seconds_since(t0);
    const bool a = std::abs(dp.eta - bf.eta) <= dp.error_bound + bf.error_bound;
    const bool b = std::abs(dp.eta - mc.eta) <= dp.error_bound + mc.error_bound;
    const bool c = std::abs(bf.eta - mc.eta) <= bf.error_bound + mc.error_bound;
    Outcome o;
    o.pass = a && b && c && secs < 60.0;
    o.detail = "dp " + fmt("%.4f", dp.eta) + ", bf(T=10) " + fmt("%.4f", bf.eta) + " +/- " + fmt("%.3f", bf.error_bound) +
               ", mc(1e6) " + fmt("%.4f", mc.eta) + " +/- " + fmt("%.4f", mc.error_bound) + ", " + fmt("%.1f", secs) + " s";
    return o;
}

// 2. DR double robustness on the toy model.
Outcome double_robustness() {
    const auto t0 = std::chrono::steady_clock::now();
    RunOptions ro;
    ro.workers = workers();
    const ExperimentResult r = run_experiment(load("fig1_double_robustness"), ro);
    const std::vector<int> ns = r.spec.n_grid;
    const int n_max = ns.back();
    bool pass = !r.any_failure;
    std::string d;
    for (const char* sc : {"M0", "M1", "M2"}) {
        const double bias = row(r, "dr", sc, n_max).rel_abs_bias;
        pass = pass && bias < 0.05;
        bool decreasing = true;
        std::string mse;
        for (std::size_t i = 0; i < ns.size(); ++i) {
            const double m = row(r, "dr", sc, ns[i]).median_rel_sq_err;
            mse += (i ? "/" : "") + fmt("%.2e", m);
            if (i && !(m < row(r, "dr", sc, ns[i - 1]).median_rel_sq_err)) decreasing = false;
        }
        pass = pass && decreasing;
        d += std::string(sc) + " bias " + fmt("%.4f", bias) + " mse " + mse + (decreasing ? "" : " (not decreasing)") + "; ";
    }
    const double m3 = row(r, "dr", "M3", n_max).rel_abs_bias;
    pass = pass && m3 > 0.10;
    d += "M3 bias " + fmt("%.3f", m3) + "; " + fmt("%.0f", seconds_since(t0)) + " s" + failures_note(r);
    return {pass, d};
}

// 3. IV-DR versus the NUC baselines on Continuous2D.
Outcome confounding_separation() {
    const auto t0 = std::chrono::steady_clock::now();
    RunOptions ro;
    ro.workers = workers();
    const ExperimentResult r = run_experiment(load("fig2_confounding"), ro);
    const std::vector<int> ns = r.spec.n_grid;
    const std::vector<std::string> nuc = {"nuc_dm", "nuc_mis", "nuc_drl"};
    bool sep = true;
    std::string d;
    for (int n : ns) {
        const double iv = std::abs(row(r, "dr", "M0", n).rel_abs_bias);
        double nuc_min = 1e300;
        for (const auto& e : nuc) nuc_min = std::min(nuc_min, row(r, e, "M0", n).rel_abs_bias);
        const bool ok = iv < nuc_min / 3.0;
        sep = sep && ok;
        d += "n=" + std::to_string(n) + " iv " + fmt("%.4f", iv) + " vs nuc min " + fmt("%.4f", nuc_min) + (ok ? "" : " (x)") + "; ";
    }
    bool iv_dec = true;
    for (std::size_t i = 1; i < ns.size(); ++i)
        if (!(row(r, "dr", "M0", ns[i]).rel_mse < row(r, "dr", "M0", ns[i - 1]).rel_mse)) iv_dec = false;
    bool plateau = true;
    for (const auto& e : nuc) {
        double lo = 1e300, hi = 0.0;
        for (int n : ns) {
            lo = std::min(lo, row(r, e, "M0", n).rel_mse);
            hi = std::max(hi, row(r, e, "M0", n).rel_mse);
        }
        const double change = hi / lo - 1.0;
        plateau = plateau && change < 0.20;
        d += e + " mse change " + fmt("%.0f%%", 100.0 * change) + "; ";
    }
    d += std::string("iv mse ") + (iv_dec ? "decreasing" : "not decreasing") + "; " + fmt("%.0f", seconds_since(t0)) + " s" +
         failures_note(r);
    return {sep && iv_dec && plateau && !r.any_failure, d};
}

// 4. Wald coverage of the oracle value.
Outcome coverage() {
    RunOptions ro;
    ro.workers = workers();
    const ExperimentResult r = run_experiment(load("coverage"), ro);
    const SummaryRow& x = row(r, "dr", "M0", 500);
    const bool pass = !r.any_failure && x.coverage >= 0.90 && x.coverage <= 0.99;
    return {pass, "coverage " + fmt("%.3f", x.coverage) + " over " + std::to_string(x.successes) + " reps" + failures_note(r)};
}

// 5. Influence-function pieces with oracle nuisances.
Outcome eif_structure() {
    const EnvSpec env = EnvSpec::toy_tabular();
    const TargetPolicy pi = env.default_target();
    const int n = 1000, T = 100;  // 10^5 transitions
    const Dataset data = sample_dataset(env, n, T, derive_rng_stream(555, "acceptance-eif", 0));
    const NuisanceSet nuis = oracle_nuisances(env, pi, 0.9, T);
    const AugmentationTerms aug = augmentation_terms(data, nuis);
    // Transitions within an episode are dependent, so the SE uses episode means.
    auto z_score = [&](const std::vector<double>& v) {
        std::vector<double> ep(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int t = 0; t < T; ++t) ep[i] += v[static_cast<std::size_t>(i) * T + t] / T;
        double m = 0.0;
        for (double x : ep) m += x;
        m /= n;
        double ss = 0.0;
        for (double x : ep) ss += (x - m) * (x - m);
        return m / std::sqrt(ss / (n - 1) / n);
    };
    const double z_phi = z_score(aug.phi), z2 = z_score(aug.psi2), z3 = z_score(aug.psi3);
    double worst = 0.0;
    for (std::size_t k = 0; k < aug.phi.size(); ++k)
        worst = std::max(worst, std::abs(aug.phi[k] - (aug.psi1[k] + aug.psi2[k] + aug.psi3[k])) / (1.0 + std::abs(aug.phi[k])));
    const bool pass = std::abs(z_phi) < 3.0 && std::abs(z2) < 3.0 && std::abs(z3) < 3.0 && worst < 1e-12;
    return {pass, "z(phi) " + fmt("%.2f", z_phi) + ", z(psi2) " + fmt("%.2f", z2) + ", z(psi3) " + fmt("%.2f", z3) +
                      ", max |phi - sum psi| " + fmt("%.1e", worst)};
}

// 6. Longer horizons shrink the standard error.
Outcome horizon_effect() {
    RunOptions ro;
    ro.workers = workers();
    ExperimentSpec s = load("horizon");
    auto median_se = [&](int T) {
        s.horizon = T;
        const ExperimentResult r = run_experiment(s, ro);
        if (r.any_failure) throw Error("horizon run had failed cells");
        return row(r, "dr", "M0", s.n_grid.front()).median_se;
    };
    const double se50 = median_se(50), se200 = median_se(200);
    return {se200 < se50, "median se T=50 " + fmt("%.4f", se50) + ", T=200 " + fmt("%.4f", se200)};
}

// 7. POMDP direct method reduces to DM on fully observed data.
Outcome pomdp_reduction() {
    const ExperimentSpec s = load("pomdp_reduction");
    const EnvSpec env = make_env(s);
    const TargetPolicy pi = make_policy(s, env);
    const int seeds = s.replications;
    std::vector<double> z(seeds, std::nan(""));
    std::vector<std::string> errs(seeds);
    parallel_for(seeds, workers(), [&](int k) {
        try {
            const Dataset d = sample_dataset(env, s.n_grid.front(), s.horizon, derive_rng_stream(s.seed, "data", k));
            NuisanceOptions no;
            no.gamma = s.gamma;
            const EstimateReport dm = estimate_dm(d, fit_nuisances(d, pi, no));
            PomdpOptions po;
            po.gamma = s.gamma;
            po.m_h = s.m_h;
            po.m_f = s.m_f;
            po.pad_history = s.pad_history;
            po.gq.penalties = s.penalties;
            const EstimateReport pd = pomdp_dm(d, pi, po);
            z[k] = std::abs(pd.eta_hat - dm.eta_hat) / std::hypot(pd.se, dm.se);
        } catch (const Error& e) {
            errs[k] = e.what();
        }
    });
    int agree = 0;
    double worst = 0.0;
    for (double v : z)
        if (std::isfinite(v)) {
            agree += v <= 2.0;
            worst = std::max(worst, v);
        }
    return {agree == seeds, std::to_string(agree) + "/" + std::to_string(seeds) + " within 2 combined SE, max " +
                                fmt("%.2f", worst)};
}

// 8. Markov-order selection.
Outcome model_selection() {
    RunOptions ro;
    ro.workers = workers();
    const ExperimentResult a = run_experiment(load("selection_order1"), ro);
    int order1 = 0, total = 0;
    for (const auto& rec : a.replications)
        if (rec.estimator == "select_dr") {
            ++total;
            order1 += rec.ok && rec.order == 1;
        }
    const double frac1 = total ? static_cast<double>(order1) / total : 0.0;

    const ExperimentResult b = run_experiment(load("selection_highorder"), ro);
    const double eta = b.oracle.eta;
    int rejected = 0, reps = 0;
    std::vector<double> sel_bias, naive_bias;
    for (const auto& rec : b.replications) {
        if (!rec.ok) continue;
        if (rec.estimator == "select_dr") {
            ++reps;
            rejected += rec.order != 1;
            sel_bias.push_back(std::abs(rec.report.eta_hat - eta));
        } else if (rec.estimator == "dr") {
            naive_bias.push_back(std::abs(rec.report.eta_hat - eta));
        }
    }
    const int planned = b.spec.replications;
    const double power = static_cast<double>(rejected) / planned;
    const double ms = median(sel_bias), mn = median(naive_bias);
    const bool pass = frac1 >= 0.80 && power >= 0.80 && ms < mn && total == a.spec.replications;
    return {pass, "order-1 env: order 1 in " + std::to_string(order1) + "/" + std::to_string(total) +
                      "; order-2 env: power " + fmt("%.2f", power) + " (" + std::to_string(reps) + " ok reps)" +
                      ", median |bias| selected " + fmt("%.3f", ms) + " vs naive " + fmt("%.3f", mn)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 9. Same spec and seed give byte-identical CSV files, for any worker count.
Outcome determinism() {
    const auto base = std::filesystem::temp_directory_path() / "ivope_acceptance_determinism";
    std::filesystem::remove_all(base);
    bool same = true;
    std::string d;
    for (const char* name : {"smoke", "pomdp_reduction"}) {
        ExperimentSpec s = load(name);
        if (std::string(name) == "pomdp_reduction") s.replications = 3;
        std::vector<std::string> outs;
        int run = 0;
        for (int w : {1, 1, 3}) {
            RunOptions ro;
            ro.workers = w;
            ro.out_dir = (base / (std::string(name) + std::to_string(run++))).string();
            run_experiment(s, ro);
            outs.push_back(slurp(std::filesystem::path(ro.out_dir) / s.output) +
                           slurp(std::filesystem::path(ro.out_dir) / (s.name + "_replications.csv")));
        }
        const bool ok = !outs[0].empty() && outs[0] == outs[1] && outs[0] == outs[2];
        same = same && ok;
        d += std::string(name) + (ok ? " identical" : " differs") + " (" + std::to_string(outs[0].size()) + " bytes); ";
    }
    std::filesystem::remove_all(base);
    return {same, d + "workers 1, 1, 3"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"triple-oracle agreement", triple_oracle},
        {"double robustness", double_robustness},
        {"confounding separation", confounding_separation},
        {"CI coverage", coverage},
        {"EIF structure", eif_structure},
        {"horizon effect", horizon_effect},
        {"POMDP reduction", pomdp_reduction},
        {"model selection", model_selection},
        {"determinism", determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
