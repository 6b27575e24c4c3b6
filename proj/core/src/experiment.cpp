#include "ivope/experiment.hpp"

#include "ivope/config.hpp"
#include "ivope/errors.hpp"
#include "ivope/parallel.hpp"
#include "ivope/select.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace ivope {

namespace {

const std::vector<std::string> kEnvNames = {"toy_tabular",   "toy_unconfounded", "continuous_2d",
                                            "continuous_unconfounded", "ad_campaign", "partial_obs",
                                            "highorder_toy", "highorder_continuous"};
const std::vector<std::string> kEstimatorNames = {"dm",      "mis",      "dr",       "nuc_dm",   "nuc_mis",
                                                  "nuc_drl", "pomdp_dm", "select_dr"};

bool is_iv_estimator(const std::string& e) { return e == "dm" || e == "mis" || e == "dr"; }

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    return s;
}

}  // namespace

void ExperimentSpec::validate() const {
    std::vector<std::string> bad;
    if (name.empty()) bad.push_back("name");
    if (std::find(kEnvNames.begin(), kEnvNames.end(), env) == kEnvNames.end()) bad.push_back("env");
    if (env == "ad_campaign" && env_params.empty()) bad.push_back("env_params");
    if (highorder_k < 2) bad.push_back("highorder_k");
    if (estimators.empty()) bad.push_back("estimators");
    for (const auto& e : estimators)
        if (std::find(kEstimatorNames.begin(), kEstimatorNames.end(), e) == kEstimatorNames.end())
            bad.push_back("estimators (" + e + ")");
    if (n_grid.empty() || std::any_of(n_grid.begin(), n_grid.end(), [](int n) { return n < 2; })) bad.push_back("n_grid");
    if (horizon < 2) bad.push_back("horizon");
    if (!(gamma >= 0.0 && gamma < 1.0)) bad.push_back("gamma");
    if (replications < 1) bad.push_back("replications");
    if (scenarios.empty()) bad.push_back("scenarios");
    if (nuisances != "fitted" && nuisances != "oracle") bad.push_back("nuisances");
    if (!(pz_alpha >= 0.0 && pz_alpha <= 1.0)) bad.push_back("pz_alpha");
    if (!(q_shift_variance >= 0.0)) bad.push_back("q_shift_variance");
    if (output.empty()) bad.push_back("output");
    if (policy_kind != "default" && policy_kind != "tabular" && policy_kind != "logistic") bad.push_back("policy.kind");
    if (policy_kind != "default" && policy_values.empty()) bad.push_back("policy values");
    if (!(delta_min > 0.0)) bad.push_back("delta_min");
    if (fqe_max_iters < 1) bad.push_back("fqe_max_iters");
    if (!(fqe_tol > 0.0)) bad.push_back("fqe_tol");
    if (!(alpha_ci > 0.0 && alpha_ci < 1.0)) bad.push_back("alpha_ci");
    if (max_order < 1) bad.push_back("max_order");
    if (!(order_alpha > 0.0 && order_alpha < 1.0)) bad.push_back("order_alpha");
    if (m_h < 1) bad.push_back("m_h");
    if (m_f < 1) bad.push_back("m_f");
    if (!(penalties.lambda > 0.0) || penalties.alpha < 0.0 || penalties.alpha_prime < 0.0) bad.push_back("pomdp penalties");
    if (oracle.mc_episodes < 2) bad.push_back("oracle.mc_episodes");
    if (oracle.mc_horizon < 1) bad.push_back("oracle.mc_horizon");
    if (!bad.empty()) {
        std::string msg = "invalid experiment spec; offending keys:";
        for (const auto& b : bad) msg += " " + b;
        throw InvalidArgument(msg);
    }
}

ExperimentSpec parse_spec(std::istream& in, const std::string& source) {
    const KeyValueFile file = parse_key_value(in, source);
    ExperimentSpec s;
    for (const auto& e : file.entries) {
        const std::string& k = e.key;
        const std::string& v = e.value;
        const int ln = e.line;
        auto unknown = [&] { throw ParseError("unknown key '" + k + "' in section [" + e.section + "]", ln); };
        if (e.section == "experiment" || e.section.empty()) {
            if (k == "name") s.name = v;
            else if (k == "env") s.env = v;
            else if (k == "env_params") s.env_params = v;
            else if (k == "highorder_k") s.highorder_k = static_cast<int>(parse_int(v, ln));
            else if (k == "estimators") s.estimators = parse_string_list(v, ln);
            else if (k == "n_grid") {
                s.n_grid.clear();
                for (long long n : parse_int_list(v, ln)) s.n_grid.push_back(static_cast<int>(n));
            } else if (k == "horizon") s.horizon = static_cast<int>(parse_int(v, ln));
            else if (k == "gamma") s.gamma = parse_double(v, ln);
            else if (k == "replications") s.replications = static_cast<int>(parse_int(v, ln));
            else if (k == "seed") s.seed = static_cast<std::uint64_t>(parse_int(v, ln));
            else if (k == "scenarios") {
                s.scenarios.clear();
                for (const auto& name : parse_string_list(v, ln)) {
                    try {
                        s.scenarios.push_back(parse_scenario(name));
                    } catch (const InvalidArgument& err) {
                        throw ParseError(err.what(), ln);
                    }
                }
            } else if (k == "nuisances") s.nuisances = v;
            else if (k == "pz_alpha") s.pz_alpha = parse_double(v, ln);
            else if (k == "q_shift_mean") s.q_shift_mean = parse_double(v, ln);
            else if (k == "q_shift_variance") s.q_shift_variance = parse_double(v, ln);
            else if (k == "output") s.output = v;
            else unknown();
        } else if (e.section == "policy") {
            if (k == "kind") s.policy_kind = v;
            else if (k == "prob1" || k == "beta") s.policy_values = parse_double_list(v, ln);
            else unknown();
        } else if (e.section == "estimation") {
            if (k == "delta_min") s.delta_min = parse_double(v, ln);
            else if (k == "fqe_max_iters") s.fqe_max_iters = static_cast<int>(parse_int(v, ln));
            else if (k == "fqe_tol") s.fqe_tol = parse_double(v, ln);
            else if (k == "alpha_ci") s.alpha_ci = parse_double(v, ln);
            else if (k == "nuc_iv_in_state") s.nuc_iv_in_state = parse_bool(v, ln);
            else if (k == "max_order") s.max_order = static_cast<int>(parse_int(v, ln));
            else if (k == "order_alpha") s.order_alpha = parse_double(v, ln);
            else if (k == "m_h") s.m_h = static_cast<int>(parse_int(v, ln));
            else if (k == "m_f") s.m_f = static_cast<int>(parse_int(v, ln));
            else if (k == "pad_history") s.pad_history = parse_bool(v, ln);
            else if (k == "pomdp_lambda") s.penalties.lambda = parse_double(v, ln);
            else if (k == "pomdp_alpha") s.penalties.alpha = parse_double(v, ln);
            else if (k == "pomdp_alpha_prime") s.penalties.alpha_prime = parse_double(v, ln);
            else unknown();
        } else if (e.section == "oracle") {
            if (k == "mc_episodes") s.oracle.mc_episodes = parse_int(v, ln);
            else if (k == "mc_horizon") s.oracle.mc_horizon = static_cast<int>(parse_int(v, ln));
            else if (k == "seed") s.oracle.seed = static_cast<std::uint64_t>(parse_int(v, ln));
            else unknown();
        } else {
            throw ParseError("unknown section [" + e.section + "]", ln);
        }
    }
    s.validate();
    return s;
}

ExperimentSpec parse_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open spec '" + path + "'");
    ExperimentSpec s = parse_spec(in, path);
    s.base_dir = std::filesystem::path(path).parent_path().string();
    return s;
}

EnvSpec make_env(const ExperimentSpec& spec) {
    const std::string& e = spec.env;
    if (e == "toy_tabular") return EnvSpec::toy_tabular();
    if (e == "toy_unconfounded") return EnvSpec::toy_tabular({false});
    if (e == "continuous_2d") return EnvSpec::continuous_2d();
    if (e == "continuous_unconfounded") return EnvSpec::continuous_2d({false});
    if (e == "partial_obs") return EnvSpec::partial_obs();
    if (e == "highorder_toy") return make_highorder(EnvSpec::toy_tabular(), spec.highorder_k);
    if (e == "highorder_continuous") return make_highorder(EnvSpec::continuous_2d(), spec.highorder_k);
    if (e == "ad_campaign") {
        std::filesystem::path p(spec.env_params);
        if (p.is_relative() && !spec.base_dir.empty()) p = std::filesystem::path(spec.base_dir) / p;
        return EnvSpec::ad_campaign(load_ad_campaign_params(p.string()));
    }
    throw InvalidArgument("unknown environment '" + e + "'");
}

TargetPolicy make_policy(const ExperimentSpec& spec, const EnvSpec& env) {
    if (spec.policy_kind == "tabular") return TargetPolicy::tabular(spec.policy_values);
    if (spec.policy_kind == "logistic") {
        const auto& v = spec.policy_values;
        return TargetPolicy::logistic(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return env.default_target();
}

namespace {

struct CellOutput {
    std::vector<ReplicationRecord> records;
    std::vector<std::pair<std::string, double>> timings;  // (estimator, seconds)
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& opts) {
    spec.validate();
    ExperimentResult result;
    result.spec = spec;
    const EnvSpec env = make_env(spec);
    const TargetPolicy pi = make_policy(spec, env);
    const int T = spec.horizon;

    OracleOptions oopts = spec.oracle;
    oopts.workers = std::max(1, opts.workers);
    if (!opts.oracle_cache.empty()) {
        OracleCache cache(opts.oracle_cache);
        result.oracle = cached_oracle_value(cache, env, pi, spec.gamma, oopts);
    } else {
        result.oracle = oracle_value(env, pi, spec.gamma, oopts);
    }
    const double eta_star = result.oracle.eta;

    NuisanceOptions nopts;
    nopts.gamma = spec.gamma;
    nopts.delta_min = spec.delta_min;
    nopts.fqe.max_iters = spec.fqe_max_iters;
    nopts.fqe.tol = spec.fqe_tol;
    NucOptions nuc;
    nuc.gamma = spec.gamma;
    nuc.iv_in_state = spec.nuc_iv_in_state;
    nuc.fqe = nopts.fqe;
    PomdpOptions popts;
    popts.m_h = spec.m_h;
    popts.m_f = spec.m_f;
    popts.pad_history = spec.pad_history;
    popts.gamma = spec.gamma;
    popts.delta_min = spec.delta_min;
    popts.gq.penalties = spec.penalties;
    SelectOptions sopts;
    sopts.max_order = spec.max_order;
    sopts.alpha = spec.order_alpha;
    sopts.nuisance = nopts;
    sopts.pomdp = popts;
    sopts.alpha_ci = spec.alpha_ci;

    std::vector<double> q_beta;
    if (env.discrete())
        q_beta = draw_q_shift(derive_rng_stream(spec.seed, "q-shift", 0), 4 * env.num_states(), spec.q_shift_mean,
                              spec.q_shift_variance);

    // Oracle nuisances are shared by every replication.
    std::optional<NuisanceSet> oracle_nuis;
    std::string oracle_nuis_error;
    const bool wants_iv = std::any_of(spec.estimators.begin(), spec.estimators.end(), is_iv_estimator);
    if (wants_iv && spec.nuisances == "oracle") {
        try {
            oracle_nuis = oracle_nuisances(env, pi, spec.gamma, T, spec.delta_min);
        } catch (const Error& e) {
            oracle_nuis_error = e.what();
        }
    }

    const int n_cells = static_cast<int>(spec.n_grid.size()) * spec.replications;
    std::vector<CellOutput> cells(n_cells);
    parallel_for(n_cells, std::max(1, opts.workers), [&](int cell) {
        const int ni = cell / spec.replications;
        const int rep = cell % spec.replications;
        const int n = spec.n_grid[ni];
        CellOutput& out = cells[cell];
        auto record = [&](const std::string& est, Scenario sc, auto&& fn) {
            ReplicationRecord r;
            r.estimator = est;
            r.scenario = scenario_name(sc);
            r.n = n;
            r.rep = rep;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                fn(r);
                r.ok = std::isfinite(r.report.eta_hat) && std::isfinite(r.report.se);
                if (!r.ok) r.error = "non-finite estimate";
            } catch (const Error& e) {
                r.ok = false;
                r.error = e.what();
            }
            out.timings.emplace_back(est + "|" + r.scenario, seconds_since(t0));
            out.records.push_back(std::move(r));
        };

        const std::uint64_t stream_index = (static_cast<std::uint64_t>(n) << 32) | static_cast<std::uint32_t>(rep);
        const Dataset data = sample_dataset(env, n, T, derive_rng_stream(spec.seed, "data", stream_index));

        std::optional<NuisanceSet> fitted;
        std::string fit_error;
        if (wants_iv) {
            if (spec.nuisances == "oracle") {
                fit_error = oracle_nuis_error;
            } else {
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    fitted = fit_nuisances(data, pi, nopts);
                } catch (const Error& e) {
                    fit_error = e.what();
                }
                out.timings.emplace_back("nuisance_fit|-", seconds_since(t0));
            }
        }
        const std::optional<NuisanceSet>& base = spec.nuisances == "oracle" ? oracle_nuis : fitted;

        for (const auto& est : spec.estimators) {
            if (is_iv_estimator(est)) {
                for (Scenario sc : spec.scenarios) {
                    record(est, sc, [&](ReplicationRecord& r) {
                        if (!base) throw Error("nuisance fit failed: " + fit_error);
                        const NuisanceSet nuis =
                            sc == Scenario::M0 ? *base
                                               : apply_misspecification(*base, scenario_misspec(sc, q_beta, spec.pz_alpha));
                        if (est == "dm") r.report = estimate_dm(data, nuis, spec.alpha_ci);
                        else if (est == "mis") r.report = estimate_mis(data, nuis, spec.alpha_ci);
                        else r.report = estimate_dr(data, nuis, spec.alpha_ci);
                    });
                }
                continue;
            }
            const Scenario sc = spec.scenarios.front();
            record(est, sc, [&](ReplicationRecord& r) {
                if (est == "nuc_dm") r.report = estimate_nuc_dm(data, pi, nuc, spec.alpha_ci);
                else if (est == "nuc_mis") r.report = estimate_nuc_mis(data, pi, nuc, spec.alpha_ci);
                else if (est == "nuc_drl") r.report = estimate_nuc_drl(data, pi, nuc, spec.alpha_ci);
                else if (est == "pomdp_dm") r.report = pomdp_dm(data, pi, popts, spec.alpha_ci);
                else {
                    SelectionResult sel = select_and_estimate(data, pi, sopts);
                    r.report = std::move(sel.report);
                    r.order = sel.order;
                }
            });
        }
        for (auto& r : out.records) r.report.contribs.clear();
    });

    // Deterministic aggregation in (estimator, scenario, n) order.
    for (const auto& est : spec.estimators) {
        std::vector<Scenario> scs = is_iv_estimator(est) ? spec.scenarios : std::vector<Scenario>{spec.scenarios.front()};
        for (Scenario sc : scs) {
            const std::string scn = scenario_name(sc);
            for (int ni = 0; ni < static_cast<int>(spec.n_grid.size()); ++ni) {
                SummaryRow row;
                row.estimator = est;
                row.scenario = scn;
                row.n = spec.n_grid[ni];
                std::vector<double> est_vals, ses, sq, orders;
                int covered = 0;
                for (int rep = 0; rep < spec.replications; ++rep) {
                    const CellOutput& c = cells[ni * spec.replications + rep];
                    for (const auto& r : c.records) {
                        if (r.estimator != est || r.scenario != scn) continue;
                        if (!r.ok) {
                            ++row.failures;
                            if (row.first_error.empty()) row.first_error = r.error;
                            continue;
                        }
                        ++row.successes;
                        est_vals.push_back(r.report.eta_hat);
                        ses.push_back(r.report.se);
                        const double rel = (r.report.eta_hat - eta_star) / eta_star;
                        sq.push_back(rel * rel);
                        if (r.report.ci_lo <= eta_star && eta_star <= r.report.ci_hi) ++covered;
                        if (r.order >= 0) orders.push_back(r.order);
                    }
                    for (const auto& [key, secs] : c.timings)
                        if (key == est + "|" + scn) row.wall_seconds += secs;
                }
                const double nan = std::numeric_limits<double>::quiet_NaN();
                auto mean = [](const std::vector<double>& v) {
                    double s = 0.0;
                    for (double x : v) s += x;
                    return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / v.size();
                };
                auto median = [](std::vector<double> v) {
                    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
                    std::sort(v.begin(), v.end());
                    const std::size_t m = v.size() / 2;
                    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
                };
                row.mean_estimate = mean(est_vals);
                row.rel_abs_bias = est_vals.empty() ? nan : std::abs(row.mean_estimate - eta_star) / std::abs(eta_star);
                row.rel_mse = mean(sq);
                row.median_rel_sq_err = median(sq);
                row.coverage = est_vals.empty() ? nan : static_cast<double>(covered) / est_vals.size();
                row.mean_se = mean(ses);
                row.median_se = median(ses);
                row.mean_order = mean(orders);
                if (row.failures > 0) result.any_failure = true;
                result.rows.push_back(std::move(row));
            }
        }
    }
    for (auto& c : cells)
        for (auto& r : c.records) result.replications.push_back(std::move(r));

    if (!opts.out_dir.empty()) {
        std::filesystem::create_directories(opts.out_dir);
        const std::filesystem::path dir(opts.out_dir);
        auto write = [&](const std::filesystem::path& p, const std::string& text) {
            std::ofstream f(p, std::ios::binary | std::ios::trunc);
            if (!f) throw InvalidArgument("cannot write '" + p.string() + "'");
            f << text;
        };
        write(dir / spec.output, summary_csv(result));
        write(dir / (spec.name + "_replications.csv"), replications_csv(result));
        write(dir / (spec.name + "_timing.csv"), timing_csv(result));
    }
    return result;
}

std::string summary_csv(const ExperimentResult& r) {
    std::ostringstream out;
    out << "experiment,env,estimator,scenario,n,T,gamma,replications,successes,failures,eta_star,"
           "eta_star_error_bound,oracle_method,mean_estimate,rel_abs_bias,rel_mse,median_rel_sq_err,coverage,"
           "mean_se,median_se,mean_order,first_error\n";
    for (const auto& row : r.rows) {
        out << r.spec.name << ',' << r.spec.env << ',' << row.estimator << ',' << row.scenario << ',' << row.n << ','
            << r.spec.horizon << ',' << fmt(r.spec.gamma) << ',' << r.spec.replications << ',' << row.successes << ','
            << row.failures << ',' << fmt(r.oracle.eta) << ',' << fmt(r.oracle.error_bound) << ','
            << oracle_method_name(r.oracle.method) << ',' << fmt(row.mean_estimate) << ',' << fmt(row.rel_abs_bias)
            << ',' << fmt(row.rel_mse) << ',' << fmt(row.median_rel_sq_err) << ',' << fmt(row.coverage) << ','
            << fmt(row.mean_se) << ',' << fmt(row.median_se) << ',' << fmt(row.mean_order) << ','
            << csv_safe(row.first_error) << '\n';
    }
    return out.str();
}

std::string replications_csv(const ExperimentResult& r) {
    std::ostringstream out;
    out << "experiment,scenario,rep,estimator," << report_csv_header() << ",order,error\n";
    for (const auto& rec : r.replications) {
        out << r.spec.name << ',' << rec.scenario << ',' << rec.rep << ',' << rec.estimator << ',';
        if (rec.ok) {
            out << report_csv_row(rec.report, rec.n, r.spec.horizon, r.spec.gamma, r.spec.seed);
        } else {
            out << "," << rec.n << ',' << r.spec.horizon << ',' << fmt(r.spec.gamma) << ",,,,," << r.spec.seed;
        }
        out << ',' << (rec.order >= 0 ? std::to_string(rec.order) : "") << ',' << csv_safe(rec.error) << '\n';
    }
    return out.str();
}

std::string timing_csv(const ExperimentResult& r) {
    std::ostringstream out;
    out << "experiment,estimator,scenario,n,wall_seconds\n";
    for (const auto& row : r.rows)
        out << r.spec.name << ',' << row.estimator << ',' << row.scenario << ',' << row.n << ','
            << fmt(row.wall_seconds) << '\n';
    return out.str();
}

}  // namespace ivope
