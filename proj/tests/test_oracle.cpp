#include "doctest.h"

#include "toy_reference.hpp"

#include "ivope/envs.hpp"
#include "ivope/errors.hpp"
#include "ivope/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace ivope;

namespace {

Eigen::RowVectorXd code(int s) { return Eigen::RowVectorXd::Constant(1, s); }

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("exact DP matches the closed-form reference") {
    const EnvSpec env = EnvSpec::toy_tabular();
    const OracleValue v = exact_dp(env, env.default_target(), 0.9);
    CHECK(v.eta == doctest::Approx(toyref::identified({0.25, 0.5}, 0.9).eta).epsilon(1e-12));
    // Frozen value of the default problem.
    CHECK(v.eta == doctest::Approx(33.3044583573423).epsilon(1e-12));
    CHECK(v.error_bound == 0.0);
    CHECK(exact_dp(env, TargetPolicy::tabular({0.5, 0.5}), 0.5).eta ==
          doctest::Approx(toyref::identified({0.5, 0.5}, 0.5).eta).epsilon(1e-12));
}

TEST_CASE("interventional DP, and identification without confounding") {
    const EnvSpec env = EnvSpec::toy_tabular();
    CHECK(exact_interventional_dp(env, env.default_target(), 0.9).eta ==
          doctest::Approx(toyref::interventional({0.25, 0.5}, 0.9)).epsilon(1e-12));
    const EnvSpec plain = EnvSpec::toy_tabular({false});
    const TargetPolicy pi = TargetPolicy::tabular({0.3, 0.7});
    CHECK(exact_dp(plain, pi, 0.9).eta == doctest::Approx(exact_interventional_dp(plain, pi, 0.9).eta).epsilon(1e-10));
}

TEST_CASE("tabular truth carries the reference Q and V") {
    const TabularTruth t = tabular_truth(tabular_model(EnvSpec::toy_tabular()), {0.25, 0.5}, 0.9);
    const auto ref = toyref::identified({0.25, 0.5}, 0.9);
    for (int c = 0; c < 8; ++c) CHECK(t.Q[c] == doctest::Approx(ref.Q[c]).epsilon(1e-12));
    for (int s = 0; s < 2; ++s) CHECK(t.V[s] == doctest::Approx(ref.V[s]).epsilon(1e-12));
}

TEST_CASE("literal and grouped brute force agree") {
    const EnvSpec env = EnvSpec::toy_tabular();
    for (int T = 0; T <= 4; ++T) {
        const double lit = brute_force_sum(env, env.default_target(), 0.9, T, BruteForceMode::Literal).eta;
        const double grp = brute_force_sum(env, env.default_target(), 0.9, T, BruteForceMode::Grouped).eta;
        CHECK(lit == doctest::Approx(grp).epsilon(1e-12));
    }
    CHECK_THROWS_AS(brute_force_sum(env, env.default_target(), 0.9, kBruteForceLiteralCap + 1, BruteForceMode::Literal),
                    InvalidArgument);
}

TEST_CASE("truncated sums close in on the DP value within their bounds") {
    const EnvSpec env = EnvSpec::toy_tabular();
    const double eta = exact_dp(env, env.default_target(), 0.9).eta;
    double prev_gap = 1e300;
    for (int T : {5, 10, 20, 40, 80}) {
        const OracleValue b = brute_force_sum(env, env.default_target(), 0.9, T);
        CHECK(b.error_bound == doctest::Approx(std::pow(0.9, T + 1) * 10.0 / 0.1));
        CHECK(std::abs(b.eta - eta) <= b.error_bound);
        CHECK(std::abs(b.eta - eta) < prev_gap);
        prev_gap = std::abs(b.eta - eta);
    }
}

TEST_CASE("T = 0 brute force is the immediate weighted reward") {
    const EnvSpec env = EnvSpec::toy_tabular();
    double expect = 0.0;
    for (int s = 0; s < 2; ++s) {
        const double c1 = toyref::c1(s, s == 0 ? 0.25 : 0.5);
        for (int z = 0; z < 2; ++z)
            for (int a = 0; a < 2; ++a)
                expect += 0.5 * (z ? c1 : 1.0 - c1) * (a ? toyref::pa1(z, s) : 1.0 - toyref::pa1(z, s)) *
                          toyref::mean_reward(s, z, a);
    }
    CHECK(brute_force_sum(env, env.default_target(), 0.9, 0).eta == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("weighted Monte Carlo is within its bound and reproducible") {
    const EnvSpec env = EnvSpec::toy_tabular();
    const double eta = exact_dp(env, env.default_target(), 0.9).eta;
    const RngStream rng = derive_rng_stream(5, "oracle-mc", 0);
    const OracleValue a = eta_mc(env, env.default_target(), 0.9, 20000, 120, rng, 1);
    const OracleValue b = eta_mc(env, env.default_target(), 0.9, 20000, 120, rng, 3);
    CHECK(a.eta == b.eta);
    CHECK(a.episodes == 20000);
    CHECK(std::abs(a.eta - eta) <= a.error_bound);
}

TEST_CASE("on-policy Monte Carlo tracks the interventional value") {
    const EnvSpec env = EnvSpec::toy_tabular();
    const double truth = toyref::interventional({0.25, 0.5}, 0.9);
    const OracleValue v = on_policy_mc(env, env.default_target(), 0.9, 20000, 120, derive_rng_stream(5, "on", 0));
    CHECK(std::abs(v.eta - truth) <= v.error_bound);
}

TEST_CASE("oracle nuisances") {
    const EnvSpec env = EnvSpec::toy_tabular();
    const NuisanceSet n = oracle_nuisances(env, env.default_target(), 0.9, 100);
    const auto ref = toyref::identified({0.25, 0.5}, 0.9);
    for (int s = 0; s < 2; ++s) {
        CHECK(n.ratios.pz(1, code(s)) == doctest::Approx(toyref::pz1(s)));
        CHECK(n.ratios.c(1, code(s)) == doctest::Approx(toyref::c1(s, s == 0 ? 0.25 : 0.5)));
        for (int z = 0; z < 2; ++z)
            for (int a = 0; a < 2; ++a) CHECK(n.q(code(s), z, a) == doctest::Approx(ref.Q[s * 4 + z * 2 + a]));
    }
    // ω averages to one under the pooled behavior law.
    CHECK(n.omega(code(0)) > 0.0);
    CHECK(n.omega(code(1)) > 0.0);
}

TEST_CASE("oracle dispatch and cache") {
    const EnvSpec env = EnvSpec::toy_tabular();
    OracleOptions o;
    o.mc_episodes = 500;
    o.mc_horizon = 20;
    CHECK(oracle_value(env, env.default_target(), 0.9, o).method == OracleMethod::ExactDP);
    const EnvSpec cont = EnvSpec::continuous_2d();
    CHECK(oracle_value(cont, cont.default_target(), 0.9, o).method == OracleMethod::MonteCarloInterventional);

    const auto path = std::filesystem::temp_directory_path() / "ivope_test_oracle_cache.csv";
    std::filesystem::remove(path);
    {
        OracleCache cache(path.string());
        const OracleValue v = cached_oracle_value(cache, cont, cont.default_target(), 0.9, o);
        OracleValue hit;
        CHECK(cache.lookup(OracleCache::key(cont, cont.default_target(), 0.9, o), hit));
        CHECK(hit.eta == v.eta);
    }
    OracleCache reread(path.string());
    OracleValue hit;
    REQUIRE(reread.lookup(OracleCache::key(cont, cont.default_target(), 0.9, o), hit));
    CHECK(hit.eta == oracle_value(cont, cont.default_target(), 0.9, o).eta);
    CHECK_FALSE(reread.lookup(OracleCache::key(cont, cont.default_target(), 0.8, o), hit));
    std::filesystem::remove(path);
    CHECK(policy_hash(TargetPolicy::tabular({0.2, 0.3})) != policy_hash(TargetPolicy::tabular({0.2, 0.31})));
}

TEST_CASE("behavior-implied policy") {
    const EnvSpec env = EnvSpec::toy_tabular();
    const TargetPolicy b = behavior_implied_policy(env);
    for (int s = 0; s < 2; ++s)
        CHECK(b.prob1(code(s)) ==
              doctest::Approx(toyref::pz1(s) * toyref::pa1(1, s) + (1 - toyref::pz1(s)) * toyref::pa1(0, s)));
}

}
