#include "doctest.h"

#include "ivope/envs.hpp"
#include "ivope/errors.hpp"
#include "ivope/estimators.hpp"
#include "ivope/history.hpp"
#include "ivope/oracle.hpp"
#include "ivope/pomdp.hpp"
#include "ivope/select.hpp"

#include <cmath>

using namespace ivope;

namespace {

const Dataset& toy_data() {
    static const Dataset d = sample_dataset(EnvSpec::toy_tabular(), 300, 40, derive_rng_stream(8, "pomdp", 0));
    return d;
}

RatioSet toy_ratios() {
    return build_ratios(fit_cond(toy_data(), CondTarget::AGivenZS), fit_cond(toy_data(), CondTarget::ZGivenS),
                        TargetPolicy::tabular({0.25, 0.5}));
}

}  // namespace

TEST_SUITE("pomdp") {

TEST_CASE("history/future pairs") {
    const Dataset& d = toy_data();
    const HfDataset plain = build_hf_dataset(d, 2, 3, false);
    CHECK(plain.pairs.size() == static_cast<std::size_t>(d.size() * (40 - 2 - 3 + 1)));
    CHECK(plain.pairs[plain.initial_index[1]].t == 2);
    CHECK(plain.future_codes == 8 * 4);
    CHECK(plain.history_codes == 5 * 5);
    const HfDataset padded = build_hf_dataset(d, 1, 1, true);
    CHECK(padded.pairs.size() == static_cast<std::size_t>(d.size() * 40));
    const HistoryFuturePair& first = padded.pairs[padded.initial_index[7]];
    CHECK(first.t == 0);
    CHECK(first.episode == 7);
    CHECK(first.history(0) == 4.0);  // reserved "absent" slot 2·n_obs
    CHECK(first.future(0) == d.trajectories[7].code(0));
    CHECK(padded.pairs[padded.initial_index[7] + 5].history(0) ==
          d.trajectories[7].code(4) * 2 + d.trajectories[7].actions[4]);
    CHECK_THROWS_AS(build_hf_dataset(d, 20, 20, false), InvalidArgument);
    CHECK_THROWS_AS(build_hf_dataset(d, 0, 1, false), InvalidArgument);
}

TEST_CASE("closed-form minimax solution is stationary") {
    const HfDataset hf = build_hf_dataset(toy_data(), 1, 1, true);
    const GQModel g = fit_gq(hf, toy_ratios(), 0.9);
    REQUIRE(g.theta.allFinite());
    // The inner maximiser w solves M w = b - Kθ.
    CHECK((g.penalty_gradient - g.moments).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + g.moments.cwiseAbs().maxCoeff()));
    CHECK(g.objective >= 0.0);
    CHECK(g.k_condition >= 1.0);
    // Scaling λ and α together rescales M and both ridges; θ is unchanged.
    GqOptions scaled;
    scaled.penalties.lambda = 7.0;
    scaled.penalties.alpha = 7.0 * g.penalties.alpha;
    const GQModel s = fit_gq(hf, toy_ratios(), 0.9, scaled);
    CHECK((s.theta - g.theta).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + g.theta.cwiseAbs().maxCoeff()));
}

TEST_CASE("rank-deficient bases are refused") {
    const HfDataset hf = build_hf_dataset(toy_data(), 1, 1, true);
    GqOptions o;
    o.xi_basis = SzaBasis::constant();
    CHECK_THROWS_AS(fit_gq(hf, toy_ratios(), 0.9, o), SingularSystem);
    GqOptions bad;
    bad.penalties.lambda = 0.0;
    CHECK_THROWS_AS(fit_gq(hf, toy_ratios(), 0.9, bad), InvalidArgument);
}

TEST_CASE("fully observed toy: POMDP direct method agrees with DM") {
    const TargetPolicy pi = TargetPolicy::tabular({0.25, 0.5});
    NuisanceOptions no;
    const EstimateReport dm = estimate_dm(toy_data(), fit_nuisances(toy_data(), pi, no));
    const EstimateReport pd = pomdp_dm(toy_data(), pi, PomdpOptions{});
    CHECK(std::abs(dm.eta_hat - pd.eta_hat) < 2.0 * std::hypot(dm.se, pd.se));
    CHECK(pd.method == Method::PomdpDM);
}

TEST_CASE("partially observed data runs end to end") {
    const EnvSpec env = EnvSpec::partial_obs();
    const Dataset d = sample_dataset(env, 300, 40, derive_rng_stream(8, "po", 0));
    PomdpOptions o;
    o.m_h = 2;
    o.m_f = 1;
    const EstimateReport r = pomdp_dm(d, env.default_target(), o);
    CHECK(std::isfinite(r.eta_hat));
    CHECK(r.se > 0.0);
}

}

TEST_SUITE("select") {

TEST_CASE("history coding") {
    const HistoryCoding c = history_coding(toy_data(), 3);
    CHECK(c.lag_radix() == 9);
    CHECK(c.num_states() == 2 * 81);
    CHECK(c.observation(1 + 2 * 17) == 1);
    const Dataset cont = sample_dataset(EnvSpec::continuous_2d(), 2, 5, derive_rng_stream(1, "h", 0));
    CHECK(history_coding(cont, 3).state_dim() == 2 + 2 * 5);
}

TEST_CASE("augmented states") {
    const Dataset& d = toy_data();
    const Dataset a = augment_history(d, 2);
    CHECK(a.num_states == 18);
    const auto& tr = d.trajectories[2];
    CHECK(a.trajectories[2].code(0) == tr.code(0) + 2 * 8);
    CHECK(a.trajectories[2].code(6) == tr.code(6) + 2 * (tr.code(5) * 4 + tr.ivs[5] * 2 + tr.actions[5]));
    CHECK(augment_history(d, 1).trajectories[2].states == tr.states);
    const TargetPolicy p = augment_policy(TargetPolicy::tabular({0.25, 0.5}), history_coding(d, 2));
    CHECK(p.prob1(Eigen::RowVectorXd::Constant(1, 1 + 2 * 5)) == 0.5);

    const Dataset cont = sample_dataset(EnvSpec::continuous_2d(), 2, 5, derive_rng_stream(1, "h", 0));
    const Dataset ca = augment_history(cont, 2);
    const auto& ct = cont.trajectories[0];
    CHECK(ca.trajectories[0].states(0, 5) == 0.0);  // lag absent at t = 0
    CHECK(ca.trajectories[0].states(3, 2) == ct.states(2, 0));
    CHECK(ca.trajectories[0].states(3, 4) == ct.ivs[2]);
    CHECK(ca.trajectories[0].states(3, 6) == 1.0);
}

TEST_CASE("order test: p-values and rejection") {
    const OrderTestResult r1 = test_markov_order(toy_data(), 1, 0.05);
    CHECK(r1.p_value >= 0.0);
    CHECK(r1.p_value <= 1.0);
    CHECK(r1.df > 0);
    CHECK(r1.rejected == (r1.p_value < 0.05));
    const EnvSpec hi = make_highorder(EnvSpec::toy_tabular(), 2);
    const Dataset hd = sample_dataset(hi, 500, 40, derive_rng_stream(8, "hi", 0));
    CHECK(test_markov_order(hd, 1, 0.05).rejected);
}

TEST_CASE("order test size is near its level under the null") {
    int rejections = 0;
    const int reps = 40;
    for (int r = 0; r < reps; ++r) {
        const Dataset d = sample_dataset(EnvSpec::toy_tabular(), 200, 30, derive_rng_stream(8, "null", r));
        rejections += test_markov_order(d, 1, 0.05).rejected ? 1 : 0;
    }
    // Binomial(40, 0.05): P(X >= 7) < 0.01.
    CHECK(rejections <= 6);
}

TEST_CASE("selection on first-order data") {
    SelectOptions o;
    const SelectionResult s = select_and_estimate(toy_data(), TargetPolicy::tabular({0.25, 0.5}), o);
    CHECK(s.order >= 1);
    CHECK_FALSE(s.pomdp);
    CHECK(static_cast<int>(s.tests.size()) == s.order);
    CHECK(std::isfinite(s.report.eta_hat));
    if (s.order == 1) {
        NuisanceOptions no;
        CHECK(s.report.eta_hat ==
              doctest::Approx(estimate_dr(toy_data(), fit_nuisances(toy_data(), TargetPolicy::tabular({0.25, 0.5}), no))
                                  .eta_hat));
    }
}

}
