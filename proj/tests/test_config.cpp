#include "doctest.h"

#include "ivope/config.hpp"
#include "ivope/errors.hpp"
#include "ivope/experiment.hpp"

#include <sstream>

using namespace ivope;

#ifndef IVOPE_SOURCE_DIR
#error "IVOPE_SOURCE_DIR must point at the repository root"
#endif

TEST_SUITE("config") {

TEST_CASE("key = value files with sections and comments") {
    std::istringstream in("# top\nname = a\n\n[policy]\nkind = tabular   # trailing\nprob1 = 0.1, 0.2\n");
    const KeyValueFile f = parse_key_value(in, "mem");
    REQUIRE(f.entries.size() == 3);
    CHECK(f.entries[0].section.empty());
    CHECK(f.entries[1].section == "policy");
    CHECK(f.entries[1].value == "tabular");
    CHECK(f.entries[2].line == 6);
    CHECK(parse_double_list(f.entries[2].value, 6) == std::vector<double>{0.1, 0.2});
}

TEST_CASE("syntax errors carry the line number") {
    std::istringstream no_eq("a = 1\nbroken line\n");
    try {
        parse_key_value(no_eq);
        FAIL("expected a ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    std::istringstream dup("a = 1\na = 2\n");
    CHECK_THROWS_AS(parse_key_value(dup), ParseError);
    std::istringstream sect("[open\n");
    CHECK_THROWS_AS(parse_key_value(sect), ParseError);
}

TEST_CASE("scalar and list parsers") {
    CHECK(parse_double(" 2.5 ", 1) == 2.5);
    CHECK(parse_int("42", 1) == 42);
    CHECK(parse_bool("true", 1));
    CHECK_FALSE(parse_bool("false", 1));
    CHECK_THROWS_AS(parse_double("2.5x", 3), ParseError);
    CHECK_THROWS_AS(parse_int("4.2", 3), ParseError);
    CHECK_THROWS_AS(parse_bool("maybe", 3), ParseError);
    CHECK_THROWS_AS(parse_double_list("1,,2", 3), ParseError);
    CHECK(parse_int_list("100, 200,400", 1) == std::vector<long long>{100, 200, 400});
    CHECK(parse_string_list("dm, dr", 1) == std::vector<std::string>{"dm", "dr"});
}

TEST_CASE("shipped AdCampaign parameters load and round trip") {
    const AdCampaignParams p = load_ad_campaign_params(std::string(IVOPE_SOURCE_DIR) + "/configs/ad_campaign.cfg");
    CHECK_NOTHROW(p.validate());
    CHECK(p.state_dim == 6);
    // Exclusion restriction: Z has no direct effect on reward or next state.
    CHECK(p.beta_r(p.state_dim + 1) == 0.0);
    CHECK(p.transition.col(p.state_dim + 1).isZero());
    std::stringstream ss;
    write_ad_campaign_params(ss, p);
    const AdCampaignParams q = parse_ad_campaign_params(parse_key_value(ss));
    CHECK(q.beta_a == p.beta_a);
    CHECK(q.beta_r == p.beta_r);
    CHECK(q.transition == p.transition);
    CHECK(q.sigma == p.sigma);
    CHECK(q.u_state == p.u_state);
}

TEST_CASE("AdCampaign parameter shape errors") {
    std::istringstream in("[ad_campaign]\nstate_dim = 1\np_z = 0.5\nbeta_a = 0, 1\nbeta_r = 0, 1, 0, 1\n"
                          "transition = 0.5, 0, 0, 0\nsigma = 1\nu_action = 1\nu_reward = 1\nu_state = 0\n");
    CHECK_THROWS_AS(parse_ad_campaign_params(parse_key_value(in)), Error);
}

TEST_CASE("experiment spec parsing") {
    std::istringstream in(
        "name = t\nenv = toy_tabular\nestimators = dm, dr\nn_grid = 50, 100\nhorizon = 20\nreplications = 3\n"
        "scenarios = M0, M3\n[policy]\nkind = tabular\nprob1 = 0.3, 0.6\n[estimation]\ndelta_min = 0.01\n"
        "[oracle]\nmc_episodes = 1000\n");
    const ExperimentSpec s = parse_spec(in);
    CHECK(s.name == "t");
    CHECK(s.estimators == std::vector<std::string>{"dm", "dr"});
    CHECK(s.n_grid == std::vector<int>{50, 100});
    CHECK(s.scenarios == std::vector<Scenario>{Scenario::M0, Scenario::M3});
    CHECK(s.policy_kind == "tabular");
    CHECK(s.delta_min == 0.01);
    CHECK(s.oracle.mc_episodes == 1000);
    const EnvSpec env = make_env(s);
    CHECK(make_policy(s, env).prob1(Eigen::RowVectorXd::Constant(1, 1.0)) == doctest::Approx(0.6));
}

TEST_CASE("unknown keys and invalid values are reported") {
    std::istringstream unknown("name = t\nhorizn = 10\n");
    try {
        parse_spec(unknown);
        FAIL("expected a ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("horizn") != std::string::npos);
    }
    std::istringstream section("[nope]\nx = 1\n");
    CHECK_THROWS_AS(parse_spec(section), ParseError);
    std::istringstream bad("gamma = 1.5\nreplications = 0\nestimators = dr, magic\n");
    try {
        parse_spec(bad);
        FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& e) {
        const std::string w = e.what();
        CHECK(w.find("gamma") != std::string::npos);
        CHECK(w.find("replications") != std::string::npos);
        CHECK(w.find("estimators") != std::string::npos);
    }
}

TEST_CASE("shipped experiment specs parse") {
    for (const char* name : {"fig1_double_robustness", "fig2_confounding", "fig3_ad_campaign", "coverage",
                             "horizon", "pomdp_reduction", "selection_order1", "selection_highorder", "smoke"}) {
        CAPTURE(name);
        const ExperimentSpec s =
            parse_spec(std::string(IVOPE_SOURCE_DIR) + "/configs/experiments/" + name + ".cfg");
        CHECK_NOTHROW(make_env(s));
    }
}

}
