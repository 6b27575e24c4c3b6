#include "doctest.h"

#include "ivope/core.hpp"
#include "ivope/dataset_io.hpp"
#include "ivope/envs.hpp"
#include "ivope/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace ivope;

namespace {

Trajectory tiny_trajectory() {
    Trajectory tr;
    tr.states = RowMatrix(4, 1);
    tr.states << 0, 1, 1, 0;
    tr.ivs = {1, 0, 1};
    tr.actions = {0, 1, 1};
    tr.rewards = {1.0, 2.0, 4.0};
    return tr;
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("discounted return") {
    CHECK(discounted_return(tiny_trajectory(), 0.5) == doctest::Approx(1.0 + 1.0 + 1.0));
    CHECK(discounted_return(tiny_trajectory(), 0.0) == 1.0);
}

TEST_CASE("trajectory validation") {
    Trajectory tr = tiny_trajectory();
    CHECK_NOTHROW(tr.validate());
    tr.actions[1] = 2;
    CHECK_THROWS_AS(tr.validate(), InvalidArgument);
    tr = tiny_trajectory();
    tr.rewards.pop_back();
    CHECK_THROWS_AS(tr.validate(), InvalidArgument);
    tr = tiny_trajectory();
    tr.states = RowMatrix::Zero(3, 1);
    CHECK_THROWS_AS(tr.validate(), InvalidArgument);
}

TEST_CASE("dataset horizon and state count") {
    Dataset d;
    d.discrete = true;
    d.trajectories = {tiny_trajectory(), tiny_trajectory()};
    CHECK(d.horizon() == 3);
    CHECK(d.total_steps() == 6);
    CHECK(d.state_count() == 2);
    d.num_states = 5;
    CHECK(d.state_count() == 5);
    d.trajectories[1].actions.pop_back();
    d.trajectories[1].ivs.pop_back();
    d.trajectories[1].rewards.pop_back();
    d.trajectories[1].states.conservativeResize(3, 1);
    CHECK_THROWS_AS(d.validate(), InvalidArgument);
}

TEST_CASE("target policies") {
    const TargetPolicy tab = TargetPolicy::tabular({0.2, 0.9});
    CHECK(tab.prob(1, Eigen::RowVectorXd::Constant(1, 1.0)) == doctest::Approx(0.9));
    CHECK(tab.prob(0, Eigen::RowVectorXd::Constant(1, 0.0)) == doctest::Approx(0.8));
    Vector beta(3);
    beta << 0.5, -1.0, 2.0;
    const TargetPolicy lg = TargetPolicy::logistic(beta);
    Eigen::RowVectorXd s(2);
    s << 0.3, 0.1;
    CHECK(lg.prob1(s) == doctest::Approx(1.0 / (1.0 + std::exp(-(0.5 - 0.3 + 0.2)))));
    CHECK_FALSE(lg.is_tabular());
    CHECK_THROWS_AS(TargetPolicy::tabular({1.5}), InvalidArgument);
}

TEST_CASE("sigmoid is stable in both tails") {
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(sigmoid(800.0) == 1.0);
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(3.0) + sigmoid(-3.0) == doctest::Approx(1.0));
}

TEST_CASE("run config validation") {
    RunConfig c;
    CHECK_NOTHROW(c.validate());
    c.gamma = 1.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = RunConfig{};
    c.n_trajectories = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("dataset CSV round trip is bit exact") {
    const Dataset cont = sample_dataset(EnvSpec::continuous_2d(), 4, 6, derive_rng_stream(1, "csv", 0));
    std::stringstream ss;
    write_dataset_csv(ss, cont);
    const Dataset back = read_dataset_csv(ss);
    REQUIRE(back.size() == cont.size());
    CHECK_FALSE(back.discrete);
    for (int i = 0; i < cont.size(); ++i) {
        CHECK(back.trajectories[i].states == cont.trajectories[i].states);
        CHECK(back.trajectories[i].rewards == cont.trajectories[i].rewards);
        CHECK(back.trajectories[i].actions == cont.trajectories[i].actions);
        CHECK(back.trajectories[i].ivs == cont.trajectories[i].ivs);
    }
    const Dataset toy = sample_dataset(EnvSpec::toy_tabular(), 3, 5, derive_rng_stream(1, "csv", 1));
    std::stringstream ts;
    write_dataset_csv(ts, toy);
    CHECK(read_dataset_csv(ts).discrete);
}

TEST_CASE("malformed dataset CSV") {
    std::stringstream bad("episode,t,s_0,z,a,r\n0,0,0,1,x,0\n0,1,1,,,\n");
    CHECK_THROWS_AS(read_dataset_csv(bad), ParseError);
    std::stringstream ragged("episode,t,s_0,z,a,r\n0,0,0,1,1,0\n0,1,1,,,\n1,0,0,1,1,0\n1,1,0,0,0,1\n1,2,0,,,\n");
    CHECK_THROWS_AS(read_dataset_csv(ragged), Error);
}

TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678, std::numeric_limits<double>::max()})
        CHECK(std::stod(format_double(v)) == v);
}

}
