#pragma once

#include "ivope/core.hpp"
#include "ivope/estimators.hpp"
#include "ivope/pomdp.hpp"

#include <string>
#include <vector>

namespace ivope {

struct OrderTestResult {
    int k = 1;
    double p_value = 1.0;
    double statistic = 0.0;
    int df = 0;
    bool rejected = false;
};

/// A level-α test of H0: the observed process is k-th order Markov.
class OrderTest {
public:
    virtual ~OrderTest() = default;
    virtual OrderTestResult test(const Dataset& data, int k, double alpha) const = 0;
};

/// Regresses the next observation (indicators for tabular data, coordinates
/// otherwise) on the last k (O, Z, A) triplets and tests the joint
/// significance of the lag-(k+1) triplet with an episode-clustered Wald
/// statistic, referred to F(df, G-1) after division by df.
class LagRegressionTest final : public OrderTest {
public:
    OrderTestResult test(const Dataset& data, int k, double alpha) const override;
};

OrderTestResult test_markov_order(const Dataset& data, int k, double alpha = 0.05);

struct SelectOptions {
    int max_order = 3;
    double alpha = 0.05;
    NuisanceOptions nuisance;
    PomdpOptions pomdp;
    double alpha_ci = 0.05;
};

struct SelectionResult {
    /// Selected Markov order; 0 when every order was rejected.
    int order = 0;
    /// Order whose augmented-state DR produced the report. Differs from
    /// `order` when the selected order lacks support for every (s, z, a) cell.
    int estimated_order = 0;
    std::string fallback_reason;
    bool pomdp = false;
    std::vector<OrderTestResult> tests;
    EstimateReport report;
};

/// DR estimate on the order-k augmented state.
EstimateReport dr_at_order(const Dataset& data, const TargetPolicy& pi, int k, const NuisanceOptions& opts,
                           double alpha = 0.05);

/// Tests k = 1..K in turn; the first non-rejected order is estimated by DR on
/// the augmented state, otherwise the POMDP direct method is used. If DR at
/// the selected order fails for lack of support (singular design or a state
/// with no instrument variation), the highest lower order that can be fitted
/// is used instead.
SelectionResult select_and_estimate(const Dataset& data, const TargetPolicy& pi, const SelectOptions& opts,
                                    const OrderTest& test = LagRegressionTest{});

}  // namespace ivope
