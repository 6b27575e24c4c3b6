#pragma once

#include "ivope/core.hpp"

#include <array>
#include <vector>

namespace ivope {

enum class CondTarget { ZGivenS, AGivenZS, RGivenZS, AGivenS };

/// A fitted conditional law: P(Z=1|s), P(A=1|z,s), E[R|z,s] or P(A=1|s).
/// Tabular models store one value per cell (s, or s*2 + z); continuous models
/// store coefficients over (1, s) or (1, s, z).
class CondModel {
public:
    enum class Kind { FrequencyTable, LogisticIRLS, LeastSquares };

    static CondModel table(CondTarget target, std::vector<double> cells);
    static CondModel logistic(CondTarget target, Vector coef);
    static CondModel least_squares(CondTarget target, Vector coef);

    CondTarget target() const noexcept { return target_; }
    Kind kind() const noexcept { return kind_; }
    bool uses_iv() const noexcept { return target_ == CondTarget::AGivenZS || target_ == CondTarget::RGivenZS; }
    bool binary() const noexcept { return target_ != CondTarget::RGivenZS; }

    /// P(=1 | s[, z]) for binary targets, E[R | z, s] otherwise.
    double mean(Eigen::Ref<const Eigen::RowVectorXd> s, int z = 0) const;
    double prob(int value, Eigen::Ref<const Eigen::RowVectorXd> s, int z = 0) const {
        const double p = mean(s, z);
        return value == 1 ? p : 1.0 - p;
    }

    const std::vector<double>& cells() const noexcept { return cells_; }
    const Vector& coef() const noexcept { return coef_; }

    // Fit diagnostics.
    Matrix coef_covariance;
    std::vector<double> cell_counts;
    std::vector<double> deviance_trace;
    int iterations = 0;

private:
    CondModel(CondTarget target, Kind kind) : target_(target), kind_(kind) {}
    CondTarget target_;
    Kind kind_;
    std::vector<double> cells_;
    Vector coef_;
};

/// Fits the requested conditional law on all (i, t) transitions. Tabular
/// datasets use add-one smoothed frequency tables (cell means shrunk toward the
/// global mean for rewards); continuous datasets use IRLS logistic regression
/// or least squares. A constant binary response raises NonConvergence
/// (perfect separation).
CondModel fit_cond(const Dataset& data, CondTarget target);

struct LogisticFit {
    Vector coef;
    Matrix covariance;
    std::vector<double> deviance_trace;
    int iterations = 0;
};

/// Logistic regression by iteratively reweighted least squares. Stops when the
/// deviance changes by less than tol * (|deviance| + 0.1).
LogisticFit fit_logistic_irls(const Matrix& X, const Vector& y, int max_iter = 100, double tol = 1e-8);

/// IV weights c(z|s), ρ(s,z) = c(z|s)/p_z(z|s) for a target policy.
class RatioSet {
public:
    RatioSet(CondModel pa, CondModel pz, TargetPolicy pi, double delta_min);

    double p1A(Eigen::Ref<const Eigen::RowVectorXd> s) const { return pa_.mean(s, 1); }
    double p0A(Eigen::Ref<const Eigen::RowVectorXd> s) const { return pa_.mean(s, 0); }
    /// (c(0|s), c(1|s)); throws IvWeakError when |p1A - p0A| < δ_min.
    std::array<double, 2> c(Eigen::Ref<const Eigen::RowVectorXd> s) const;
    double c(int z, Eigen::Ref<const Eigen::RowVectorXd> s) const { return c(s)[z]; }
    double rho(Eigen::Ref<const Eigen::RowVectorXd> s, int z) const;
    double pa(int a, int z, Eigen::Ref<const Eigen::RowVectorXd> s) const { return pa_.prob(a, s, z); }
    double pz(int z, Eigen::Ref<const Eigen::RowVectorXd> s) const { return pz_.prob(z, s); }

    const CondModel& pa_model() const noexcept { return pa_; }
    const CondModel& pz_model() const noexcept { return pz_; }
    const TargetPolicy& policy() const noexcept { return pi_; }
    double delta_min() const noexcept { return delta_min_; }

    /// Same ratios with a replaced IV propensity.
    RatioSet with_pz(CondModel pz) const { return RatioSet(pa_, std::move(pz), pi_, delta_min_); }

private:
    CondModel pa_;
    CondModel pz_;
    TargetPolicy pi_;
    double delta_min_;
};

RatioSet build_ratios(const CondModel& pa, const CondModel& pz, const TargetPolicy& pi, double delta_min = 1e-3);

}  // namespace ivope
