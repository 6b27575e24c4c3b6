#include "ivope/nuisance.hpp"

#include "ivope/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ivope {

namespace {

int regressor_dim(CondTarget target, int d) {
    const bool iv = target == CondTarget::AGivenZS || target == CondTarget::RGivenZS;
    return 1 + d + (iv ? 1 : 0);
}

void fill_regressors(CondTarget target, Eigen::Ref<const Eigen::RowVectorXd> s, int z, Eigen::Ref<Eigen::RowVectorXd> x) {
    const int d = static_cast<int>(s.size());
    x(0) = 1.0;
    x.segment(1, d) = s;
    if (target == CondTarget::AGivenZS || target == CondTarget::RGivenZS) x(1 + d) = z;
}

double response(CondTarget target, const Trajectory& tr, int t) {
    switch (target) {
    case CondTarget::ZGivenS: return tr.ivs[t];
    case CondTarget::AGivenZS:
    case CondTarget::AGivenS: return tr.actions[t];
    case CondTarget::RGivenZS: return tr.rewards[t];
    }
    return 0.0;
}

const char* target_name(CondTarget target) {
    switch (target) {
    case CondTarget::ZGivenS: return "Z|S";
    case CondTarget::AGivenZS: return "A|Z,S";
    case CondTarget::RGivenZS: return "R|Z,S";
    case CondTarget::AGivenS: return "A|S";
    }
    return "?";
}

double deviance(const Vector& y, const Vector& mu) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double m = std::clamp(mu(i), 1e-300, 1.0 - 1e-16);
        dev -= 2.0 * (y(i) > 0.5 ? std::log(m) : std::log1p(-m));
    }
    return dev;
}

}  // namespace

CondModel CondModel::table(CondTarget target, std::vector<double> cells) {
    CondModel m(target, Kind::FrequencyTable);
    if (cells.empty()) throw InvalidArgument("conditional table needs at least one cell");
    if (m.binary())
        for (double v : cells)
            if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("conditional table probabilities must lie in [0,1]");
    m.cells_ = std::move(cells);
    return m;
}

CondModel CondModel::logistic(CondTarget target, Vector coef) {
    if (target == CondTarget::RGivenZS) throw InvalidArgument("rewards are fitted by least squares");
    CondModel m(target, Kind::LogisticIRLS);
    m.coef_ = std::move(coef);
    return m;
}

CondModel CondModel::least_squares(CondTarget target, Vector coef) {
    if (target != CondTarget::RGivenZS) throw InvalidArgument("least squares is only used for rewards");
    CondModel m(target, Kind::LeastSquares);
    m.coef_ = std::move(coef);
    return m;
}

double CondModel::mean(Eigen::Ref<const Eigen::RowVectorXd> s, int z) const {
    if (kind_ == Kind::FrequencyTable) {
        const int code = static_cast<int>(s(0));
        const int idx = uses_iv() ? code * 2 + z : code;
        if (code < 0 || idx >= static_cast<int>(cells_.size()))
            throw InvalidArgument(std::string("conditional model ") + target_name(target_) + ": state code out of range");
        return cells_[idx];
    }
    const int d = static_cast<int>(s.size());
    if (coef_.size() != regressor_dim(target_, d))
        throw InvalidArgument(std::string("conditional model ") + target_name(target_) + ": state dimension mismatch");
    double eta = coef_(0) + s.dot(coef_.segment(1, d).transpose());
    if (uses_iv()) eta += coef_(1 + d) * z;
    return kind_ == Kind::LogisticIRLS ? sigmoid(eta) : eta;
}

LogisticFit fit_logistic_irls(const Matrix& X, const Vector& y, int max_iter, double tol) {
    const Eigen::Index n = X.rows(), p = X.cols();
    if (n == 0) throw InvalidArgument("logistic regression on empty data");
    LogisticFit fit;
    fit.coef = Vector::Zero(p);
    Vector eta = Vector::Zero(n);
    Vector mu = Vector::Constant(n, 0.5);
    double dev = deviance(y, mu);
    fit.deviance_trace.push_back(dev);
    for (int it = 1; it <= max_iter; ++it) {
        const Vector w = (mu.array() * (1.0 - mu.array())).max(1e-12).matrix();
        const Vector work = eta + ((y - mu).array() / w.array()).matrix();
        const Matrix XtWX = X.transpose() * w.asDiagonal() * X;
        Eigen::LDLT<Matrix> ldlt(XtWX);
        if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
            throw NonConvergence("IRLS: singular weighted design", fit.deviance_trace);
        fit.coef = ldlt.solve(X.transpose() * (w.array() * work.array()).matrix());
        eta = X * fit.coef;
        for (Eigen::Index i = 0; i < n; ++i) mu(i) = sigmoid(eta(i));
        const double next = deviance(y, mu);
        fit.deviance_trace.push_back(next);
        fit.iterations = it;
        if (!std::isfinite(next) || !fit.coef.allFinite())
            throw NonConvergence("IRLS: non-finite deviance", fit.deviance_trace);
        if (std::abs(next - dev) < tol * (std::abs(next) + 0.1)) {
            // Deviance driven to zero means the classes are separated and the
            // coefficients diverge; the stopping rule alone would accept that.
            if (next < 1e-6) throw NonConvergence("IRLS: perfect separation", fit.deviance_trace);
            const Vector wf = (mu.array() * (1.0 - mu.array())).matrix();
            fit.covariance = (X.transpose() * wf.asDiagonal() * X).inverse();
            return fit;
        }
        dev = next;
    }
    throw NonConvergence("IRLS: no convergence within " + std::to_string(max_iter) + " iterations", fit.deviance_trace);
}

CondModel fit_cond(const Dataset& data, CondTarget target) {
    if (data.size() == 0 || data.horizon() == 0) throw InvalidArgument("fit_cond: empty dataset");
    const int T = data.horizon();
    const bool binary = target != CondTarget::RGivenZS;
    const bool iv = target == CondTarget::AGivenZS || target == CondTarget::RGivenZS;

    double total = 0.0;
    for (const auto& tr : data.trajectories)
        for (int t = 0; t < T; ++t) total += response(target, tr, t);
    const double n_obs = static_cast<double>(data.total_steps());
    if (binary && (total == 0.0 || total == n_obs))
        throw NonConvergence(std::string("perfect separation: response of ") + target_name(target) + " is constant", {});

    if (data.discrete) {
        const int n_cells = data.state_count() * (iv ? 2 : 1);
        std::vector<double> sum(n_cells, 0.0), count(n_cells, 0.0);
        for (const auto& tr : data.trajectories)
            for (int t = 0; t < T; ++t) {
                const int idx = iv ? tr.code(t) * 2 + tr.ivs[t] : tr.code(t);
                sum[idx] += response(target, tr, t);
                count[idx] += 1.0;
            }
        std::vector<double> cells(n_cells);
        const double global = total / n_obs;
        for (int c = 0; c < n_cells; ++c)
            cells[c] = binary ? (sum[c] + 1.0) / (count[c] + 2.0) : (sum[c] + global) / (count[c] + 1.0);
        CondModel m = CondModel::table(target, std::move(cells));
        m.cell_counts = std::move(count);
        return m;
    }

    const int p = regressor_dim(target, data.state_dim);
    RowMatrix X(data.total_steps(), p);
    Vector y(data.total_steps());
    Eigen::Index row = 0;
    for (const auto& tr : data.trajectories)
        for (int t = 0; t < T; ++t, ++row) {
            fill_regressors(target, tr.state(t), tr.ivs[t], X.row(row));
            y(row) = response(target, tr, t);
        }
    if (binary) {
        LogisticFit fit = fit_logistic_irls(X, y);
        CondModel m = CondModel::logistic(target, fit.coef);
        m.coef_covariance = std::move(fit.covariance);
        m.deviance_trace = std::move(fit.deviance_trace);
        m.iterations = fit.iterations;
        return m;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    if (qr.rank() < p) throw SingularSystem("fit_cond: rank-deficient reward design");
    return CondModel::least_squares(target, qr.solve(y));
}

RatioSet::RatioSet(CondModel pa, CondModel pz, TargetPolicy pi, double delta_min)
    : pa_(std::move(pa)), pz_(std::move(pz)), pi_(std::move(pi)), delta_min_(delta_min) {
    if (pa_.target() != CondTarget::AGivenZS) throw InvalidArgument("build_ratios: pa must model A given (Z, S)");
    if (pz_.target() != CondTarget::ZGivenS) throw InvalidArgument("build_ratios: pz must model Z given S");
    if (!(delta_min_ > 0.0)) throw InvalidArgument("build_ratios: δ_min must be positive");
}

std::array<double, 2> RatioSet::c(Eigen::Ref<const Eigen::RowVectorXd> s) const {
    const double p1 = p1A(s), p0 = p0A(s);
    const double gap = p1 - p0;
    if (!(std::abs(gap) >= delta_min_)) throw IvWeakError(std::abs(gap), delta_min_);
    const double c1 = (pi_.prob1(s) - p0) / gap;
    return {1.0 - c1, c1};
}

double RatioSet::rho(Eigen::Ref<const Eigen::RowVectorXd> s, int z) const {
    const double p = pz(z, s);
    if (!(p > 0.0)) throw OverlapError("IV propensity p_z(z|s) is zero");
    return c(z, s) / p;
}

RatioSet build_ratios(const CondModel& pa, const CondModel& pz, const TargetPolicy& pi, double delta_min) {
    return RatioSet(pa, pz, pi, delta_min);
}

}  // namespace ivope
