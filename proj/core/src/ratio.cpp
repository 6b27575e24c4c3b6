#include "ivope/ratio.hpp"

#include "ivope/errors.hpp"

#include <cmath>

namespace ivope {

double OmegaModel::operator()(Eigen::Ref<const Eigen::RowVectorXd> s) const {
    if (basis.kind() == StateBasis::Kind::OneHot) {
        const int code = static_cast<int>(s(0));
        if (code < 0 || code >= beta.size()) throw InvalidArgument("omega: state code out of range");
        return beta(code);
    }
    return basis(s).dot(beta);
}

OmegaModel OmegaModel::table(std::vector<double> values) {
    OmegaModel m;
    m.basis = StateBasis::one_hot(static_cast<int>(values.size()));
    m.beta = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    return m;
}

namespace {

Vector initial_mean(const Dataset& data, const StateBasis& basis, const InitialLaw& nu) {
    Vector m = Vector::Zero(basis.dim());
    if (!nu.empty()) {
        if (!data.discrete) throw InvalidArgument("omega: exact initial law requires tabular data");
        Eigen::RowVectorXd s(1);
        for (std::size_t c = 0; c < nu.size(); ++c) {
            if (nu[c] == 0.0) continue;
            s(0) = static_cast<double>(c);
            m += nu[c] * basis(s);
        }
        return m;
    }
    for (const auto& tr : data.trajectories) m += basis(tr.state(0));
    return m / static_cast<double>(data.size());
}

void check_weights(const Dataset& data, std::span<const double> weights) {
    if (static_cast<long long>(weights.size()) != static_cast<long long>(data.total_steps()))
        throw InvalidArgument("omega: one weight per transition required");
}

}  // namespace

std::vector<double> transition_rho(const Dataset& data, const RatioSet& ratios) {
    const int T = data.horizon();
    std::vector<double> rho;
    rho.reserve(data.total_steps());
    for (const auto& tr : data.trajectories)
        for (int t = 0; t < T; ++t) rho.push_back(ratios.rho(tr.state(t), tr.ivs[t]));
    return rho;
}

OmegaModel fit_omega_weighted(const Dataset& data, std::span<const double> weights, double gamma,
                              const StateBasis& basis, const InitialLaw& nu) {
    if (data.size() == 0 || data.horizon() == 0) throw InvalidArgument("fit_omega: empty dataset");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("fit_omega: gamma must lie in [0,1)");
    check_weights(data, weights);
    const int p = basis.dim();
    const int T = data.horizon();
    Matrix M = Matrix::Zero(p, p);
    Vector xi(p), xi_next(p);
    std::size_t row = 0;
    for (const auto& tr : data.trajectories) {
        Matrix Mi = Matrix::Zero(p, p);
        for (int t = 0; t < T; ++t, ++row) {
            basis.eval(tr.state(t), xi);
            basis.eval(tr.state(t + 1), xi_next);
            Mi.noalias() += (xi - gamma * weights[row] * xi_next) * xi.transpose();
        }
        M += Mi;
    }
    const double NT = static_cast<double>(data.total_steps());
    const Vector rhs = (1.0 - gamma) * NT * initial_mean(data, basis, nu);

    Eigen::JacobiSVD<Matrix> svd(M);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    OmegaModel model;
    model.basis = basis;
    model.rcond = smax > 0.0 ? smin / smax : 0.0;
    if (!(smax > 0.0) || model.rcond < 1e-12)
        throw SingularSystem("fit_omega: rank-deficient moment matrix (basis exceeds observed support)");
    if (model.rcond < 1e-8) {
        model.jittered = true;
        M.diagonal().array() += 1e-8 * smax;
    }
    model.beta = M.partialPivLu().solve(rhs);
    if (!model.beta.allFinite()) throw SingularSystem("fit_omega: non-finite solution");
    return model;
}

OmegaModel fit_omega(const Dataset& data, const RatioSet& ratios, double gamma, const StateBasis& basis,
                     const InitialLaw& nu) {
    const std::vector<double> rho = transition_rho(data, ratios);
    return fit_omega_weighted(data, rho, gamma, basis, nu);
}

OmegaModel fit_omega(const Dataset& data, const RatioSet& ratios, double gamma, const InitialLaw& nu) {
    return fit_omega(data, ratios, gamma, StateBasis::default_for(data), nu);
}

Vector omega_moments(const Dataset& data, const OmegaModel& omega, std::span<const double> weights, double gamma,
                     const StateBasis& basis, const InitialLaw& nu) {
    check_weights(data, weights);
    const int T = data.horizon();
    Vector acc = Vector::Zero(basis.dim());
    std::size_t row = 0;
    for (const auto& tr : data.trajectories)
        for (int t = 0; t < T; ++t, ++row)
            acc += omega(tr.state(t)) * (basis(tr.state(t)) - gamma * weights[row] * basis(tr.state(t + 1)));
    return (1.0 - gamma) * initial_mean(data, basis, nu) - acc / static_cast<double>(data.total_steps());
}

double omega_identity_residual(const Dataset& data, const OmegaModel& omega, std::span<const double> weights,
                               double gamma) {
    check_weights(data, weights);
    const int T = data.horizon();
    double acc = 0.0;
    std::size_t row = 0;
    for (const auto& tr : data.trajectories)
        for (int t = 0; t < T; ++t, ++row) acc += omega(tr.state(t)) * (1.0 - gamma * weights[row]);
    return acc / static_cast<double>(data.total_steps()) - (1.0 - gamma);
}

}  // namespace ivope
