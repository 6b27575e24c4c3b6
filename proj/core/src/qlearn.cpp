#include "ivope/qlearn.hpp"

#include "ivope/errors.hpp"

#include <cmath>
#include <string>

namespace ivope {

double QModel::operator()(Eigen::Ref<const Eigen::RowVectorXd> s, int z, int a) const {
    if (is_table()) {
        const int c = basis.cell(static_cast<int>(s(0)), z, a);
        if (c < 0 || c >= theta.size()) throw InvalidArgument("Q table: state code out of range");
        return theta(c);
    }
    return basis(s, z, a).dot(theta);
}

QModel QModel::table(int num_states, std::vector<double> cells, double gamma, bool with_iv) {
    QModel q;
    q.basis = SzaBasis::table(num_states, with_iv);
    if (static_cast<int>(cells.size()) != q.basis.dim()) throw InvalidArgument("Q table: wrong number of cells");
    q.theta = Eigen::Map<const Vector>(cells.data(), static_cast<Eigen::Index>(cells.size()));
    q.gamma = gamma;
    return q;
}

FqeProblem FqeProblem::iv(const Dataset& data, const RatioSet& ratios, const SzaBasis& basis) {
    if (!basis.with_iv()) throw InvalidArgument("fqe_iv: basis must include the IV");
    FqeProblem prob(basis);
    const int T = data.horizon();
    if (data.size() == 0 || T < 1) throw InvalidArgument("fqe: empty dataset");
    const int p = basis.dim();
    prob.X_.resize(data.total_steps(), p);
    prob.next_.setZero(data.total_steps(), p);
    prob.r_.resize(data.total_steps());
    Vector phi(p);
    Eigen::Index row = 0;
    for (const auto& tr : data.trajectories) {
        for (int t = 0; t < T; ++t, ++row) {
            basis.eval(tr.state(t), tr.ivs[t], tr.actions[t], phi);
            prob.X_.row(row) = phi.transpose();
            prob.r_(row) = tr.rewards[t];
            const auto s1 = tr.state(t + 1);
            const auto c = ratios.c(s1);
            for (int z = 0; z < 2; ++z)
                for (int a = 0; a < 2; ++a) {
                    basis.eval(s1, z, a, phi);
                    prob.next_.row(row) += (c[z] * ratios.pa(a, z, s1)) * phi.transpose();
                }
        }
    }
    prob.factorize();
    return prob;
}

FqeProblem FqeProblem::nuc(const Dataset& data, const TargetPolicy& pi, const SzaBasis& basis) {
    if (basis.with_iv()) throw InvalidArgument("fqe_nuc: basis must ignore the IV");
    FqeProblem prob(basis);
    const int T = data.horizon();
    if (data.size() == 0 || T < 1) throw InvalidArgument("fqe: empty dataset");
    const int p = basis.dim();
    prob.X_.resize(data.total_steps(), p);
    prob.next_.setZero(data.total_steps(), p);
    prob.r_.resize(data.total_steps());
    Vector phi(p);
    Eigen::Index row = 0;
    for (const auto& tr : data.trajectories) {
        for (int t = 0; t < T; ++t, ++row) {
            basis.eval(tr.state(t), 0, tr.actions[t], phi);
            prob.X_.row(row) = phi.transpose();
            prob.r_(row) = tr.rewards[t];
            const auto s1 = tr.state(t + 1);
            for (int a = 0; a < 2; ++a) {
                basis.eval(s1, 0, a, phi);
                prob.next_.row(row) += pi.prob(a, s1) * phi.transpose();
            }
        }
    }
    prob.factorize();
    return prob;
}

void FqeProblem::factorize() {
    const Matrix gram = X_.transpose() * X_;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().maxCoeff();
    const double lo = eig.eigenvalues().minCoeff();
    if (!(hi > 0.0) || lo <= 1e-12 * hi)
        throw SingularSystem("fqe: singular design matrix (unobserved cells or collinear features)");
    gram_.compute(gram);
}

Vector FqeProblem::update(const Vector& theta, double gamma) const {
    return gram_.solve(X_.transpose() * (r_ + gamma * (next_ * theta)));
}

Vector FqeProblem::residual(const Vector& theta, double gamma) const {
    const Vector err = r_ + gamma * (next_ * theta) - X_ * theta;
    return X_.transpose() * err / static_cast<double>(X_.rows());
}

QModel FqeProblem::solve(double gamma, const FqeOptions& opts) const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("fqe: gamma must lie in [0,1)");
    const Vector a = gram_.solve(X_.transpose() * r_);
    const Matrix B = gram_.solve(X_.transpose() * next_);
    QModel q;
    q.basis = basis_;
    q.gamma = gamma;
    q.theta = Vector::Zero(basis_.dim());
    q.converged = false;
    for (int it = 1; it <= opts.max_iters; ++it) {
        Vector next = a + gamma * (B * q.theta);
        const double change = (next - q.theta).cwiseAbs().maxCoeff();
        q.theta = std::move(next);
        q.change_history.push_back(change);
        q.iterations = it;
        if (!q.theta.allFinite()) break;
        if (change < opts.tol || gamma == 0.0) {
            q.converged = true;
            break;
        }
    }
    if (!q.converged && opts.throw_on_nonconvergence)
        throw NonConvergence("fqe: no convergence within " + std::to_string(opts.max_iters) + " iterations",
                             q.change_history);
    return q;
}

QModel fqe_iv(const Dataset& data, const RatioSet& ratios, double gamma, const SzaBasis& basis,
              const FqeOptions& opts) {
    if (data.horizon() < 2) throw InvalidArgument("fqe_iv: horizon must be >= 2");
    return FqeProblem::iv(data, ratios, basis).solve(gamma, opts);
}

QModel fqe_iv(const Dataset& data, const RatioSet& ratios, double gamma, const FqeOptions& opts) {
    return fqe_iv(data, ratios, gamma, SzaBasis::default_for(data, true), opts);
}

QModel fqe_nuc(const Dataset& data, const TargetPolicy& pi, double gamma, const FqeOptions& opts) {
    if (data.horizon() < 2) throw InvalidArgument("fqe_nuc: horizon must be >= 2");
    return FqeProblem::nuc(data, pi, SzaBasis::default_for(data, false)).solve(gamma, opts);
}

double value_from_q(const QModel& q, const RatioSet& ratios, Eigen::Ref<const Eigen::RowVectorXd> s) {
    const auto c = ratios.c(s);
    double v = 0.0;
    for (int z = 0; z < 2; ++z)
        for (int a = 0; a < 2; ++a) v += c[z] * ratios.pa(a, z, s) * q(s, z, a);
    return v;
}

double value_from_q_nuc(const QModel& q, const TargetPolicy& pi, Eigen::Ref<const Eigen::RowVectorXd> s) {
    return pi.prob(0, s) * q(s, 0, 0) + pi.prob(1, s) * q(s, 0, 1);
}

}  // namespace ivope
