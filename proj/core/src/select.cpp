#include "ivope/select.hpp"

#include "ivope/errors.hpp"
#include "ivope/history.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace ivope {

namespace {

// Columns of X kept after dropping, in order, every column that is (numerically)
// a linear combination of the columns already kept.
std::vector<int> independent_columns(const Matrix& gram, double tol = 1e-9) {
    const int p = static_cast<int>(gram.rows());
    std::vector<int> kept;
    Matrix L = Matrix::Zero(p, p);  // Cholesky factor of the kept block
    for (int j = 0; j < p; ++j) {
        const double gjj = gram(j, j);
        if (!(gjj > 0.0)) continue;
        const int m = static_cast<int>(kept.size());
        Vector v(m);
        for (int i = 0; i < m; ++i) v(i) = gram(kept[i], j);
        Vector l = v;
        if (m > 0) L.topLeftCorner(m, m).triangularView<Eigen::Lower>().solveInPlace(l);
        const double resid = gjj - l.squaredNorm();
        if (resid <= tol * gjj) continue;
        L.row(m).head(m) = l.transpose();
        L(m, m) = std::sqrt(resid);
        kept.push_back(j);
    }
    return kept;
}

}  // namespace

OrderTestResult LagRegressionTest::test(const Dataset& data, int k, double alpha) const {
    if (k < 1) throw InvalidArgument("test_markov_order: k must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("test_markov_order: alpha must lie in (0,1)");
    data.validate();
    const int T = data.horizon();
    if (T < 2 * k + 2) throw InvalidArgument("test_markov_order: horizon must be >= 2k + 2");
    const int G = data.size();
    if (G < 2) throw InvalidArgument("test_markov_order: need at least two episodes");

    const bool disc = data.discrete;
    const int d = data.state_dim;
    const int nO = disc ? data.state_count() : 0;
    const int alt_dim = disc ? (nO - 1) + 2 : d + 2;
    const int resp_dim = disc ? nO - 1 : d;
    if (resp_dim < 1) throw InvalidArgument("test_markov_order: observation takes a single value");

    // Frisch-Waugh: partial the null block (the last k triplets) out of the
    // lag columns and the responses, then test the lag block alone. Tabular
    // windows enter as saturated cells, so partialling is a within-cell demeaning.
    const int rows_per = T - k;
    const int N = G * rows_per;
    Matrix A = Matrix::Zero(N, alt_dim);
    Matrix Y = Matrix::Zero(N, resp_dim);
    std::vector<long long> cell;
    Matrix Nul;
    const int null_dim = disc ? 0 : 1 + k * (d + 2) + 2 * d + 1;
    if (disc) cell.resize(N);
    else Nul.resize(N, null_dim);
    int row = 0;
    for (const auto& tr : data.trajectories) {
        for (int t = k; t < T; ++t, ++row) {
            if (disc) {
                long long code = 0, scale = 1;
                for (int j = 0; j < k; ++j) {
                    code += scale * (tr.code(t - j) * 4 + tr.ivs[t - j] * 2 + tr.actions[t - j]);
                    scale *= 4LL * nO;
                }
                cell[row] = code;
                const int lag_o = tr.code(t - k);
                if (lag_o > 0) A(row, lag_o - 1) = 1.0;
                A(row, nO - 1) = tr.ivs[t - k];
                A(row, nO) = tr.actions[t - k];
                const int next = tr.code(t + 1);
                if (next > 0) Y(row, next - 1) = 1.0;
            } else {
                int c = 0;
                Nul(row, c++) = 1.0;
                for (int j = 0; j < k; ++j) {
                    Nul.row(row).segment(c, d) = tr.states.row(t - j);
                    c += d;
                    Nul(row, c++) = tr.ivs[t - j];
                    Nul(row, c++) = tr.actions[t - j];
                }
                Nul.row(row).segment(c, d) = tr.states.row(t) * tr.ivs[t];
                c += d;
                Nul.row(row).segment(c, d) = tr.states.row(t) * tr.actions[t];
                c += d;
                Nul(row, c++) = tr.ivs[t] * tr.actions[t];
                A.row(row).head(d) = tr.states.row(t - k);
                A(row, d) = tr.ivs[t - k];
                A(row, d + 1) = tr.actions[t - k];
                Y.row(row) = tr.states.row(t + 1);
            }
        }
    }
    const Vector raw_norm = A.colwise().squaredNorm().transpose();
    if (disc) {
        std::unordered_map<long long, int> index;
        for (long long c : cell) index.emplace(c, static_cast<int>(index.size()));
        const int C = static_cast<int>(index.size());
        Matrix sumA = Matrix::Zero(C, alt_dim), sumY = Matrix::Zero(C, resp_dim);
        Vector cnt = Vector::Zero(C);
        for (int r = 0; r < N; ++r) {
            const int c = index[cell[r]];
            sumA.row(c) += A.row(r);
            sumY.row(c) += Y.row(r);
            cnt(c) += 1.0;
        }
        for (int r = 0; r < N; ++r) {
            const int c = index[cell[r]];
            A.row(r) -= sumA.row(c) / cnt(c);
            Y.row(r) -= sumY.row(c) / cnt(c);
        }
    } else {
        const Eigen::ColPivHouseholderQR<Matrix> qr(Nul);
        A -= Nul * qr.solve(A);
        Y -= Nul * qr.solve(Y);
    }

    // Drop lag columns with no variation left after partialling.
    std::vector<int> keep;
    {
        const std::vector<int> indep = independent_columns(A.transpose() * A);
        for (int j : indep)
            if (A.col(j).squaredNorm() > 1e-9 * raw_norm(j)) keep.push_back(j);
    }
    OrderTestResult res;
    res.k = k;
    const int q = static_cast<int>(keep.size());
    if (q == 0) return res;  // lag carries no new variation: nothing to test
    Matrix Ak(N, q);
    for (int i = 0; i < q; ++i) Ak.col(i) = A.col(keep[i]);

    const Matrix AtA = Ak.transpose() * Ak;
    const Eigen::LDLT<Matrix> ldlt(AtA);
    const Matrix B = ldlt.solve(Ak.transpose() * Y);
    const Matrix E = Y - Ak * B;
    const Matrix bread = ldlt.solve(Matrix::Identity(q, q));

    const int qm = q * resp_dim;
    Vector beta(qm);
    for (int j = 0; j < resp_dim; ++j) beta.segment(j * q, q) = B.col(j);
    Matrix V = Matrix::Zero(qm, qm);
    Vector u(qm);
    for (int g = 0; g < G; ++g) {
        const auto Ag = Ak.middleRows(g * rows_per, rows_per);
        const auto Eg = E.middleRows(g * rows_per, rows_per);
        const Matrix Ug = bread * (Ag.transpose() * Eg);  // q x m
        for (int j = 0; j < resp_dim; ++j) u.segment(j * q, q) = Ug.col(j);
        V.noalias() += u * u.transpose();
    }
    V *= static_cast<double>(G) / (G - 1);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(V);
    const Vector& ev = eig.eigenvalues();
    const double emax = ev.maxCoeff();
    const Vector proj = eig.eigenvectors().transpose() * beta;
    double W = 0.0;
    int rank = 0;
    for (int i = 0; i < qm; ++i)
        if (ev(i) > 1e-10 * emax) {
            W += proj(i) * proj(i) / ev(i);
            ++rank;
        }
    if (rank == 0) return res;
    res.df = rank;
    res.statistic = W / rank;
    boost::math::fisher_f dist(rank, G - 1);
    res.p_value = std::clamp(boost::math::cdf(boost::math::complement(dist, res.statistic)), 0.0, 1.0);
    res.rejected = res.p_value < alpha;
    return res;
}

OrderTestResult test_markov_order(const Dataset& data, int k, double alpha) {
    return LagRegressionTest{}.test(data, k, alpha);
}

EstimateReport dr_at_order(const Dataset& data, const TargetPolicy& pi, int k, const NuisanceOptions& opts,
                           double alpha) {
    const Dataset aug = augment_history(data, k);
    const TargetPolicy pik = augment_policy(pi, history_coding(data, k));
    NuisanceOptions o = opts;
    o.nu.clear();  // the exact initial law refers to the unaugmented state space
    const NuisanceSet nuis = fit_nuisances(aug, pik, o);
    return estimate_dr(aug, nuis, alpha);
}

SelectionResult select_and_estimate(const Dataset& data, const TargetPolicy& pi, const SelectOptions& opts,
                                    const OrderTest& test) {
    if (opts.max_order < 1) throw InvalidArgument("select_and_estimate: K must be >= 1");
    SelectionResult out;
    for (int k = 1; k <= opts.max_order; ++k) {
        OrderTestResult r = test.test(data, k, opts.alpha);
        out.tests.push_back(r);
        if (!r.rejected) {
            out.order = k;
            for (int j = k; j >= 1; --j) {
                try {
                    out.report = dr_at_order(data, pi, j, opts.nuisance, opts.alpha_ci);
                    out.estimated_order = j;
                    return out;
                } catch (const SingularSystem& e) {
                    if (j == 1) throw;
                    if (out.fallback_reason.empty()) out.fallback_reason = e.what();
                } catch (const IvWeakError& e) {
                    if (j == 1) throw;
                    if (out.fallback_reason.empty()) out.fallback_reason = e.what();
                }
            }
        }
    }
    out.order = 0;
    out.pomdp = true;
    out.report = pomdp_dm(data, pi, opts.pomdp, opts.alpha_ci);
    return out;
}

}  // namespace ivope
