#include "ivope/features.hpp"

#include "ivope/errors.hpp"

namespace ivope {

StateBasis StateBasis::one_hot(int num_states) {
    if (num_states < 1) throw InvalidArgument("one-hot basis needs at least one state");
    return StateBasis(Kind::OneHot, 1, num_states);
}

StateBasis StateBasis::linear(int state_dim) {
    if (state_dim < 1) throw InvalidArgument("linear basis needs state_dim >= 1");
    return StateBasis(Kind::Linear, state_dim, state_dim + 1);
}

StateBasis StateBasis::quadratic(int state_dim) {
    if (state_dim < 1) throw InvalidArgument("quadratic basis needs state_dim >= 1");
    return StateBasis(Kind::Quadratic, state_dim, 1 + state_dim + state_dim * (state_dim + 1) / 2);
}

StateBasis StateBasis::cubic(int state_dim) {
    if (state_dim < 1) throw InvalidArgument("cubic basis needs state_dim >= 1");
    const int d = state_dim;
    return StateBasis(Kind::Cubic, d, 1 + d + d * (d + 1) / 2 + d * (d + 1) * (d + 2) / 6);
}

std::string state_basis_name(StateBasis::Kind k) {
    switch (k) {
    case StateBasis::Kind::OneHot: return "one_hot";
    case StateBasis::Kind::Linear: return "linear";
    case StateBasis::Kind::Quadratic: return "quadratic";
    case StateBasis::Kind::Cubic: return "cubic";
    }
    return "unknown";
}

StateBasis StateBasis::default_for(const Dataset& data) {
    return data.discrete ? one_hot(data.state_count()) : quadratic(data.state_dim);
}

void StateBasis::eval(Eigen::Ref<const Eigen::RowVectorXd> s, Eigen::Ref<Vector> out) const {
    out.setZero();
    switch (kind_) {
    case Kind::OneHot: {
        const int code = static_cast<int>(s(0));
        if (code < 0 || code >= dim_) throw InvalidArgument("state code outside one-hot basis");
        out(code) = 1.0;
        break;
    }
    case Kind::Linear:
        out(0) = 1.0;
        out.segment(1, input_dim_) = s.transpose();
        break;
    case Kind::Quadratic:
    case Kind::Cubic: {
        const int d = input_dim_;
        out(0) = 1.0;
        out.segment(1, d) = s.transpose();
        int k = 1 + d;
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) out(k++) = s(i) * s(j);
        if (kind_ == Kind::Cubic)
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j)
                    for (int l = j; l < d; ++l) out(k++) = s(i) * s(j) * s(l);
        break;
    }
    }
}

Vector StateBasis::operator()(Eigen::Ref<const Eigen::RowVectorXd> s) const {
    Vector out(dim_);
    eval(s, out);
    return out;
}

SzaBasis SzaBasis::table(int num_states, bool with_iv) {
    if (num_states < 1) throw InvalidArgument("table basis needs at least one state");
    return SzaBasis(Kind::Table, with_iv, 1, num_states * (with_iv ? 4 : 2));
}

SzaBasis SzaBasis::interactions(int state_dim, bool with_iv) {
    if (state_dim < 1) throw InvalidArgument("interaction basis needs state_dim >= 1");
    const int dim = with_iv ? 1 + 3 * state_dim + 3 : 1 + 2 * state_dim + 1;
    return SzaBasis(Kind::Interactions, with_iv, state_dim, dim);
}

SzaBasis SzaBasis::tensor(const StateBasis& state, bool with_iv) {
    SzaBasis b(Kind::Tensor, with_iv, state.input_dim(), state.dim() * (with_iv ? 4 : 2));
    b.state_ = state;
    return b;
}

SzaBasis SzaBasis::constant() { return SzaBasis(Kind::Constant, true, 0, 1); }

SzaBasis SzaBasis::default_for(const Dataset& data, bool with_iv) {
    return data.discrete ? table(data.state_count(), with_iv) : interactions(data.state_dim, with_iv);
}

void SzaBasis::eval(Eigen::Ref<const Eigen::RowVectorXd> s, int z, int a, Eigen::Ref<Vector> out) const {
    out.setZero();
    switch (kind_) {
    case Kind::Constant:
        out(0) = 1.0;
        break;
    case Kind::Table: {
        const int code = static_cast<int>(s(0));
        const int c = cell(code, z, a);
        if (code < 0 || c >= dim_) throw InvalidArgument("state code outside table basis");
        out(c) = 1.0;
        break;
    }
    case Kind::Interactions: {
        const int d = input_dim_;
        const double zd = z, ad = a;
        out(0) = 1.0;
        out.segment(1, d) = s.transpose();
        if (with_iv_) {
            out(1 + d) = zd;
            out(2 + d) = ad;
            out.segment(3 + d, d) = s.transpose() * zd;
            out.segment(3 + 2 * d, d) = s.transpose() * ad;
            out(3 + 3 * d) = zd * ad;
        } else {
            out(1 + d) = ad;
            out.segment(2 + d, d) = s.transpose() * ad;
        }
        break;
    }
    case Kind::Tensor: {
        const int m = state_.dim();
        state_.eval(s, out.head(m));
        const Vector g = out.head(m);
        if (with_iv_) {
            out.segment(m, m) = g * z;
            out.segment(2 * m, m) = g * a;
            out.segment(3 * m, m) = g * (z * a);
        } else {
            out.segment(m, m) = g * a;
        }
        break;
    }
    }
}

Vector SzaBasis::operator()(Eigen::Ref<const Eigen::RowVectorXd> s, int z, int a) const {
    Vector out(dim_);
    eval(s, z, a, out);
    return out;
}

}  // namespace ivope
