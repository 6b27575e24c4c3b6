#include "ivope/tabular.hpp"

#include "ivope/errors.hpp"

namespace ivope {

int TabularModel::next_state(int s, int z, int a, int o_next) const {
    if (coding.order == 1) return o_next;
    const int radix = coding.lag_radix();
    int rest = s / num_obs;
    const int o = s % num_obs;
    int code = o_next;
    int scale = num_obs;
    int carry = o * 4 + z * 2 + a;
    for (int j = 1; j < coding.order; ++j) {
        const int lag = rest % radix;
        rest /= radix;
        code += scale * carry;
        scale *= radix;
        carry = lag;
    }
    return code;
}

double TabularModel::mean_reward(int s, int z, int a) const {
    double m = 0.0;
    for (int r = 0; r < num_rewards(); ++r)
        for (int o = 0; o < num_obs; ++o) m += reward_values[r] * prob_rs(s, z, a, r, o);
    return m;
}

TabularModel tabular_model(const EnvSpec& env) {
    if (env.kind() != EnvKind::ToyTabular) throw InvalidArgument("tabular_model: only ToyTabular is tabular-exact");
    const bool confounded = std::get<ToyTabularParams>(env.params()).confounded;

    TabularModel m;
    m.coding.order = env.order();
    m.coding.n_obs = 2;
    m.num_obs = 2;
    m.num_states = m.coding.num_states();
    m.num_u = 2;
    m.reward_values = {0.0, 10.0};
    const int nS = m.num_states, nU = 2, nR = 2, nO = 2;

    m.nu.assign(nS, 0.0);
    m.pz1.assign(nS, 0.0);
    m.pa1.assign(nS * 2, 0.0);
    m.joint.assign(nS * 4 * nR * nO, 0.0);
    m.pu.assign(nS * nU, 0.0);
    m.pa1_u.assign(nS * 2 * nU, 0.0);
    m.joint_u.assign(nS * 2 * nU * nR * nO, 0.0);

    // Initial law: observation ~ Ber(0.5), all lags padded.
    int pad_suffix = 0;
    {
        int scale = 1;
        for (int j = 1; j < m.coding.order; ++j) {
            pad_suffix += scale * m.coding.pad_code();
            scale *= m.coding.lag_radix();
        }
    }
    for (int o = 0; o < nO; ++o) m.nu[o + nO * pad_suffix] = 0.5;

    for (int s = 0; s < nS; ++s) {
        const int o = s % nO;
        // Law of U_t given the augmented state: driven by the oldest lagged action.
        double p_high = 0.5;
        if (m.coding.order > 1) {
            int rest = s / nO;
            int oldest = 0;
            for (int j = 1; j < m.coding.order; ++j) {
                oldest = rest % m.coding.lag_radix();
                rest /= m.coding.lag_radix();
            }
            if (oldest != m.coding.pad_code()) p_high = (oldest & 1) ? env.lag_prob_high() : env.lag_prob_low();
        }
        m.pu[s * nU + 0] = 1.0 - p_high;
        m.pu[s * nU + 1] = p_high;
        m.pz1[s] = 0.5 * sigmoid(o + 0.25 - 2.0) + 0.5 * sigmoid(o - 2.0);

        for (int u = 0; u < nU; ++u) {
            for (int z = 0; z < 2; ++z)
                m.pa1_u[(s * 2 + z) * nU + u] = sigmoid(o + 2.0 * z + (confounded ? 0.5 * u : 0.0) - 2.0);
            for (int a = 0; a < 2; ++a) {
                const double p = sigmoid(o + a + u - 2.0);
                const double pr[2] = {1.0 - p, p};
                for (int r = 0; r < nR; ++r)
                    for (int on = 0; on < nO; ++on)
                        m.joint_u[(((s * 2 + a) * nU + u) * nR + r) * nO + on] = pr[r] * pr[on];
            }
        }

        // Observational laws: posterior of U given (s, z, a) through the action likelihood.
        for (int z = 0; z < 2; ++z) {
            double p1 = 0.0;
            for (int u = 0; u < nU; ++u) p1 += m.pu[s * nU + u] * m.pa1_u[(s * 2 + z) * nU + u];
            m.pa1[s * 2 + z] = p1;
            for (int a = 0; a < 2; ++a) {
                const double pa_marg = a == 1 ? p1 : 1.0 - p1;
                for (int u = 0; u < nU; ++u) {
                    const double pau = m.pa1_u[(s * 2 + z) * nU + u];
                    const double post = m.pu[s * nU + u] * (a == 1 ? pau : 1.0 - pau) / pa_marg;
                    for (int r = 0; r < nR; ++r)
                        for (int on = 0; on < nO; ++on)
                            m.joint[((s * 4 + z * 2 + a) * nR + r) * nO + on] +=
                                post * m.joint_u[(((s * 2 + a) * nU + u) * nR + r) * nO + on];
                }
            }
        }
    }
    return m;
}

}  // namespace ivope
