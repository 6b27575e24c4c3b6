#pragma once

#include "ivope/core.hpp"

namespace ivope {

/// State augmentation for k-th order processes: S̃_t = (O_t, triplets
/// (O_{t-j}, Z_{t-j}, A_{t-j}) for j = 1..k-1). Lags reaching before the
/// episode start are padded.
///
/// Tabular codes: lag triplet j has code o*4 + z*2 + a, or 4*n_obs for padding,
/// and the augmented code is o + n_obs * Σ_j lag_j * (4*n_obs + 1)^(j-1).
/// Continuous: the vector (O_t, [O_{t-j}, Z_{t-j}, A_{t-j}, present_j]...) with
/// zeros for padded lags.
struct HistoryCoding {
    int order = 1;
    int n_obs = 0;      // tabular observation count (0 for continuous)
    int obs_dim = 1;    // continuous observation dimension

    bool discrete() const noexcept { return n_obs > 0; }
    int lag_radix() const noexcept { return 4 * n_obs + 1; }
    int pad_code() const noexcept { return 4 * n_obs; }
    /// Augmented tabular state count n_obs * radix^(k-1).
    int num_states() const;
    int state_dim() const noexcept { return discrete() ? 1 : obs_dim + (order - 1) * (obs_dim + 3); }
    /// Observation code of an augmented tabular code.
    int observation(int code) const noexcept { return code % n_obs; }
};

HistoryCoding history_coding(const Dataset& data, int k);

/// Augmented dataset of order k (k = 1 returns a copy).
Dataset augment_history(const Dataset& data, int k);

/// Target policy acting on the observation part of an augmented state.
TargetPolicy augment_policy(const TargetPolicy& pi, const HistoryCoding& coding);

}  // namespace ivope
