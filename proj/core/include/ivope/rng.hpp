#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace ivope {

/// Counter-based random stream (Philox4x32-10).
///
/// The stream is fully determined by a 64-bit key and a 64-bit stream id;
/// draw k is a pure function of (key, stream id, k). No global state, so
/// streams are reproducible across runs, threads and platforms.
class RngStream {
public:
    RngStream(std::uint64_t key, std::uint64_t stream_id) noexcept;

    std::uint64_t next_u64() noexcept;
    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() noexcept;
    /// Standard normal via Box-Muller.
    double normal() noexcept;
    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Independent child stream; the parent is left untouched.
    RngStream substream(std::uint64_t index) const noexcept;

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

private:
    void refill() noexcept;

    std::uint64_t key_;
    std::uint64_t stream_id_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int pos_ = 4;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

/// Philox4x32-10 block function, exposed for testing.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Deterministic stream for (seed, purpose tag, index).
RngStream derive_rng_stream(std::uint64_t seed, std::string_view purpose_tag, std::uint64_t index);

}  // namespace ivope
