#include "ivope/rng.hpp"

#include <cmath>
#include <numbers>

namespace ivope {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

RngStream::RngStream(std::uint64_t key, std::uint64_t stream_id) noexcept
    : key_(key), stream_id_(stream_id) {}

void RngStream::refill() noexcept {
    const std::array<std::uint32_t, 4> ctr{
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
    const std::array<std::uint32_t, 2> k{static_cast<std::uint32_t>(key_),
                                         static_cast<std::uint32_t>(key_ >> 32)};
    buffer_ = philox4x32(ctr, k);
    ++block_;
    pos_ = 0;
}

std::uint64_t RngStream::next_u64() noexcept {
    if (pos_ > 2) refill();
    const std::uint64_t v = (static_cast<std::uint64_t>(buffer_[pos_]) << 32) | buffer_[pos_ + 1];
    pos_ += 2;
    return v;
}

double RngStream::uniform() noexcept {
    // (k + 0.5) / 2^53 never hits 0 or 1
    const std::uint64_t k = next_u64() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return spare_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(theta);
    has_spare_normal_ = true;
    return r * std::cos(theta);
}

RngStream RngStream::substream(std::uint64_t index) const noexcept {
    const std::uint64_t child_key = splitmix64(key_ ^ splitmix64(stream_id_ + 0x632BE59BD9B4E019ull));
    return RngStream(child_key, splitmix64(index ^ 0xA0761D6478BD642Full));
}

RngStream derive_rng_stream(std::uint64_t seed, std::string_view purpose_tag, std::uint64_t index) {
    const std::uint64_t key = splitmix64(seed ^ splitmix64(fnv1a(purpose_tag)));
    return RngStream(key, index);
}

}  // namespace ivope
