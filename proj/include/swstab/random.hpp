#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace swstab {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Maps a 128-bit counter and a 64-bit key to 128
/// pseudo-random bits; output depends on nothing else.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                                std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

/// SplitMix64 finalizer; used only to derive substream keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Key of the substream for (seed, index, domain). Distinct domains give
/// independent streams for one path (e.g. chain jumps vs Brownian noise).
constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index,
                                      std::uint64_t domain = 0) {
    return mix64(mix64(mix64(seed) + index) + domain);
}

/// Sequential view over Philox blocks: block b is philox4x32({b_lo, b_hi, 0, 0}, key),
/// each block yields two 64-bit words.
class CounterStream {
public:
    explicit CounterStream(std::uint64_t key) noexcept
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

    std::uint64_t next_u64() noexcept {
        if (slot_ == 2) {
            const auto out = philox4x32({static_cast<std::uint32_t>(block_),
                                         static_cast<std::uint32_t>(block_ >> 32), 0u, 0u},
                                        key_);
            buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
            buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
            ++block_;
            slot_ = 0;
        }
        return buffer_[slot_++];
    }

    /// Uniform on the open interval (0, 1): (top 53 bits + 0.5) * 2^-53.
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Unit-rate exponential by inversion.
    double exponential() noexcept { return -std::log(uniform()); }

    /// Standard normal by inversion of the CDF.
    double normal() noexcept;

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int slot_ = 2;
};

/// Inverse standard normal CDF, P. J. Acklam's rational approximation
/// (relative error < 1.15e-9). Central region |p - 0.5| <= 0.47575 uses a
/// 5/5 rational in q = p - 0.5; tails use a 4/4 rational in sqrt(-2 log p).
inline double normal_quantile(double p) {
    constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                            -2.759285104469687e+02, 1.383577518672690e+02,
                            -3.066479806614716e+01, 2.506628277459239e+00};
    constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                            -1.556989798598866e+02, 6.680131188771972e+01,
                            -1.328068155288572e+01};
    constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                            -2.400758277161838e+00, -2.549732539343734e+00,
                            4.374664141464968e+00,  2.938163982698783e+00};
    constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                            2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double low = 0.02425;
    constexpr double high = 1.0 - low;

    if (p < low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > high) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

inline double CounterStream::normal() noexcept { return normal_quantile(uniform()); }

} // namespace swstab
