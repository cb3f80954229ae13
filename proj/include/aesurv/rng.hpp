#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace aesurv {

/// SplitMix64 finalizer; used to derive independent stream seeds from one
/// master seed without correlated low bits.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(0x9e3779b97f4a7c15ULL * (stream + 1)));
}

/// Deterministic draws on top of std::mt19937_64. The standard library's
/// distribution objects are implementation-defined, so the transformations
/// live here: identical seeds give identical streams on every platform.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0,1): 53-bit draw centred between the
    /// representable grid points, so logs of u and 1-u are always finite.
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Inverse-CDF exponential; strictly positive for rate > 0.
    double exponential(double rate) { return -std::log(1.0 - uniform()) / rate; }

    /// Box-Muller standard normal (pairs cached).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        cached_ = radius * std::sin(angle);
        have_cached_ = true;
        return radius * std::cos(angle);
    }

    static constexpr const char* algorithm() { return "mt19937_64"; }

  private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace aesurv
