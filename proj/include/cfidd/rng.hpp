#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <vector>

namespace cfidd {

// Deterministic PRNG (splitmix64) with explicit substream derivation.
// std::mt19937 would be reproducible too, but the std distributions are
// implementation-defined, so uniforms/normals are generated explicitly here to
// make every byte of the simulation identical across platforms and runs.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Independent stream for (seed, tag); used for per-realization substreams.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
        return mix(mix(seed + 0x9e3779b97f4a7c15ULL * (tag + 1)) ^ (tag + 0x632be59bd9b4e019ULL));
    }

    Rng fork(std::uint64_t tag) const { return Rng(derive(state_, tag)); }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // in [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // unbiased integer in [0, n)
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // standard normal via Box-Muller (pairwise, one value cached)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // circularly-symmetric complex normal, unit total variance
    std::complex<double> cnormal() {
        const double re = normal();
        const double im = normal();
        return {re * 0.7071067811865476, im * 0.7071067811865476};
    }

    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace cfidd
