#ifndef FEC_RNG_HPP
#define FEC_RNG_HPP

#include <cstdint>
#include <cmath>
#include <random>
#include <vector>

namespace fec {

// splitmix64, used to derive independent substream seeds from a master seed.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic PRNG wrapper. Every stochastic operation in the workbench
// takes one of these, so results are a pure function of (inputs, seed).
// Gaussian draws use Box-Muller on top of mt19937_64 to keep the output
// byte-identical across standard library versions.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // Substream derivation: domain tag plus index, hashed so that distinct
    // (tag, index) pairs never collide in practice. Used for per-block
    // Monte-Carlo streams and train/test dataset separation.
    static uint64_t derive_seed(uint64_t master, uint64_t domain, uint64_t index) {
        uint64_t s = mix64(master ^ 0xa02463d1c33ca8e5ULL);
        s = mix64(s ^ domain * 0xd6e8feb86659fd93ULL);
        s = mix64(s ^ index * 0xc2b2ae3d27d4eb4fULL);
        return s;
    }

    static Rng derive(uint64_t master, uint64_t domain, uint64_t index) {
        return Rng(derive_seed(master, domain, index));
    }

    uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() {
        return (gen_() >> 11) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int bit() { return static_cast<int>(gen_() & 1u); }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) { return gen_() % n; }

    // standard normal via Box-Muller (one value per call)
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    std::vector<uint8_t> random_bits(size_t n) {
        std::vector<uint8_t> b(n);
        for (auto& x : b) x = static_cast<uint8_t>(bit());
        return b;
    }

  private:
    std::mt19937_64 gen_;
};

} // namespace fec

#endif
