#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace llc {

/// Seeded pseudo-random stream. Every stochastic routine in the library takes
/// one of these explicitly; there is no global generator.
class Rng {
public:
    using Engine = std::mt19937_64;

    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    /// Uniform integer on the closed range [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }

    double normal() { return normal_(engine_); }

    bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }

    /// Independent child stream; the child seed depends only on (seed, stream).
    Rng derive(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + 0x9e3779b97f4a7c15ULL))); }

    Engine& engine() noexcept { return engine_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    Engine engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Fills `out` with i.i.d. N(0, variance) draws.
inline void fill_gaussian(Rng& rng, std::span<double> out, double variance) {
    if (variance < 0.0) throw std::invalid_argument("gaussian: negative variance");
    const double sd = std::sqrt(variance);
    for (double& v : out) v = sd * rng.normal();
}

inline std::vector<double> gaussian_vector(Rng& rng, std::size_t dim, double variance) {
    std::vector<double> out(dim);
    fill_gaussian(rng, out, variance);
    return out;
}

}  // namespace llc
