#pragma once

#include <cstdint>
#include <random>

namespace wfsep {

/// SplitMix64 finaliser. Used to turn (seed, stream) pairs into engine seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent child stream. derive_seed(s, a, b) == derive_seed(derive_seed(s, a), b).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream);

/// Deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Distributions are implemented here rather than taken from
/// <random>, whose distribution algorithms are implementation-defined:
/// uniform() uses the top 53 bits, normal() is the Marsaglia polar method.
/// A stream has a single owner; parallel consumers take split() children.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);
    double normal();
    bool bernoulli(double p);

    Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace wfsep
