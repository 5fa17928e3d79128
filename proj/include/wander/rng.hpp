#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace wander {

/// One SplitMix64 step; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Mixes a base seed with a path of integers into an independent stream seed.
/// Used to give every (generation, attempt, purpose) its own reproducible stream.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept;

/// Seeded random source with distributions implemented here rather than taken from
/// <random>: the standard distributions are implementation-defined, and replays must
/// agree across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    /// Uniform integer in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n);

    /// Standard normal via Box-Muller.
    double normal();

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace wander
