#pragma once

#include <cstdint>
#include <string_view>

namespace hstc {

/// splitmix64 finalizer; used for all seed derivation.
[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for a named sub-stream ("fit", "simulate", "subsample", ...). Stable
/// under edits to unrelated streams.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept;

/// Seed for the index-th member of a family (sample k, bin t, ...).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// xoshiro256** generator. Every variate is produced by code in this
/// project, so equal seeds give equal draws on every platform and standard
/// library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept;

    std::uint64_t next_u64() noexcept;
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform on (0, 1).
    double uniform_open() noexcept;
    /// Uniform integer on [0, bound).
    std::uint64_t below(std::uint64_t bound) noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    std::int64_t poisson(double mean);

private:
    std::uint64_t s_[4];
};

}  // namespace hstc
