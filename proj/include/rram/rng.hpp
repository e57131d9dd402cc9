#pragma once

#include <cstdint>
#include <initializer_list>

namespace rram {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Folds an ordered list of words into one 64-bit key.
std::uint64_t mix_key(std::initializer_list<std::uint64_t> words) noexcept;

/// Counter-based random stream.
///
/// Draw i of a stream is a pure function of (key, i), so a device's samples
/// depend only on its key and never on how many other devices were sampled
/// before it or on which thread did the sampling.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t next_u64() noexcept;

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept;

    /// Standard normal (Box-Muller, one value per pair of uniforms).
    double normal() noexcept;

    /// Standard normal restricted to [-limit, limit] by re-drawing.
    double truncated_normal(double limit) noexcept;

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) noexcept;

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace rram
