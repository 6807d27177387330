#pragma once

#include <array>
#include <cstdint>

namespace wobble {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
/// pure function of (counter, key), so any element of a stream can be
/// produced in any order on any thread.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// Maps two 32-bit words to a double strictly inside (0, 1) on a 2^-52 grid.
double uniform_open01(std::uint32_t hi, std::uint32_t lo) noexcept;

/// Sequential convenience stream over Philox blocks, keyed by a seed and a
/// stream id. Used where a plain sequence of draws is needed (permutation
/// tests, synthetic data), with the same platform-independent output.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;  // (0, 1)
  double normal() noexcept;   // inverse-CDF standard normal
  /// Uniform integer in [0, bound), bound >= 1, without modulo bias.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  void refill() noexcept;

  PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  PhiloxCounter out_{};
  int used_ = 4;
};

}  // namespace wobble
