#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace countssm {

/// Counter-based Philox4x32-10 generator.
///
/// A generator is identified by a 64-bit seed (the Philox key) and a 64-bit
/// stream id (the upper half of the counter). Streams with distinct ids never
/// overlap, so each panel series or simulated path gets its own generator via
/// `Rng(seed, id)` with no coordination between threads.
///
/// Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform double on the open interval (0, 1).
  double uniform() noexcept;

  /// Standard normal deviate.
  double normal() noexcept;

  /// A child generator on a stream derived from this generator's stream and
  /// `child`. Deterministic; does not advance this generator.
  Rng split(std::uint64_t child) const noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  using Block = std::array<std::uint32_t, 4>;
  /// The raw Philox4x32-10 bijection, exposed for known-answer tests.
  static Block philox(Block counter, std::array<std::uint32_t, 2> key) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  int used_ = 4;
};

}  // namespace countssm
