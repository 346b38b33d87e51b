#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace rvts::rng {

// Philox4x32-10 block function: maps a 128-bit counter under a 64-bit key to
// 128 pseudorandom bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

std::uint64_t fnv1a64(std::string_view text) noexcept;
std::uint64_t mix64(std::uint64_t x) noexcept;

// A stream is the pair (seed, stream id). Every stream is an independent,
// randomly addressable sequence of 64-bit words; child streams are derived
// by hashing, so chunked parallel work is reproducible independent of how
// chunks are scheduled.
class Stream {
 public:
  constexpr Stream() = default;
  constexpr Stream(std::uint64_t seed, std::uint64_t id) : seed_(seed), id_(id) {}

  static Stream named(std::uint64_t seed, std::string_view name) noexcept {
    return Stream(seed, fnv1a64(name));
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t id() const noexcept { return id_; }

  Stream child(std::uint64_t index) const noexcept {
    return Stream(seed_, mix64(id_ ^ mix64(index + 0x9E3779B97F4A7C15ULL)));
  }
  Stream child(std::string_view name) const noexcept { return child(fnv1a64(name)); }

  // Word `index` of the stream.
  std::uint64_t word(std::uint64_t index) const noexcept;

  friend bool operator==(const Stream&, const Stream&) = default;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t id_ = 0;
};

// Sequential view of a stream; satisfies UniformRandomBitGenerator.
class Engine {
 public:
  using result_type = std::uint64_t;

  explicit Engine(Stream stream) noexcept : stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  // Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  // Uniform on (0, 1]; never returns zero so U^{-1/a} stays finite.
  double uniform_pos() noexcept {
    return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  }
  double normal() noexcept;
  // Pareto(alpha) on [1, inf) by inverse transform.
  double pareto(double alpha) noexcept;
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  const Stream& stream() const noexcept { return stream_; }
  std::uint64_t position() const noexcept { return block_ * 2 + used_; }

 private:
  Stream stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  unsigned used_ = 2;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rvts::rng
