#ifndef L1L2_RANDOM_HPP
#define L1L2_RANDOM_HPP

#include <cstdint>
#include <limits>

namespace l1l2 {

/// Purpose tags that separate the random streams of one trial.
enum class StreamTag : std::uint64_t {
  Matrix = 0x4d41,
  Support = 0x5355,
  Amplitude = 0x414d,
  Noise = 0x4e4f,
  Check = 0x434b,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the i-th output is a hash of (key, i), so streams
/// keyed by (seed, trial, tag) are independent and cheap to create.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static CounterRng stream(std::uint64_t seed, std::uint64_t trial, StreamTag tag) {
    return CounterRng(derive_key(seed, trial, tag));
  }

  static constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t trial, StreamTag tag) {
    return splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ static_cast<std::uint64_t>(tag));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ ^ splitmix64(counter_++)); }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace l1l2

#endif  // L1L2_RANDOM_HPP
