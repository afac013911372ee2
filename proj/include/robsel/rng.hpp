#pragma once

#include <cstdint>
#include <limits>

namespace robsel {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Key for the random stream addressed by (master seed, replication, stream).
// The mapping is pure integer arithmetic, so a given triple names the same
// stream on every platform.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication,
                                    std::uint64_t stream) noexcept {
  std::uint64_t h = mix64(master + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (replication + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (stream + 0x85157af5d4c3a6f1ULL));
  return h;
}

// Counter-based generator: the n-th output is mix64(key + n * golden), so a
// stream is fully described by its key and position. Satisfies
// UniformRandomBitGenerator and can be handed to <random> distributions.
class Stream {
 public:
  using result_type = std::uint64_t;

  constexpr Stream() noexcept = default;
  constexpr explicit Stream(std::uint64_t key) noexcept : key_(key) {}
  constexpr Stream(std::uint64_t master, std::uint64_t replication,
                   std::uint64_t stream) noexcept
      : key_(derive_seed(master, replication, stream)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace robsel
