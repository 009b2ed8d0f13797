#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace rare_reach {

/// Philox4x32-10 block function. Maps a 128-bit counter and a 64-bit key to
/// 128 bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// 64-bit FNV-1a, used to turn experiment labels into stream ids.
std::uint64_t experimentId(std::string_view label);

/// Mixes extra integers (barrier, particle count, ...) into an experiment id.
std::uint64_t experimentId(std::uint64_t base, std::uint64_t salt);

/**
 * A counter-based random stream.
 *
 * The stream for replication `r` of experiment `e` under master seed `s` is a
 * pure function of (s, e, r): the key is derived from (s, e) and the upper
 * half of the Philox counter holds `r`. Draws advance only the lower half, so
 * streams never overlap and can be created in any order on any thread.
 *
 * Satisfies UniformRandomBitGenerator.
 */
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t masterSeed, std::uint64_t experiment,
         std::uint64_t replication);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal (Box-Muller, second variate cached).
  double normal();
  /// Exponential with the given rate.
  double exponential(double rate);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t replication_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spareNormal_ = 0.0;
  bool hasSpare_ = false;
};

/// Factory bound to one (masterSeed, experiment) pair.
class StreamFamily {
 public:
  StreamFamily(std::uint64_t masterSeed, std::uint64_t experiment)
      : seed_(masterSeed), experiment_(experiment) {}

  Stream operator()(std::uint64_t replication) const {
    return Stream(seed_, experiment_, replication);
  }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t experiment() const { return experiment_; }

 private:
  std::uint64_t seed_;
  std::uint64_t experiment_;
};

}  // namespace rare_reach
