#pragma once

#include <cstdint>
#include <string_view>

namespace nest {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Counter-based deterministic stream: draw i of stream (seed, label) depends
// only on (seed, label, i), never on platform or call history. Forking with a
// label or salt derives an independent stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label)
      : key_(splitmix64(seed ^ splitmix64(fnv1a64(label)))) {}

  RngStream fork(std::string_view label) const {
    RngStream s(*this);
    s.key_ = splitmix64(key_ ^ splitmix64(fnv1a64(label)));
    s.counter_ = 0;
    return s;
  }

  RngStream fork(std::uint64_t salt) const {
    RngStream s(*this);
    s.key_ = splitmix64(key_ ^ splitmix64(salt + 0x632BE59BD9B4E019ULL));
    s.counter_ = 0;
    return s;
  }

  std::uint64_t next_u64() { return raw(counter_++); }

  // Uniform in [0, 1).
  double uniform() { return to_unit(next_u64()); }

  // Uniform in (0, 1), both endpoints excluded.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Indexed draw; does not advance the stream.
  double at(std::uint64_t index) const { return to_unit(raw(index)); }

 private:
  std::uint64_t raw(std::uint64_t index) const { return splitmix64(splitmix64(key_ + index)); }

  static double to_unit(std::uint64_t x) {
    return static_cast<double>(x >> 11) * (1.0 / 9007199254740992.0);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace nest
