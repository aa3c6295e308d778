#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <gmpxx.h>

namespace degradekit {

using Integer = mpz_class;

Integer from_hex(std::string_view hex);
// Uppercase hex, no prefix; "0" for zero, leading '-' for negatives.
std::string to_hex(const Integer& x);
Integer from_decimal(std::string_view dec);

std::size_t bit_length(const Integer& x);
std::size_t byte_length(const Integer& x);

Integer powm(const Integer& base, const Integer& exp, const Integer& mod);
Integer invert(const Integer& x, const Integer& mod);
// Non-negative residue in [0, mod).
Integer mod_floor(const Integer& x, const Integer& mod);

// Seeded generator for reproducible protocol randomness. Big values are drawn
// by rejection sampling from 64-bit words so streams are platform independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01() { return (engine_() >> 11) * 0x1.0p-53; }
  // Uniform in [0, bound), bound > 0.
  Integer below(const Integer& bound);
  // Uniform in [lo, hi), lo < hi.
  Integer between(const Integer& lo, const Integer& hi);
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Stateless uniform in [0,1) from a (seed, a, b) triple; mixes with splitmix64.
double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace degradekit
