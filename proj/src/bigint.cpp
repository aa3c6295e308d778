#include "degradekit/bigint.hpp"

#include <algorithm>
#include <cctype>

#include "degradekit/error.hpp"

namespace degradekit {

Integer from_hex(std::string_view hex) {
  std::string s(hex);
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
          s.end());
  bool neg = false;
  if (!s.empty() && s[0] == '-') {
    neg = true;
    s.erase(0, 1);
  }
  if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.erase(0, 2);
  require(!s.empty() && std::all_of(s.begin(), s.end(),
                                    [](unsigned char c) { return std::isxdigit(c); }),
          ErrorKind::Format, "invalid hex integer: '" + std::string(hex) + "'");
  Integer out;
  out.set_str(s, 16);
  return neg ? Integer(-out) : out;
}

std::string to_hex(const Integer& x) {
  std::string s = x.get_str(16);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

Integer from_decimal(std::string_view dec) {
  Integer out;
  require(out.set_str(std::string(dec), 10) == 0, ErrorKind::Format,
          "invalid decimal integer: '" + std::string(dec) + "'");
  return out;
}

std::size_t bit_length(const Integer& x) {
  if (x == 0) return 0;
  return mpz_sizeinbase(x.get_mpz_t(), 2);
}

std::size_t byte_length(const Integer& x) { return (bit_length(x) + 7) / 8; }

Integer powm(const Integer& base, const Integer& exp, const Integer& mod) {
  Integer out;
  Integer b = mod_floor(base, mod);
  mpz_powm(out.get_mpz_t(), b.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

Integer invert(const Integer& x, const Integer& mod) {
  Integer out;
  require(mpz_invert(out.get_mpz_t(), x.get_mpz_t(), mod.get_mpz_t()) != 0, ErrorKind::Domain,
          "value is not invertible modulo p");
  return out;
}

Integer mod_floor(const Integer& x, const Integer& mod) {
  Integer r;
  mpz_fdiv_r(r.get_mpz_t(), x.get_mpz_t(), mod.get_mpz_t());
  return r;
}

Integer Rng::below(const Integer& bound) {
  require(bound > 0, ErrorKind::Validation, "Rng::below requires a positive bound");
  const std::size_t bits = bit_length(bound);
  const std::size_t words = (bits + 63) / 64;
  const std::size_t excess = words * 64 - bits;
  for (;;) {
    Integer v = 0;
    for (std::size_t i = 0; i < words; ++i) {
      std::uint64_t w = engine_();
      if (i == 0 && excess) w >>= excess;
      v <<= 64;
      Integer word;
      mpz_import(word.get_mpz_t(), 1, 1, sizeof(w), 0, 0, &w);
      v += word;
    }
    if (v < bound) return v;
  }
}

Integer Rng::between(const Integer& lo, const Integer& hi) {
  require(lo < hi, ErrorKind::Validation, "Rng::between requires lo < hi");
  return lo + below(hi - lo);
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b * 0xd1b54a32d192ed03ULL));
  return (h >> 11) * 0x1.0p-53;
}

}  // namespace degradekit
