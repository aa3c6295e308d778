#pragma once

#include <doctest.h>

#include <cmath>
#include <functional>
#include <optional>

#include "degradekit/error.hpp"

// Runs f and reports the kind of the thrown degradekit::Error, if any.
inline std::optional<degradekit::ErrorKind> thrown_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const degradekit::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

#define CHECK_KIND(expr, kind) CHECK(thrown_kind([&] { (void)(expr); }) == (kind))

// Binomial count within 3 sigma of n*p.
inline bool within_3sigma(double count, double n, double p) {
  const double sd = std::sqrt(n * p * (1 - p));
  return std::fabs(count - n * p) <= 3 * sd + 1e-9;
}
