#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "degradekit/bigint.hpp"

namespace degradekit::lattice {

using Vector = std::vector<Integer>;
using Matrix = std::vector<Vector>;

// Rows are basis vectors.
struct LatticeBasis {
  Matrix rows;

  std::size_t dimension() const { return rows.size(); }
  std::size_t ambient() const { return rows.empty() ? 0 : rows.front().size(); }
  std::size_t entry_bits() const;
  void check_shape() const;
  friend bool operator==(const LatticeBasis&, const LatticeBasis&) = default;
};

Integer dot(const Vector& a, const Vector& b);
Integer norm2(const Vector& v);
Matrix gram(const LatticeBasis& b);
// Row vector times basis.
Vector combine(const Vector& coeffs, const LatticeBasis& b);
LatticeBasis identity(std::size_t n);
// Entries uniform in [-2^(bits-1), 2^(bits-1)), regenerated until independent.
LatticeBasis random_basis(std::size_t n, std::size_t bits, std::uint64_t seed);

// Exact determinant of the Gram matrix (fraction-free elimination).
Integer gram_determinant(const LatticeBasis& b);

enum class ReductionAlgorithm { LLL, BKZ };

struct ReductionParams {
  ReductionAlgorithm algorithm = ReductionAlgorithm::LLL;
  double delta = 0.99;
  std::uint32_t beta = 20;
  std::uint32_t max_tours = 8;
  std::uint32_t enum_limit = 25;
  // Finish with an exact integral LLL pass. Costly at 1024-bit scale.
  bool certify = true;

  void validate() const;
  std::string describe() const;
};

struct ReductionStats {
  std::uint64_t swaps = 0;
  std::uint64_t exact_swaps = 0;
  std::uint32_t tours = 0;
  std::uint32_t insertions = 0;
  std::vector<std::string> warnings;
};

LatticeBasis lll_reduce(LatticeBasis b, double delta = 0.99, bool certify = true,
                        ReductionStats* stats = nullptr);
LatticeBasis bkz_reduce(LatticeBasis b, const ReductionParams& params, ReductionStats* stats = nullptr);
LatticeBasis reduce(LatticeBasis b, const ReductionParams& params, ReductionStats* stats = nullptr);

// Exact integral LLL (fraction-free Gram-Schmidt) with delta taken as the exact
// rational value of the double. Also used on its own for small inputs.
LatticeBasis exact_lll(LatticeBasis b, double delta, ReductionStats* stats = nullptr);

struct Verification {
  bool size_reduced = false;
  bool lovasz = false;
  bool independent = false;
  std::string detail;
  bool ok() const { return size_reduced && lovasz && independent; }
};

// Rational Gram-Schmidt check of |mu_ij| <= 1/2 and the Lovasz condition.
Verification verify_lll(const LatticeBasis& b, double delta);

// Square full-rank bases: true iff to * from^-1 is integral with determinant +-1.
bool same_lattice(const LatticeBasis& from, const LatticeBasis& to);

std::string basis_json(const LatticeBasis& b);
LatticeBasis parse_basis_json(const std::string& text);

}  // namespace degradekit::lattice
