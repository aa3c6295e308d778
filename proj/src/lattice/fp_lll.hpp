#pragma once

#include <gmpxx.h>

#include "degradekit/lattice.hpp"

namespace degradekit::lattice::detail {

// Floating Gram-Schmidt LLL over an exact integer basis. The Gram matrix is
// kept exact; mu and r are recomputed row by row from it at `prec` bits.
class FpLll {
 public:
  FpLll(Matrix& rows, double delta, double eta, ReductionStats* stats);

  // Reduces rows from index `start` on; raises precision and retries if lazy
  // size reduction stalls.
  void run(std::size_t start = 0);
  // Recompute the exact Gram matrix after the rows were edited externally.
  void reload();

  // Valid for every row after run().
  double mu(std::size_t i, std::size_t j) const { return mu_[i][j].get_d(); }
  // r_ii / r_ref as a double, safe for entries too large for double.
  double r_ratio(std::size_t i, std::size_t ref) const;
  std::size_t size() const { return rows_.size(); }

 private:
  void resize_prec(unsigned long prec);
  void compute_row(std::size_t k);
  bool reduce_row(std::size_t k);
  void sub_row(std::size_t k, std::size_t j, const Integer& x);
  void swap_rows(std::size_t k);
  void pass(std::size_t start);

  Matrix& rows_;
  Matrix g_;
  mpf_class delta_, eta_;
  unsigned long prec_ = 0;
  std::vector<std::vector<mpf_class>> mu_, r_;
  ReductionStats* stats_;
};

struct PrecisionStall {};

}  // namespace degradekit::lattice::detail
