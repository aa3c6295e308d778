#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "degradekit/bigint.hpp"
#include "degradekit/lattice.hpp"

namespace degradekit::hnp {

// r = x mod p with -p/2 < r <= p/2.
Integer signed_mod(const Integer& x, const Integer& p);

// ceil(c * modulus_bits / ell)
std::size_t dimension_heuristic(double c, std::size_t modulus_bits, std::size_t ell);

struct HnpInstance {
  Integer p;
  std::size_t ell = 8;
  std::vector<Integer> samples;  // t_i

  Integer u() const;  // floor(p / 2^(ell+1))
  std::size_t d() const { return samples.size(); }
  void validate() const;
};

// W = 2^(ell+1)
Integer default_weight(const HnpInstance& inst);
// floor(p / 2^(ell+1)) * 2W
Integer default_embedding(const HnpInstance& inst, const Integer& W);

struct HnpLattice {
  lattice::LatticeBasis B;
  lattice::Vector u_vec;
};

HnpLattice build_basis(const HnpInstance& inst, const Integer& W);
lattice::LatticeBasis embed_cvp(const lattice::LatticeBasis& B, const lattice::Vector& u_vec,
                                const Integer& M);

// Coefficients x = (lambda_1..lambda_d, alpha) placing x*B - u_vec next to the
// target for a known alpha, with lambda_i = -floor(alpha t_i / p).
lattice::Vector relation_coefficients(const HnpInstance& inst, const Integer& alpha);

struct Validation {
  bool ok = false;
  std::size_t satisfied = 0;
};
// satisfied = #{i : 0 < alpha t_i mod p < p / 2^ell}
Validation validate_candidate(const Integer& alpha, const HnpInstance& inst);

struct CandidateKey {
  Integer alpha;
  lattice::Vector source;
  std::size_t satisfied = 0;
};

// Rows ending in +-M: alpha = -tail_sign * row[d] mod p. Sorted by satisfied,
// descending; duplicates dropped.
std::vector<CandidateKey> extract_candidates(const lattice::LatticeBasis& reduced,
                                             const HnpInstance& inst, const Integer& M);

struct SolveParams {
  lattice::ReductionParams reduction;
  std::optional<Integer> W;
  std::optional<Integer> M;
};

struct SolveResult {
  std::optional<Integer> alpha;  // set when a candidate satisfies every constraint
  std::size_t satisfied = 0;
  std::vector<CandidateKey> candidates;
  lattice::ReductionStats stats;
  std::string reduction;
  double wall_time = 0;  // seconds
};

SolveResult solve(const HnpInstance& inst, const SolveParams& params = {});

// Noiseless instance: each t_i = v_i / alpha mod p with v_i uniform in [1, p/2^ell).
HnpInstance synthetic_instance(const Integer& p, std::size_t ell, std::size_t d, const Integer& alpha,
                               Rng& rng);

std::string instance_json(const HnpInstance& inst);
HnpInstance parse_instance(const std::string& text);
HnpInstance load_instance(const std::string& path);
std::string result_json(const SolveResult& r);

}  // namespace degradekit::hnp
