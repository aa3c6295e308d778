#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "degradekit/error.hpp"
#include "degradekit/hnp.hpp"

namespace degradekit::hnp {

using lattice::LatticeBasis;
using lattice::Vector;

Integer signed_mod(const Integer& x, const Integer& p) {
  require(p > 0, ErrorKind::Validation, "signed_mod needs p > 0");
  Integer r = mod_floor(x, p);
  if (2 * r > p) r -= p;
  return r;
}

std::size_t dimension_heuristic(double c, std::size_t modulus_bits, std::size_t ell) {
  require(c > 0 && modulus_bits > 0 && ell > 0, ErrorKind::Validation,
          "dimension heuristic needs positive arguments");
  const double x = c * static_cast<double>(modulus_bits) / static_cast<double>(ell);
  // Guard against representation error on exact integers such as 1.0 * 1024 / 8.
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

Integer HnpInstance::u() const {
  Integer out;
  mpz_fdiv_q_2exp(out.get_mpz_t(), p.get_mpz_t(), static_cast<mp_bitcnt_t>(ell + 1));
  return out;
}

void HnpInstance::validate() const {
  require(p > 2, ErrorKind::Validation, "HNP modulus must exceed 2");
  require(ell >= 1 && ell < bit_length(p), ErrorKind::Validation, "ell must lie in [1, bits(p))");
  require(!samples.empty(), ErrorKind::Validation, "HNP instance has no samples");
  for (const auto& t : samples)
    require(t > 0 && t < p, ErrorKind::Validation, "every t_i must lie in (0, p)");
}

Integer default_weight(const HnpInstance& inst) {
  Integer w = 1;
  w <<= static_cast<mp_bitcnt_t>(inst.ell + 1);
  return w;
}

Integer default_embedding(const HnpInstance& inst, const Integer& W) { return inst.u() * 2 * W; }

HnpLattice build_basis(const HnpInstance& inst, const Integer& W) {
  inst.validate();
  require(W >= 1, ErrorKind::Validation, "weight W must be >= 1");
  const std::size_t d = inst.d();
  HnpLattice out;
  out.B.rows.assign(d + 1, Vector(d + 1, 0));
  const Integer two_w = 2 * W;
  for (std::size_t i = 0; i < d; ++i) {
    out.B.rows[i][i] = two_w * inst.p;
    out.B.rows[d][i] = two_w * inst.samples[i];
  }
  out.B.rows[d][d] = 1;
  out.u_vec.assign(d + 1, two_w * inst.u());
  out.u_vec[d] = 0;
  return out;
}

LatticeBasis embed_cvp(const LatticeBasis& B, const Vector& u_vec, const Integer& M) {
  require(M >= 1, ErrorKind::Validation, "embedding factor M must be >= 1");
  B.check_shape();
  require(u_vec.size() == B.ambient(), ErrorKind::Length, "target length != basis width");
  LatticeBasis out;
  for (const auto& r : B.rows) {
    Vector row = r;
    row.push_back(0);
    out.rows.push_back(std::move(row));
  }
  Vector last = u_vec;
  last.push_back(M);
  out.rows.push_back(std::move(last));
  return out;
}

Vector relation_coefficients(const HnpInstance& inst, const Integer& alpha) {
  Vector x;
  for (const auto& t : inst.samples) {
    Integer q;
    Integer at = alpha * t;
    mpz_fdiv_q(q.get_mpz_t(), at.get_mpz_t(), inst.p.get_mpz_t());
    x.push_back(-q);
  }
  x.push_back(alpha);
  return x;
}

Validation validate_candidate(const Integer& alpha, const HnpInstance& inst) {
  Validation v;
  // x < p/2^ell  <=>  x * 2^ell < p
  for (const auto& t : inst.samples) {
    Integer r = mod_floor(alpha * t, inst.p);
    Integer scaled = r;
    scaled <<= static_cast<mp_bitcnt_t>(inst.ell);
    if (r > 0 && scaled < inst.p) ++v.satisfied;
  }
  v.ok = v.satisfied == inst.d();
  return v;
}

std::vector<CandidateKey> extract_candidates(const LatticeBasis& reduced, const HnpInstance& inst,
                                             const Integer& M) {
  const std::size_t d = inst.d();
  std::vector<CandidateKey> out;
  std::set<Integer> seen;
  for (const auto& row : reduced.rows) {
    if (row.size() != d + 2) continue;
    const Integer& tail = row[d + 1];
    if (tail != M && tail != -M) continue;
    Integer alpha = tail == -M ? row[d] : Integer(-row[d]);
    alpha = mod_floor(alpha, inst.p);
    if (alpha == 0 || !seen.insert(alpha).second) continue;
    out.push_back({alpha, row, validate_candidate(alpha, inst).satisfied});
  }
  std::stable_sort(out.begin(), out.end(), [](const CandidateKey& a, const CandidateKey& b) {
    return a.satisfied > b.satisfied;
  });
  return out;
}

SolveResult solve(const HnpInstance& inst, const SolveParams& params) {
  inst.validate();
  const auto start = std::chrono::steady_clock::now();
  const Integer W = params.W.value_or(default_weight(inst));
  const Integer M = params.M.value_or(default_embedding(inst, W));
  auto lat = build_basis(inst, W);
  auto embedded = embed_cvp(lat.B, lat.u_vec, M);
  SolveResult res;
  res.reduction = params.reduction.describe();
  auto reduced = lattice::reduce(std::move(embedded), params.reduction, &res.stats);
  res.candidates = extract_candidates(reduced, inst, M);
  if (!res.candidates.empty()) {
    res.satisfied = res.candidates.front().satisfied;
    if (res.satisfied == inst.d()) res.alpha = res.candidates.front().alpha;
  }
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

HnpInstance synthetic_instance(const Integer& p, std::size_t ell, std::size_t d, const Integer& alpha,
                               Rng& rng) {
  HnpInstance inst;
  inst.p = p;
  inst.ell = ell;
  require(alpha > 0 && alpha < p, ErrorKind::Validation, "alpha must lie in (0, p)");
  const Integer inv = invert(alpha, p);
  // v in [1, ceil(p / 2^ell)) so that v * 2^ell < p
  Integer bound = p - 1;
  mpz_fdiv_q_2exp(bound.get_mpz_t(), bound.get_mpz_t(), static_cast<mp_bitcnt_t>(ell));
  bound += 1;
  require(bound > 1, ErrorKind::Validation, "modulus too small for this ell");
  for (std::size_t i = 0; i < d; ++i) {
    const Integer v = rng.between(1, bound);
    inst.samples.push_back(mod_floor(v * inv, p));
  }
  inst.validate();
  return inst;
}

std::string instance_json(const HnpInstance& inst) {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& s : inst.samples) t.push_back(to_hex(s));
  return nlohmann::json{{"p", to_hex(inst.p)}, {"ell", inst.ell}, {"t_i", t}}.dump(2);
}

HnpInstance parse_instance(const std::string& text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  require(!j.is_discarded() && j.is_object(), ErrorKind::Format, "instance file is not a JSON object");
  HnpInstance inst;
  try {
    inst.p = from_hex(j.at("p").get<std::string>());
    inst.ell = j.at("ell").get<std::size_t>();
    for (const auto& t : j.at("t_i")) inst.samples.push_back(from_hex(t.get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed instance file: ") + e.what());
  }
  inst.validate();
  return inst;
}

HnpInstance load_instance(const std::string& path) {
  std::ifstream f(path);
  require(f.is_open(), ErrorKind::Io, "cannot open instance file '" + path + "'");
  return parse_instance(std::string(std::istreambuf_iterator<char>(f), {}));
}

std::string result_json(const SolveResult& r) {
  nlohmann::json j;
  j["alpha"] = r.alpha ? nlohmann::json(to_hex(*r.alpha)) : nlohmann::json(nullptr);
  j["satisfied"] = r.satisfied;
  j["reduction_params"] = r.reduction;
  j["wall_time"] = r.wall_time;
  j["candidates"] = r.candidates.size();
  return j.dump(2);
}

}  // namespace degradekit::hnp
