#include <random>

#include <json.hpp>

#include "degradekit/error.hpp"
#include "degradekit/lattice.hpp"

namespace degradekit::lattice {

std::size_t LatticeBasis::entry_bits() const {
  std::size_t m = 0;
  for (const auto& r : rows)
    for (const auto& x : r) m = std::max(m, bit_length(abs(x)));
  return m;
}

void LatticeBasis::check_shape() const {
  require(!rows.empty(), ErrorKind::Validation, "empty lattice basis");
  for (const auto& r : rows)
    require(r.size() == rows.front().size() && !r.empty(), ErrorKind::Validation,
            "lattice basis rows must share a nonzero length");
  require(rows.size() <= rows.front().size(), ErrorKind::Rank,
          "more basis vectors than ambient dimension");
}

Integer dot(const Vector& a, const Vector& b) {
  Integer s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mpz_addmul(s.get_mpz_t(), a[i].get_mpz_t(), b[i].get_mpz_t());
  return s;
}

Integer norm2(const Vector& v) { return dot(v, v); }

Matrix gram(const LatticeBasis& b) {
  const std::size_t n = b.dimension();
  Matrix g(n, Vector(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) g[i][j] = g[j][i] = dot(b.rows[i], b.rows[j]);
  return g;
}

Vector combine(const Vector& coeffs, const LatticeBasis& b) {
  require(coeffs.size() == b.dimension(), ErrorKind::Length, "coefficient count != basis dimension");
  Vector out(b.ambient(), 0);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0) continue;
    for (std::size_t j = 0; j < out.size(); ++j)
      mpz_addmul(out[j].get_mpz_t(), coeffs[i].get_mpz_t(), b.rows[i][j].get_mpz_t());
  }
  return out;
}

LatticeBasis identity(std::size_t n) {
  LatticeBasis b;
  b.rows.assign(n, Vector(n, 0));
  for (std::size_t i = 0; i < n; ++i) b.rows[i][i] = 1;
  return b;
}

namespace {
Integer bareiss_det(Matrix m) {
  const std::size_t n = m.size();
  if (n == 0) return 1;
  int sign = 1;
  Integer prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m[k][k] == 0) {
      std::size_t r = k + 1;
      while (r < n && m[r][k] == 0) ++r;
      if (r == n) return 0;
      std::swap(m[k], m[r]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        m[i][j] = m[i][j] * m[k][k] - m[i][k] * m[k][j];
        mpz_divexact(m[i][j].get_mpz_t(), m[i][j].get_mpz_t(), prev.get_mpz_t());
      }
    }
    prev = m[k][k];
  }
  return sign * m[n - 1][n - 1];
}
}  // namespace

Integer gram_determinant(const LatticeBasis& b) {
  b.check_shape();
  return bareiss_det(gram(b));
}

LatticeBasis random_basis(std::size_t n, std::size_t bits, std::uint64_t seed) {
  require(n > 0 && bits >= 2, ErrorKind::Validation, "random basis needs n > 0 and bits >= 2");
  Rng rng(seed);
  Integer half = 1;
  half <<= static_cast<mp_bitcnt_t>(bits - 1);
  for (;;) {
    LatticeBasis b;
    b.rows.assign(n, Vector(n));
    for (auto& r : b.rows)
      for (auto& x : r) x = rng.below(2 * half) - half;
    if (gram_determinant(b) != 0) return b;
  }
}

bool same_lattice(const LatticeBasis& from, const LatticeBasis& to) {
  from.check_shape();
  to.check_shape();
  const std::size_t n = from.dimension();
  if (to.dimension() != n || from.ambient() != n || to.ambient() != n) return false;
  // Solve U * from = to over Q: augment from^T | to^T and eliminate.
  std::vector<std::vector<mpq_class>> a(n, std::vector<mpq_class>(2 * n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      a[j][i] = mpq_class(from.rows[i][j]);
      a[j][n + i] = mpq_class(to.rows[i][j]);
    }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && a[piv][c] == 0) ++piv;
    if (piv == n) return false;
    std::swap(a[c], a[piv]);
    const mpq_class inv = 1 / a[c][c];
    for (auto& x : a[c]) x *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0) continue;
      const mpq_class f = a[r][c];
      for (std::size_t k = 0; k < 2 * n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  // a[j][n+i] = U[i][j]
  Matrix u(n, Vector(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const mpq_class& q = a[j][n + i];
      if (q.get_den() != 1) return false;
      u[i][j] = q.get_num();
    }
  const Integer det = bareiss_det(u);
  return det == 1 || det == -1;
}

std::string basis_json(const LatticeBasis& b) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : b.rows) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& x : r) row.push_back(x.get_str(10));
    rows.push_back(std::move(row));
  }
  return nlohmann::json{{"rows", rows}}.dump();
}

LatticeBasis parse_basis_json(const std::string& text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  require(!j.is_discarded() && j.contains("rows"), ErrorKind::Format, "basis JSON needs 'rows'");
  LatticeBasis b;
  for (const auto& r : j["rows"]) {
    Vector row;
    for (const auto& x : r) row.push_back(from_decimal(x.get<std::string>()));
    b.rows.push_back(std::move(row));
  }
  b.check_shape();
  return b;
}

}  // namespace degradekit::lattice
