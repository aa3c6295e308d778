#include <cmath>
#include <sstream>

#include "degradekit/error.hpp"
#include "degradekit/lattice.hpp"
#include "lattice/fp_lll.hpp"

namespace degradekit::lattice {

void ReductionParams::validate() const {
  require(delta > 0.25 && delta < 1.0, ErrorKind::Validation, "LLL delta must lie in (0.25, 1)");
  if (algorithm == ReductionAlgorithm::BKZ) {
    require(beta >= 2, ErrorKind::Validation, "BKZ block size must be >= 2");
    require(max_tours >= 1, ErrorKind::Validation, "BKZ needs at least one tour");
  }
}

std::string ReductionParams::describe() const {
  std::ostringstream os;
  if (algorithm == ReductionAlgorithm::LLL)
    os << "LLL(delta=" << delta << ")";
  else
    os << "BKZ(beta=" << beta << ", delta=" << delta << ", max_tours=" << max_tours << ")";
  return os.str();
}

namespace detail {

FpLll::FpLll(Matrix& rows, double delta, double eta, ReductionStats* stats)
    : rows_(rows), stats_(stats) {
  resize_prec(std::max<unsigned long>(128, 2 * rows.size() + 100));
  delta_ = delta;
  eta_ = eta;
  reload();
}

void FpLll::resize_prec(unsigned long prec) {
  prec_ = prec;
  const std::size_t n = rows_.size();
  mu_.assign(n, std::vector<mpf_class>(n, mpf_class(0, prec)));
  r_.assign(n, std::vector<mpf_class>(n, mpf_class(0, prec)));
  delta_.set_prec(prec);
  eta_.set_prec(prec);
}

void FpLll::reload() { g_ = gram(LatticeBasis{rows_}); }

double FpLll::r_ratio(std::size_t i, std::size_t ref) const {
  mpf_class q(r_[i][i] / r_[ref][ref], prec_);
  return q.get_d();
}

void FpLll::compute_row(std::size_t k) {
  mpf_class t(0, prec_);
  for (std::size_t j = 0; j <= k; ++j) {
    mpf_class& rkj = r_[k][j];
    rkj = g_[k][j];
    for (std::size_t i = 0; i < j; ++i) {
      t = mu_[j][i] * r_[k][i];
      rkj -= t;
    }
    if (j < k) mu_[k][j] = rkj / r_[j][j];
  }
}

void FpLll::sub_row(std::size_t k, std::size_t j, const Integer& x) {
  auto& bk = rows_[k];
  const auto& bj = rows_[j];
  for (std::size_t c = 0; c < bk.size(); ++c) mpz_submul(bk[c].get_mpz_t(), x.get_mpz_t(), bj[c].get_mpz_t());
  const std::size_t n = rows_.size();
  // |b_k - x b_j|^2 first, while g_kj is still the old value.
  g_[k][k] += x * x * g_[j][j] - 2 * x * g_[k][j];
  for (std::size_t i = 0; i < n; ++i) {
    if (i == k) continue;
    g_[k][i] -= x * g_[j][i];
    g_[i][k] = g_[k][i];
  }
}

bool FpLll::reduce_row(std::size_t k) {
  for (int iter = 0;; ++iter) {
    if (iter > 64) throw PrecisionStall{};
    compute_row(k);
    bool reduced = true;
    for (std::size_t j = 0; j < k; ++j)
      if (abs(mu_[k][j]) > eta_) reduced = false;
    if (reduced) return true;
    mpf_class half(0.5, prec_), y(0, prec_);
    for (std::size_t jj = k; jj-- > 0;) {
      const mpf_class& m = mu_[k][jj];
      if (abs(m) <= half) continue;
      y = m;
      if (m >= 0)
        y += half;
      else
        y -= half;
      Integer x(trunc(y));
      if (x == 0) continue;
      const mpf_class xf(x, prec_);
      for (std::size_t i = 0; i < jj; ++i) mu_[k][i] -= xf * mu_[jj][i];
      mu_[k][jj] -= xf;
      sub_row(k, jj, x);
    }
    if (g_[k][k] == 0) fail(ErrorKind::Rank, "basis rows are linearly dependent");
  }
}

void FpLll::swap_rows(std::size_t k) {
  std::swap(rows_[k], rows_[k - 1]);
  std::swap(g_[k], g_[k - 1]);
  for (auto& row : g_) std::swap(row[k], row[k - 1]);
  if (stats_) ++stats_->swaps;
}

void FpLll::pass(std::size_t start) {
  const std::size_t n = rows_.size();
  for (std::size_t i = 0; i < std::min(start, n); ++i) compute_row(i);
  if (n == 0) return;
  require(g_[0][0] != 0, ErrorKind::Rank, "basis contains a zero vector");
  compute_row(0);
  std::size_t k = std::max<std::size_t>(start, 1);
  mpf_class lhs(0, prec_), rhs(0, prec_);
  while (k < n) {
    reduce_row(k);
    lhs = delta_ * r_[k - 1][k - 1];
    rhs = mu_[k][k - 1] * mu_[k][k - 1] * r_[k - 1][k - 1];
    rhs += r_[k][k];
    if (lhs > rhs) {
      swap_rows(k);
      k = k - 1;
      if (k == 0) {
        compute_row(0);
        k = 1;
      }
    } else {
      ++k;
    }
  }
}

void FpLll::run(std::size_t start) {
  for (;;) {
    try {
      pass(start);
      return;
    } catch (const PrecisionStall&) {
      resize_prec(prec_ * 2);
      start = 0;
    }
  }
}

}  // namespace detail

LatticeBasis exact_lll(LatticeBasis b, double delta, ReductionStats* stats) {
  b.check_shape();
  require(delta > 0.25 && delta < 1.0, ErrorKind::Validation, "LLL delta must lie in (0.25, 1)");
  const mpq_class dq(delta);
  const Integer& da = dq.get_num();
  const Integer& db = dq.get_den();
  const std::size_t n = b.dimension();
  auto& rows = b.rows;

  // D[i]: Gram determinant of the first i rows; lam[k][j] = mu_kj * D[j+1].
  std::vector<Integer> D(n + 1);
  Matrix lam(n, Vector(n, 0));
  D[0] = 1;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      Integer u = dot(rows[k], rows[j]);
      for (std::size_t i = 0; i < j; ++i) {
        u = D[i + 1] * u - lam[k][i] * lam[j][i];
        mpz_divexact(u.get_mpz_t(), u.get_mpz_t(), D[i].get_mpz_t());
      }
      if (j < k)
        lam[k][j] = u;
      else
        D[k + 1] = u;
    }
    require(D[k + 1] != 0, ErrorKind::Rank, "basis rows are linearly dependent");
  }

  auto red = [&](std::size_t k, std::size_t l) {
    Integer two_abs = 2 * abs(lam[k][l]);
    if (two_abs <= D[l + 1]) return;
    // round half away from zero
    Integer q = (2 * abs(lam[k][l]) + D[l + 1]) / (2 * D[l + 1]);
    if (lam[k][l] < 0) q = -q;
    for (std::size_t c = 0; c < rows[k].size(); ++c)
      mpz_submul(rows[k][c].get_mpz_t(), q.get_mpz_t(), rows[l][c].get_mpz_t());
    lam[k][l] -= q * D[l + 1];
    for (std::size_t i = 0; i < l; ++i) lam[k][i] -= q * lam[l][i];
  };

  auto swap = [&](std::size_t k) {
    std::swap(rows[k], rows[k - 1]);
    for (std::size_t j = 0; j + 1 < k; ++j) std::swap(lam[k][j], lam[k - 1][j]);
    const Integer l = lam[k][k - 1];
    Integer B = D[k - 1] * D[k + 1] + l * l;
    mpz_divexact(B.get_mpz_t(), B.get_mpz_t(), D[k].get_mpz_t());
    for (std::size_t i = k + 1; i < n; ++i) {
      const Integer t = lam[i][k];
      Integer nk = D[k + 1] * lam[i][k - 1] - l * t;
      mpz_divexact(nk.get_mpz_t(), nk.get_mpz_t(), D[k].get_mpz_t());
      lam[i][k] = nk;
      Integer nk1 = B * t + l * lam[i][k];
      mpz_divexact(nk1.get_mpz_t(), nk1.get_mpz_t(), D[k + 1].get_mpz_t());
      lam[i][k - 1] = nk1;
    }
    D[k] = B;
    if (stats) ++stats->exact_swaps;
  };

  std::size_t k = 1;
  while (k < n) {
    red(k, k - 1);
    // swap iff delta * D[k]^2 > D[k+1] D[k-1] + lam^2
    const Integer lhs = da * D[k] * D[k];
    const Integer rhs = db * (D[k + 1] * D[k - 1] + lam[k][k - 1] * lam[k][k - 1]);
    if (lhs > rhs) {
      swap(k);
      k = std::max<std::size_t>(k - 1, 1);
    } else {
      for (std::size_t l = k - 1; l-- > 0;) red(k, l);
      ++k;
    }
  }
  return b;
}

LatticeBasis lll_reduce(LatticeBasis b, double delta, bool certify, ReductionStats* stats) {
  b.check_shape();
  require(delta > 0.25 && delta < 1.0, ErrorKind::Validation, "LLL delta must lie in (0.25, 1)");
  if (b.dimension() == 1) {
    require(norm2(b.rows[0]) != 0, ErrorKind::Rank, "basis contains a zero vector");
    return b;
  }
  // A slightly stronger floating pass leaves the exact pass little to do.
  const double fp_delta = certify ? delta + (1.0 - delta) / 2 : delta;
  detail::FpLll fp(b.rows, fp_delta, 0.51, stats);
  fp.run();
  if (certify) b = exact_lll(std::move(b), delta, stats);
  return b;
}

LatticeBasis reduce(LatticeBasis b, const ReductionParams& params, ReductionStats* stats) {
  params.validate();
  if (params.algorithm == ReductionAlgorithm::LLL)
    return lll_reduce(std::move(b), params.delta, params.certify, stats);
  return bkz_reduce(std::move(b), params, stats);
}

}  // namespace degradekit::lattice
