#include <cmath>
#include <cstdlib>
#include <limits>

#include "degradekit/error.hpp"
#include "degradekit/lattice.hpp"
#include "lattice/fp_lll.hpp"

namespace degradekit::lattice {

namespace {

// Exhaustive Schnorr-Euchner enumeration of the projected block [k, k+m).
// Values are normalized by r_kk. Returns the coefficient vector of the
// shortest nonzero projection strictly below `bound`, or empty.
class Enumerator {
 public:
  Enumerator(const detail::FpLll& fp, std::size_t k, std::size_t m) : m_(m) {
    mu_.assign(m, std::vector<double>(m, 0.0));
    r_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      r_[i] = fp.r_ratio(k + i, k);
      for (std::size_t j = 0; j < i; ++j) mu_[i][j] = fp.mu(k + i, k + j);
    }
    x_.assign(m, 0);
  }

  std::vector<long> shortest(double bound) {
    best_ = bound;
    found_.clear();
    descend(m_ - 1, 0.0, true);
    return found_;
  }
  double best() const { return best_; }

 private:
  void descend(std::size_t i, double partial, bool higher_zero) {
    double c = 0;
    for (std::size_t j = i + 1; j < m_; ++j) c -= static_cast<double>(x_[j]) * mu_[j][i];
    const long x0 = std::lround(c);
    // Zig-zag around the center; with all higher coordinates zero only
    // nonnegative values are needed (sign symmetry).
    auto visit = [&](long x) {
      const double d = partial + (x - c) * (x - c) * r_[i];
      if (d >= best_) return false;
      x_[i] = x;
      if (i == 0) {
        if (!(higher_zero && x == 0)) {
          best_ = d;
          found_ = x_;
        }
      } else {
        descend(i - 1, d, higher_zero && x == 0);
      }
      return true;
    };
    if (higher_zero) {
      for (long x = 0;; ++x)
        if (!visit(x) && x >= x0) break;
    } else {
      bool up = true, down = true;
      for (long step = 0; up || down; ++step) {
        if (up && !visit(x0 + step) && x0 + step >= c) up = false;
        if (step > 0 && down && !visit(x0 - step) && x0 - step <= c) down = false;
      }
    }
    x_[i] = 0;
  }

  std::size_t m_;
  std::vector<std::vector<double>> mu_;
  std::vector<double> r_;
  std::vector<long> x_;
  std::vector<long> found_;
  double best_ = 0;
};

// Replace rows [k, k+m) by a unimodular transform whose first row is sum x_i b_{k+i}.
void insert_vector(Matrix& rows, std::size_t k, std::vector<long> x) {
  const std::size_t m = x.size();
  auto add_scaled = [&](std::size_t dst, std::size_t src, long q) {
    const Integer qq(q);
    for (std::size_t c = 0; c < rows[dst].size(); ++c)
      mpz_addmul(rows[k + dst][c].get_mpz_t(), qq.get_mpz_t(), rows[k + src][c].get_mpz_t());
  };
  // Euclid on the coefficients: x_i b_i + x_j b_j = (x_i - q x_j) b_i + x_j (b_j + q b_i).
  for (;;) {
    std::size_t big = m, small = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (x[i] == 0) continue;
      if (big == m || std::labs(x[i]) > std::labs(x[big])) big = i;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (x[i] == 0 || i == big) continue;
      if (small == m || std::labs(x[i]) < std::labs(x[small])) small = i;
    }
    if (small == m) break;
    const long q = x[big] / x[small];
    x[big] -= q * x[small];
    add_scaled(small, big, q);
  }
  std::size_t pos = 0;
  while (x[pos] == 0) ++pos;
  if (x[pos] < 0)
    for (auto& e : rows[k + pos]) e = -e;
  // Move the new vector to the front of the block.
  for (std::size_t i = pos; i > 0; --i) std::swap(rows[k + i], rows[k + i - 1]);
}

}  // namespace

LatticeBasis bkz_reduce(LatticeBasis b, const ReductionParams& params, ReductionStats* stats) {
  b.check_shape();
  ReductionParams p = params;
  p.algorithm = ReductionAlgorithm::BKZ;
  p.validate();
  const std::size_t n = b.dimension();
  if (p.beta > n) {
    if (stats)
      stats->warnings.push_back("BKZ block size " + std::to_string(p.beta) + " exceeds dimension " +
                                std::to_string(n) + "; clamped");
    p.beta = static_cast<std::uint32_t>(n);
  }
  require(p.beta <= p.enum_limit, ErrorKind::Capability,
          "BKZ block size " + std::to_string(p.beta) + " exceeds the enumeration limit " +
              std::to_string(p.enum_limit) + "; use LLL or a smaller block size");

  b = lll_reduce(std::move(b), p.delta, false, stats);
  if (n < 2) return b;
  detail::FpLll fp(b.rows, p.delta, 0.51, stats);
  fp.run();
  std::uint32_t tours = 0;
  for (; tours < p.max_tours; ++tours) {
    bool changed = false;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const std::size_t m = std::min<std::size_t>(p.beta, n - k);
      Enumerator e(fp, k, m);
      auto x = e.shortest(p.delta * (1 - 1e-12));
      if (x.empty()) continue;
      bool trivial = std::labs(x[0]) == 1;
      for (std::size_t i = 1; i < x.size() && trivial; ++i) trivial = x[i] == 0;
      if (trivial) continue;
      insert_vector(b.rows, k, std::move(x));
      fp.reload();
      fp.run(k);
      changed = true;
      if (stats) ++stats->insertions;
    }
    if (!changed) {
      ++tours;
      break;
    }
  }
  if (stats) stats->tours += tours;
  if (p.certify) b = exact_lll(std::move(b), p.delta, stats);
  return b;
}

}  // namespace degradekit::lattice
