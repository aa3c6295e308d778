#include <sstream>

#include "degradekit/lattice.hpp"

namespace degradekit::lattice {

Verification verify_lll(const LatticeBasis& b, double delta) {
  b.check_shape();
  const std::size_t n = b.dimension();
  const Matrix g = gram(b);
  std::vector<std::vector<mpq_class>> mu(n, std::vector<mpq_class>(n));
  std::vector<mpq_class> r(n);
  Verification v;
  v.independent = true;
  for (std::size_t i = 0; i < n; ++i) {
    // b*_i = b_i - sum_j mu_ij b*_j, with <b_i, b*_j> tracked through the Gram matrix.
    std::vector<mpq_class> ip(i + 1);
    for (std::size_t j = 0; j <= i; ++j) {
      mpq_class s(g[i][j]);
      for (std::size_t l = 0; l < j; ++l) s -= mu[j][l] * ip[l];
      ip[j] = s;
      if (j < i) mu[i][j] = s / r[j];
    }
    r[i] = ip[i];
    if (r[i] <= 0) {
      v.independent = false;
      v.detail = "row " + std::to_string(i) + " is dependent on earlier rows";
      return v;
    }
  }
  const mpq_class half(1, 2), dq(delta);
  v.size_reduced = true;
  for (std::size_t i = 0; i < n && v.size_reduced; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (abs(mu[i][j]) > half) {
        v.size_reduced = false;
        v.detail = "mu[" + std::to_string(i) + "][" + std::to_string(j) + "] exceeds 1/2";
        break;
      }
  v.lovasz = true;
  for (std::size_t k = 1; k < n; ++k)
    if (dq * r[k - 1] > r[k] + mu[k][k - 1] * mu[k][k - 1] * r[k - 1]) {
      v.lovasz = false;
      if (v.detail.empty()) v.detail = "Lovasz condition fails at row " + std::to_string(k);
      break;
    }
  return v;
}

}  // namespace degradekit::lattice
