#include <cmath>
#include <limits>

#include "degradekit/error.hpp"
#include "degradekit/leakage.hpp"

namespace degradekit::leakage {

namespace {
double mean(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_var(std::span<const double> x, double m) {
  double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}
}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::Length, "pearson needs sequences of equal length");
  require(a.size() >= 2, ErrorKind::Validation, "pearson needs at least two samples");
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  require(saa > 0 && sbb > 0, ErrorKind::Degeneracy, "pearson is undefined for zero variance");
  return sab / std::sqrt(saa * sbb);
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  require(a.size() >= 2 && b.size() >= 2, ErrorKind::Validation,
          "welch_t needs at least two samples per set");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double qa = sample_var(a, ma) / na, qb = sample_var(b, mb) / nb;
  const double se2 = qa + qb;
  WelchResult r;
  if (se2 == 0) {
    r.t = ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
    r.dof = na + nb - 2;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.dof = se2 * se2 / (qa * qa / (na - 1) + qb * qb / (nb - 1));
  return r;
}

}  // namespace degradekit::leakage
