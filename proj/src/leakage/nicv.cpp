#include <cmath>
#include <sstream>

#include <json.hpp>

#include "degradekit/error.hpp"
#include "degradekit/leakage.hpp"

namespace degradekit::leakage {

namespace {

void check_classes(const trace::AlignedClasses& c) {
  require(c.classes.size() >= 2, ErrorKind::Validation, "NICV needs at least two classes");
  for (const auto& [label, rows] : c.classes)
    require(rows.size() >= 2, ErrorKind::Validation,
            "class " + std::to_string(label) + " needs at least two traces");
  require(c.length > 0, ErrorKind::Validation, "NICV needs nonempty traces");
}

struct PointMoments {
  std::vector<double> class_means;
  std::vector<double> weights;
  double mean = 0;
  double var = 0;
};

PointMoments moments(const trace::AlignedClasses& c, std::size_t j) {
  PointMoments m;
  double n_total = 0, sum = 0;
  for (const auto& [label, rows] : c.classes) {
    double s = 0;
    for (const auto& r : rows) s += r[j];
    m.class_means.push_back(s / static_cast<double>(rows.size()));
    m.weights.push_back(static_cast<double>(rows.size()));
    n_total += static_cast<double>(rows.size());
    sum += s;
  }
  for (double& w : m.weights) w /= n_total;
  m.mean = sum / n_total;
  double ss = 0;
  for (const auto& [label, rows] : c.classes)
    for (const auto& r : rows) ss += (r[j] - m.mean) * (r[j] - m.mean);
  m.var = ss / n_total;
  return m;
}

NicvCurve empty_curve(const trace::AlignedClasses& c) {
  NicvCurve out;
  out.values.assign(c.length, 0.0);
  out.degenerate.assign(c.length, false);
  for (const auto& [label, rows] : c.classes) out.class_sizes[label] = rows.size();
  return out;
}

}  // namespace

NicvCurve nicv(const trace::AlignedClasses& c) {
  check_classes(c);
  NicvCurve out = empty_curve(c);
  for (std::size_t j = 0; j < c.length; ++j) {
    const auto m = moments(c, j);
    if (m.var == 0) {
      out.degenerate[j] = true;
      continue;
    }
    double between = 0;
    for (std::size_t k = 0; k < m.class_means.size(); ++k)
      between += m.weights[k] * (m.class_means[k] - m.mean) * (m.class_means[k] - m.mean);
    out.values[j] = between / m.var;
  }
  return out;
}

NicvCurve nicv(const trace::TraceSet& set, trace::AlignPolicy policy) {
  return nicv(trace::align_classes(set, policy));
}

NicvCurve nicv_two_class(const trace::AlignedClasses& c) {
  check_classes(c);
  require(c.classes.size() == 2 && c.classes.count(0) && c.classes.count(1), ErrorKind::Validation,
          "two-class NICV needs exactly the classes 0 and 1");
  require(c.classes.at(0).size() == c.classes.at(1).size(), ErrorKind::Validation,
          "two-class NICV needs equal class sizes; use the general nicv for unbalanced sets");
  NicvCurve out = empty_curve(c);
  for (std::size_t j = 0; j < c.length; ++j) {
    const auto m = moments(c, j);
    if (m.var == 0) {
      out.degenerate[j] = true;
      continue;
    }
    const double d = m.class_means[0] - m.class_means[1];
    out.values[j] = d * d / (4.0 * m.var);
  }
  return out;
}

NicvCurve nicv_two_class(const trace::TraceSet& set, trace::AlignPolicy policy) {
  return nicv_two_class(trace::align_classes(set, policy));
}

std::vector<double> max_correlation(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::sqrt(v[i]);
  return out;
}

std::vector<double> max_correlation(const NicvCurve& curve) { return max_correlation(curve.values); }

namespace {
void check_threshold(double t) {
  require(t > 0 && t <= 1, ErrorKind::Validation, "POI threshold must lie in (0, 1]");
}
}  // namespace

std::size_t count_pois(std::span<const double> values, double threshold) {
  check_threshold(threshold);
  std::size_t n = 0;
  for (double v : values) n += v > threshold;
  return n;
}

std::size_t count_pois(const NicvCurve& curve, double threshold) {
  check_threshold(threshold);
  std::size_t n = 0;
  for (std::size_t i = 0; i < curve.values.size(); ++i)
    n += !curve.degenerate[i] && curve.values[i] > threshold;
  return n;
}

PoiMetric parse_metric(const std::string& name) {
  if (name == "nicv") return PoiMetric::Nicv;
  if (name == "maxcorr") return PoiMetric::MaxCorr;
  fail(ErrorKind::Validation, "unknown POI metric '" + name + "' (expected nicv|maxcorr)");
}

const char* to_string(PoiMetric m) { return m == PoiMetric::Nicv ? "nicv" : "maxcorr"; }

std::vector<PoiReport> poi_table(const std::map<DegradeStrategy, NicvCurve>& curves,
                                 std::span<const double> thresholds, PoiMetric metric) {
  std::map<DegradeStrategy, NicvCurve> scored;
  for (const auto& [s, c] : curves) {
    NicvCurve v = c;
    if (metric == PoiMetric::MaxCorr) v.values = max_correlation(c);
    scored.emplace(s, std::move(v));
  }
  std::vector<PoiReport> out;
  for (double t : thresholds) {
    std::vector<PoiReport> row;
    for (const auto& [s, c] : scored) {
      PoiReport r{t, s, count_pois(c, t), {}};
      for (const auto& prev : row)
        if (prev.count > 0)
          r.ratios[to_string(prev.strategy)] = static_cast<double>(r.count) / static_cast<double>(prev.count);
      row.push_back(std::move(r));
    }
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

std::string poi_json(const std::vector<PoiReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports)
    arr.push_back({{"threshold", r.threshold},
                   {"strategy", degradekit::to_string(r.strategy)},
                   {"count", r.count},
                   {"ratios", r.ratios}});
  return arr.dump(2);
}

std::string nicv_csv(const NicvCurve& curve) {
  std::ostringstream os;
  os.precision(17);
  os << "point_index,nicv,max_corr\n";
  for (std::size_t i = 0; i < curve.values.size(); ++i)
    os << i << ',' << curve.values[i] << ',' << std::sqrt(curve.values[i]) << '\n';
  return os.str();
}

}  // namespace degradekit::leakage
