#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "degradekit/trace.hpp"

namespace degradekit::leakage {

struct NicvCurve {
  std::vector<double> values;
  std::vector<bool> degenerate;  // zero total variance; value forced to 0
  std::map<int, std::size_t> class_sizes;

  std::size_t n_points() const { return values.size(); }
};

// Var[E[Y|X]] / Var[Y] per point, population variances weighted by class size.
NicvCurve nicv(const trace::AlignedClasses& classes);
NicvCurve nicv(const trace::TraceSet& set, trace::AlignPolicy policy = trace::AlignPolicy::TruncateToMin);
// (E[Y|0] - E[Y|1])^2 / (4 Var[Y]); classes {0,1} of equal size only.
NicvCurve nicv_two_class(const trace::AlignedClasses& classes);
NicvCurve nicv_two_class(const trace::TraceSet& set,
                         trace::AlignPolicy policy = trace::AlignPolicy::TruncateToMin);

std::vector<double> max_correlation(std::span<const double> nicv_values);
std::vector<double> max_correlation(const NicvCurve& curve);

// Points strictly above threshold, threshold in (0, 1]. Degenerate points never count.
std::size_t count_pois(std::span<const double> values, double threshold);
std::size_t count_pois(const NicvCurve& curve, double threshold);

enum class PoiMetric { Nicv, MaxCorr };
PoiMetric parse_metric(const std::string& name);
const char* to_string(PoiMetric m);

struct PoiReport {
  double threshold = 0;
  DegradeStrategy strategy = DegradeStrategy::NoDegrade;
  std::size_t count = 0;
  std::map<std::string, double> ratios;  // vs each reference strategy with a nonzero count
};

inline constexpr double kPoiThresholds[] = {0.1, 0.2, 0.3, 0.4, 0.5};

// One report per (threshold, strategy). Strategies are compared against every
// strategy that precedes them in enum order.
std::vector<PoiReport> poi_table(const std::map<DegradeStrategy, NicvCurve>& curves,
                                 std::span<const double> thresholds, PoiMetric metric = PoiMetric::Nicv);
std::string poi_json(const std::vector<PoiReport>& reports);
std::string nicv_csv(const NicvCurve& curve);

double pearson(std::span<const double> a, std::span<const double> b);

struct WelchResult {
  double t = 0;
  double dof = 0;
};
WelchResult welch_t(std::span<const double> a, std::span<const double> b);

struct StretchPattern {
  std::vector<trace::Latency> class0;
  std::vector<trace::Latency> class1;
  std::size_t traces_per_class = 50;
  DegradeStrategy strategy = DegradeStrategy::NoDegrade;
  std::uint32_t wait_r = 256;
};

// Every base sample repeated stretch_factor times, plus rounded Gaussian noise
// (stddev `noise`, clamped to >= 1 cycle). Labels 0/1.
trace::TraceSet simulate_stretched_traces(const StretchPattern& base, std::uint32_t stretch_factor,
                                          double noise, std::uint64_t seed);

// Hit/miss base pattern of `length` samples where the classes differ at `leaky` points.
StretchPattern hit_pattern(std::size_t length, std::size_t leaky, std::uint32_t hit = 60,
                           std::uint32_t miss = 280, std::uint64_t seed = 1);

}  // namespace degradekit::leakage
