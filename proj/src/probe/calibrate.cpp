#include <algorithm>
#include <numeric>

#include "degradekit/probe.hpp"

namespace degradekit::probe {

Histogram Histogram::from_samples(std::span<const trace::Latency> samples, std::size_t buckets) {
  require(buckets > 0, ErrorKind::Validation, "histogram needs at least one bucket");
  Histogram h;
  h.counts.assign(buckets, 0);
  for (auto s : samples) ++h.counts[std::min<std::size_t>(s, buckets - 1)];
  return h;
}

std::size_t Histogram::mode() const {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::uint64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

Calibration suggest_threshold(Histogram hits, Histogram misses) {
  if (hits.total() == 0 || misses.total() == 0)
    throw CalibrationAmbiguous("calibration needs samples in both histograms", std::move(hits),
                               std::move(misses));
  const auto h = hits.mode(), m = misses.mode();
  if (h + 1 >= m)
    throw CalibrationAmbiguous("hit mode " + std::to_string(h) + " and miss mode " +
                                   std::to_string(m) + " leave no gap",
                               std::move(hits), std::move(misses));
  Calibration c;
  c.hit_peak = static_cast<std::uint32_t>(h);
  c.miss_peak = static_cast<std::uint32_t>(m);
  c.suggested_t = static_cast<std::uint32_t>((h + m) / 2);
  c.hits = std::move(hits);
  c.misses = std::move(misses);
  return c;
}

Calibration calibrate_threshold(const CacheLineTarget& target, std::size_t samples) {
  require(samples > 0, ErrorKind::Validation, "calibration needs at least one sample");
  require_capabilities(detect_capabilities(), Needs{.flush = true, .tsc = true}, "calibration");
  MappedLine line(target);
  std::vector<trace::Latency> hit(samples), miss(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    (void)*line.line();
    hit[i] = timed_reload(line.line());
    flush_line(line.line());
    miss[i] = timed_reload(line.line());
  }
  return suggest_threshold(Histogram::from_samples(hit), Histogram::from_samples(miss));
}

double separation_rate(const Calibration& c, std::span<const trace::Latency> hits,
                       std::span<const trace::Latency> misses) {
  const std::size_t total = hits.size() + misses.size();
  require(total > 0, ErrorKind::Validation, "no samples to classify");
  std::size_t ok = 0;
  for (auto h : hits) ok += h < c.suggested_t;
  for (auto m : misses) ok += m >= c.suggested_t;
  return static_cast<double>(ok) / static_cast<double>(total);
}

std::vector<RankedTarget> rank_targets(const std::vector<CacheLineTarget>& candidates,
                                       const std::function<double(const CacheLineTarget&)>& measure) {
  std::vector<RankedTarget> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back({c, measure(c)});
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedTarget& a, const RankedTarget& b) { return a.cycles > b.cycles; });
  return out;
}

}  // namespace degradekit::probe
