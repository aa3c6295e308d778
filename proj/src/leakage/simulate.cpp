#include <algorithm>
#include <cmath>
#include <random>

#include "degradekit/error.hpp"
#include "degradekit/leakage.hpp"

namespace degradekit::leakage {

trace::TraceSet simulate_stretched_traces(const StretchPattern& base, std::uint32_t stretch_factor,
                                          double noise, std::uint64_t seed) {
  require(stretch_factor >= 1, ErrorKind::Validation, "stretch factor must be >= 1");
  require(noise >= 0, ErrorKind::Validation, "noise must be nonnegative");
  require(!base.class0.empty() && base.class0.size() == base.class1.size(), ErrorKind::Validation,
          "class patterns must be nonempty and equally long");
  require(base.traces_per_class > 0, ErrorKind::Validation, "need at least one trace per class");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  trace::TraceSet set;
  std::size_t id = 0;
  for (std::size_t i = 0; i < base.traces_per_class; ++i) {
    for (int label : {0, 1}) {
      const auto& pattern = label ? base.class1 : base.class0;
      trace::Trace t;
      t.samples.reserve(pattern.size() * stretch_factor);
      for (auto v : pattern)
        for (std::uint32_t k = 0; k < stretch_factor; ++k) {
          double x = static_cast<double>(v);
          if (noise > 0) x += std::round(noise * gauss(rng));
          t.samples.push_back(static_cast<trace::Latency>(std::max(1.0, x)));
        }
      t.meta = {base.strategy, base.wait_r, label, "sim-" + std::to_string(id++)};
      set.add(std::move(t));
    }
  }
  return set;
}

StretchPattern hit_pattern(std::size_t length, std::size_t leaky, std::uint32_t hit,
                           std::uint32_t miss, std::uint64_t seed) {
  require(leaky <= length, ErrorKind::Validation, "more leaky points than pattern length");
  std::mt19937_64 rng(seed);
  StretchPattern p;
  p.class0.assign(length, miss);
  p.class1.assign(length, miss);
  std::vector<std::size_t> idx(length);
  for (std::size_t i = 0; i < length; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t k = 0; k < leaky; ++k) p.class1[idx[k]] = hit;
  return p;
}

}  // namespace degradekit::leakage
