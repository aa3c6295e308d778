#include <cmath>
#include <limits>

#include "degradekit/attack.hpp"

namespace degradekit::attack {

Closeness parse_closeness(const std::string& name) {
  if (name == "at-least-two") return Closeness::AtLeastTwo;
  if (name == "exactly-two") return Closeness::ExactlyTwo;
  fail(ErrorKind::Validation,
       "unknown closeness rule '" + name + "' (expected at-least-two|exactly-two)");
}

bool detect_padding(std::span<const trace::Latency> latencies, std::uint32_t t, std::uint32_t d,
                    Closeness rule) {
  require(t > 0 && d >= 1, ErrorKind::Validation, "detect_padding needs t > 0 and d >= 1");
  std::size_t hits = 0;
  std::size_t last = 0;
  bool close = false;
  for (std::size_t i = 0; i < latencies.size(); ++i) {
    if (latencies[i] >= t) continue;
    // The closest pair of hits is always a consecutive one.
    if (hits > 0 && i - last <= d) {
      close = true;
      if (rule == Closeness::AtLeastTwo) return true;
    }
    ++hits;
    last = i;
  }
  return rule == Closeness::ExactlyTwo ? (hits == 2 && close) : close;
}

bool detect_padding(const trace::Trace& trace, const AttackParams& params, Closeness rule) {
  return detect_padding(trace.samples, params.t, params.d, rule);
}

std::uint64_t estimate_traces(double tp_rate, double pad_prob, std::uint64_t d_required) {
  require(tp_rate > 0 && tp_rate <= 1 && pad_prob > 0 && pad_prob <= 1, ErrorKind::Domain,
          "estimate_traces needs tp_rate and pad_prob in (0, 1]");
  require(d_required >= 1, ErrorKind::Domain, "estimate_traces needs d_required >= 1");
  const long double x = static_cast<long double>(d_required) /
                        (static_cast<long double>(tp_rate) * static_cast<long double>(pad_prob));
  // Rates such as 1/177 are not exact in binary; absorb that before the ceiling.
  const long double slack = x * 1e-12L;
  const long double c = std::ceil(x - slack);
  require(c < static_cast<long double>(std::numeric_limits<std::uint64_t>::max()), ErrorKind::Domain,
          "trace estimate overflows");
  return static_cast<std::uint64_t>(c);
}

}  // namespace degradekit::attack
