#include <algorithm>
#include <limits>
#include <set>

#include "degradekit/error.hpp"
#include "degradekit/trace.hpp"

namespace degradekit {

const char* to_string(DegradeStrategy s) {
  switch (s) {
    case DegradeStrategy::NoDegrade: return "nodegrade";
    case DegradeStrategy::Degrade: return "degrade";
    case DegradeStrategy::HyperDegrade: return "hyperdegrade";
    case DegradeStrategy::SmcDegrade: return "smc";
    case DegradeStrategy::Contention: return "contention";
  }
  return "?";
}

DegradeStrategy parse_strategy(std::string_view name) {
  for (auto s : kAllStrategies)
    if (name == to_string(s)) return s;
  fail(ErrorKind::Validation, "unknown degrade strategy '" + std::string(name) +
                                  "' (expected nodegrade|degrade|hyperdegrade|smc|contention)");
}

void AttackParams::validate() const {
  require(r > 0 && t > 0 && d > 0, ErrorKind::Validation,
          "attack parameters r, t and d must all be positive");
}

namespace trace {

void Trace::validate() const {
  require(!samples.empty(), ErrorKind::Validation, "trace has no samples");
  require(meta.wait_r > 0, ErrorKind::Validation, "trace wait_r must be positive");
  for (Latency l : samples) require(l > 0, ErrorKind::Validation, "trace latency must be > 0");
}

std::vector<Latency> checked_latencies(std::span<const std::uint64_t> raw) {
  std::vector<Latency> out;
  out.reserve(raw.size());
  for (std::uint64_t v : raw) {
    require(v > 0, ErrorKind::Validation, "latency must be > 0");
    require(v <= std::numeric_limits<Latency>::max(), ErrorKind::Validation,
            "latency does not fit in 32 bits");
    out.push_back(static_cast<Latency>(v));
  }
  return out;
}

TraceSet::TraceSet(std::vector<Trace> traces) : traces_(std::move(traces)) { validate(); }

void TraceSet::add(Trace t) {
  t.validate();
  if (!traces_.empty()) {
    require(t.meta.wait_r == traces_.front().meta.wait_r, ErrorKind::Validation,
            "all traces in a set must share wait_r");
    require(t.meta.strategy == traces_.front().meta.strategy, ErrorKind::Validation,
            "all traces in a set must share the degrade strategy");
  }
  traces_.push_back(std::move(t));
}

DegradeStrategy TraceSet::strategy() const {
  require(!traces_.empty(), ErrorKind::Validation, "empty trace set");
  return traces_.front().meta.strategy;
}

std::uint32_t TraceSet::wait_r() const {
  require(!traces_.empty(), ErrorKind::Validation, "empty trace set");
  return traces_.front().meta.wait_r;
}

std::vector<int> TraceSet::labels() const {
  std::set<int> s;
  for (const auto& t : traces_)
    if (t.meta.class_label) s.insert(*t.meta.class_label);
  return {s.begin(), s.end()};
}

std::vector<std::size_t> TraceSet::indices_of(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < traces_.size(); ++i)
    if (traces_[i].meta.class_label == label) out.push_back(i);
  return out;
}

std::map<int, std::vector<const Trace*>> TraceSet::by_label() const {
  std::map<int, std::vector<const Trace*>> out;
  for (const auto& t : traces_)
    if (t.meta.class_label) out[*t.meta.class_label].push_back(&t);
  return out;
}

void TraceSet::validate() const {
  for (std::size_t i = 0; i < traces_.size(); ++i) {
    traces_[i].validate();
    require(traces_[i].meta.wait_r == traces_.front().meta.wait_r &&
                traces_[i].meta.strategy == traces_.front().meta.strategy,
            ErrorKind::Validation, "all traces in a set must share wait_r and strategy");
  }
}

namespace {
std::size_t common_length(const std::vector<const Trace*>& group, AlignPolicy policy) {
  std::size_t lo = group.front()->size();
  std::size_t hi = lo;
  for (const Trace* t : group) {
    lo = std::min(lo, t->size());
    hi = std::max(hi, t->size());
  }
  if (lo != hi && policy == AlignPolicy::Error)
    fail(ErrorKind::Length, "traces have unequal lengths (" + std::to_string(lo) + " vs " +
                                std::to_string(hi) + ") and the alignment policy is 'error'");
  return lo;
}
}  // namespace

std::vector<double> mean_trace(const TraceSet& set, int label, AlignPolicy policy) {
  auto groups = set.by_label();
  auto it = groups.find(label);
  require(it != groups.end(), ErrorKind::Validation,
          "no traces with class label " + std::to_string(label));
  const auto& group = it->second;
  const std::size_t n = common_length(group, policy);
  std::vector<double> mean(n, 0.0);
  for (const Trace* t : group)
    for (std::size_t j = 0; j < n; ++j) mean[j] += t->samples[j];
  for (double& m : mean) m /= static_cast<double>(group.size());
  return mean;
}

AlignedClasses align_classes(const TraceSet& set, AlignPolicy policy) {
  auto groups = set.by_label();
  require(!groups.empty(), ErrorKind::Validation, "trace set has no labelled traces");
  std::vector<const Trace*> all;
  for (const auto& [label, g] : groups) all.insert(all.end(), g.begin(), g.end());
  AlignedClasses out;
  out.length = common_length(all, policy);
  for (const auto& [label, g] : groups) {
    auto& rows = out.classes[label];
    rows.reserve(g.size());
    for (const Trace* t : g) rows.emplace_back(t->samples.begin(), t->samples.begin() + out.length);
  }
  return out;
}

}  // namespace trace
}  // namespace degradekit
