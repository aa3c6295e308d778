#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace degradekit {

enum class DegradeStrategy { NoDegrade, Degrade, HyperDegrade, SmcDegrade, Contention };

const char* to_string(DegradeStrategy s);
DegradeStrategy parse_strategy(std::string_view name);
inline constexpr DegradeStrategy kAllStrategies[] = {
    DegradeStrategy::NoDegrade, DegradeStrategy::Degrade, DegradeStrategy::HyperDegrade,
    DegradeStrategy::SmcDegrade, DegradeStrategy::Contention};

// Flush+Reload sweep triplet: wait-loop iterations, hit threshold (cycles),
// closeness distance (samples).
struct AttackParams {
  std::uint32_t r = 256;
  std::uint32_t t = 170;
  std::uint32_t d = 1;

  void validate() const;
  friend bool operator==(const AttackParams&, const AttackParams&) = default;
};

namespace trace {

using Latency = std::uint32_t;

struct TraceMeta {
  DegradeStrategy strategy = DegradeStrategy::NoDegrade;
  std::uint32_t wait_r = 1;
  std::optional<int> class_label;
  std::string capture_id;

  friend bool operator==(const TraceMeta&, const TraceMeta&) = default;
};

struct Trace {
  std::vector<Latency> samples;
  TraceMeta meta;

  // Nonempty, every latency > 0, wait_r > 0.
  void validate() const;
  std::size_t size() const { return samples.size(); }
  friend bool operator==(const Trace&, const Trace&) = default;
};

// Latencies from a wider type, rejecting zero or anything that does not fit 32 bits.
std::vector<Latency> checked_latencies(std::span<const std::uint64_t> raw);

class TraceSet {
 public:
  TraceSet() = default;
  explicit TraceSet(std::vector<Trace> traces);

  void add(Trace t);
  const std::vector<Trace>& traces() const { return traces_; }
  std::size_t size() const { return traces_.size(); }
  bool empty() const { return traces_.empty(); }

  DegradeStrategy strategy() const;
  std::uint32_t wait_r() const;
  // Distinct labels in ascending order; unlabelled traces are not listed.
  std::vector<int> labels() const;
  // Indices of the traces carrying `label`, in insertion order.
  std::vector<std::size_t> indices_of(int label) const;
  std::map<int, std::vector<const Trace*>> by_label() const;

  void validate() const;
  friend bool operator==(const TraceSet&, const TraceSet&) = default;

 private:
  std::vector<Trace> traces_;
};

enum class AlignPolicy { TruncateToMin, Error };

std::vector<double> mean_trace(const TraceSet& set, int label,
                               AlignPolicy policy = AlignPolicy::TruncateToMin);

// Per-class sample matrix with every trace cut to a common length.
struct AlignedClasses {
  std::size_t length = 0;
  std::map<int, std::vector<std::vector<double>>> classes;
};
AlignedClasses align_classes(const TraceSet& set, AlignPolicy policy = AlignPolicy::TruncateToMin);

// File format: "SCFT" | u16 version | u32 header length | JSON header | LE u32 body.
inline constexpr char kMagic[4] = {'S', 'C', 'F', 'T'};
inline constexpr std::uint16_t kFormatVersion = 1;

std::size_t write_traces(const TraceSet& set, std::ostream& out);
TraceSet read_traces(std::istream& in);
std::vector<std::uint8_t> encode_traces(const TraceSet& set);
TraceSet decode_traces(std::span<const std::uint8_t> bytes);
void save_traces(const TraceSet& set, const std::string& path);
TraceSet load_traces(const std::string& path);

}  // namespace trace
}  // namespace degradekit
