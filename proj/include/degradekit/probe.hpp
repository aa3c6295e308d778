#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "degradekit/error.hpp"
#include "degradekit/trace.hpp"

namespace degradekit::probe {

inline constexpr std::size_t kCacheLine = 64;

struct Capabilities {
  bool x86_64 = false;
  bool clflush = false;
  bool invariant_tsc = false;
  bool rdtscp = false;
  bool smt = false;
  bool writable_exec = false;
  int logical_cores = 0;
  int physical_cores = 0;

  std::string describe() const;
};

Capabilities detect_capabilities();

struct Needs {
  bool flush = false;
  bool tsc = false;
  bool smt = false;
  bool writable_exec = false;
  int min_physical_cores = 1;
};

// Throws a capability error listing everything that is missing.
void require_capabilities(const Capabilities& caps, const Needs& needs, const std::string& op);

struct LogicalCore {
  int logical_id = 0;
  int physical_id = 0;
  friend bool operator==(const LogicalCore&, const LogicalCore&) = default;
};

class CpuTopology {
 public:
  CpuTopology() = default;
  // From a logical -> physical map; rejects duplicate logical ids.
  static CpuTopology from_map(std::vector<LogicalCore> cores);

  const std::vector<LogicalCore>& cores() const { return cores_; }
  const std::vector<std::pair<int, int>>& sibling_pairs() const { return siblings_; }
  bool smt() const { return !siblings_.empty(); }
  std::optional<int> physical_of(int logical) const;
  bool are_siblings(int a, int b) const;
  std::vector<int> siblings_of(int logical) const;
  int physical_count() const;

 private:
  std::vector<LogicalCore> cores_;
  std::vector<std::pair<int, int>> siblings_;
};

// Reads core_id/package ids under `sysfs_root` (normally /sys/devices/system/cpu).
CpuTopology discover_topology(const std::string& sysfs_root = "/sys/devices/system/cpu");
// Second source: thread_siblings_list files. Used to cross-check discover_topology.
std::vector<std::vector<int>> os_sibling_lists(const std::string& sysfs_root = "/sys/devices/system/cpu");
std::vector<int> parse_cpu_list(const std::string& text);

struct Placement {
  int spy_core = -1;  // -1: no spy (benchmark runs)
  int degrade_core = 0;
  int victim_core = 0;

  // Validates the co-location rules for `strategy` against `topo`.
  static Placement make(DegradeStrategy strategy, const CpuTopology& topo, int spy, int degrade,
                        int victim);
  // Picks cores satisfying the rules, or throws a capability error.
  static Placement choose(DegradeStrategy strategy, const CpuTopology& topo);
};

void pin_current_thread(int logical_core);

struct CacheLineTarget {
  std::string path;
  std::uint64_t offset = 0;

  void validate() const;
  // "path:offset" with offset decimal or 0x-prefixed hex.
  static CacheLineTarget parse(const std::string& spec);
  std::string str() const;
};

// Read-only shared mapping of the page holding a target line.
class MappedLine {
 public:
  explicit MappedLine(const CacheLineTarget& target);
  ~MappedLine();
  MappedLine(const MappedLine&) = delete;
  MappedLine& operator=(const MappedLine&) = delete;
  MappedLine(MappedLine&& other) noexcept;
  MappedLine& operator=(MappedLine&&) = delete;

  const volatile std::uint8_t* line() const { return line_; }

 private:
  void* base_ = nullptr;
  std::size_t length_ = 0;
  const volatile std::uint8_t* line_ = nullptr;
};

class StopFlag {
 public:
  void signal() { flag_.store(1, std::memory_order_release); }
  bool signalled() const { return flag_.load(std::memory_order_acquire) != 0; }
  // Raw byte for the generated SMC loop, which polls it directly.
  const volatile std::uint8_t* raw() const {
    return reinterpret_cast<const volatile std::uint8_t*>(&flag_);
  }

 private:
  std::atomic<std::uint8_t> flag_{0};
};
static_assert(sizeof(std::atomic<std::uint8_t>) == 1);

// Low-level primitives (x86-64 only).
void flush_line(const volatile void* p);
// Timestamp read, fence, load, fence, timestamp read; returns elapsed cycles.
std::uint32_t timed_reload(const volatile void* p);
void busy_wait(std::uint32_t iterations);
std::uint64_t fenced_timestamp();

std::vector<trace::Latency> flush_reload_samples(const volatile void* line, std::uint32_t wait_r,
                                                 std::size_t n_samples);
trace::Trace flush_reload_capture(const CacheLineTarget& target, std::uint32_t wait_r,
                                  std::size_t n_samples, DegradeStrategy strategy,
                                  std::optional<int> class_label = std::nullopt,
                                  std::string capture_id = {});

// Defaults give the tightest loop: back-to-back flushes, no fence.
struct DegradeLoopConfig {
  std::uint32_t pause_iterations = 0;
  bool fence = false;  // mfence after every flush
};

// Returns the number of flushes issued.
std::uint64_t degrade_loop(const volatile void* line, const StopFlag& stop,
                           DegradeLoopConfig cfg = {});
std::uint64_t degrade_loop(const CacheLineTarget& target, const StopFlag& stop,
                           DegradeLoopConfig cfg = {});

// Machine code of the SMC loop: stores the byte 0x40 over its own first
// opcode byte, bumps a counter, polls the stop byte.
std::span<const std::uint8_t> smc_loop_code();
// Returns the number of self-stores executed.
std::uint64_t smc_degrade_loop(const StopFlag& stop);

struct Histogram {
  std::vector<std::uint64_t> counts;  // counts[latency], clipped at the last bucket

  static Histogram from_samples(std::span<const trace::Latency> samples,
                                std::size_t buckets = 1024);
  std::size_t mode() const;
  std::uint64_t total() const;
};

struct Calibration {
  std::uint32_t hit_peak = 0;
  std::uint32_t miss_peak = 0;
  std::uint32_t suggested_t = 0;
  Histogram hits;
  Histogram misses;
};

class CalibrationAmbiguous : public Error {
 public:
  CalibrationAmbiguous(const std::string& what, Histogram hits, Histogram misses)
      : Error(ErrorKind::CalibrationAmbiguous, what),
        hits(std::move(hits)),
        misses(std::move(misses)) {}
  Histogram hits;
  Histogram misses;
};

// Midpoint between the histogram modes; throws CalibrationAmbiguous when the
// hit mode does not sit strictly below the miss mode.
Calibration suggest_threshold(Histogram hits, Histogram misses);
Calibration calibrate_threshold(const CacheLineTarget& target, std::size_t samples = 20000);
// Fraction of samples classified correctly by the threshold (hits < t <= misses).
double separation_rate(const Calibration& c, std::span<const trace::Latency> hits,
                       std::span<const trace::Latency> misses);

struct RankedTarget {
  CacheLineTarget target;
  double cycles = 0;
};

// Stable sort by cycles descending, ties keep input order.
std::vector<RankedTarget> rank_targets(const std::vector<CacheLineTarget>& candidates,
                                       const std::function<double(const CacheLineTarget&)>& measure);

}  // namespace degradekit::probe
