#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "degradekit/probe.hpp"
#include "degradekit/trace.hpp"

namespace degradekit::victim {

enum class VictimKind { SingleLineLoop, VictimPair, ExternalSharedLib };

struct VictimSpec {
  VictimKind kind = VictimKind::SingleLineLoop;
  std::uint64_t iterations = 1u << 16;  // SingleLineLoop
  std::uint32_t line_index = 0;         // SingleLineLoop, 0..63
  std::uint32_t cnt = 2048;             // VictimPair
  std::string path;                     // ExternalSharedLib
  std::string entry;                    // ExternalSharedLib, void() symbol

  void validate() const;

  static VictimSpec single_line(std::uint64_t iterations, std::uint32_t line_index = 0);
  static VictimSpec pair(std::uint32_t cnt = 2048);
  static VictimSpec external(std::string path, std::string entry);
};

inline constexpr std::uint32_t kLoopLines = 64;
inline constexpr std::uint32_t kInstructionsPerIteration = 16;
inline constexpr std::uint32_t kPairSeparation = 512;
inline constexpr const char* kLoopEntry = "dk_victim_loop";
inline constexpr const char* kLoopBase = "dk_victim_lines";
inline constexpr const char* kPairEntry0 = "x64_victim_0";
inline constexpr const char* kPairEntry1 = "x64_victim_1";

// Assembly source for the generated victims.
std::string single_line_loop_source();
std::string victim_pair_source(std::uint32_t cnt);

// Symbol value -> file offset, from the ELF symbol tables and PT_LOAD headers.
std::uint64_t symbol_file_offset(const std::string& elf_path, const std::string& symbol);
std::map<std::string, std::uint64_t> elf_symbols(const std::string& elf_path);
std::uint64_t vaddr_to_file_offset(const std::string& elf_path, std::uint64_t vaddr);

// Shared object plus a launcher that maps it and calls the entry.
class Victim {
 public:
  Victim(VictimSpec spec, std::string so_path);
  ~Victim();
  Victim(const Victim&) = delete;
  Victim& operator=(const Victim&) = delete;
  Victim(Victim&& other) noexcept;
  Victim& operator=(Victim&&) = delete;

  const VictimSpec& spec() const { return spec_; }
  const std::string& so_path() const { return so_path_; }
  void run() const;
  // Pair victims: "0-0" or "0-1" call sequences.
  void run_sequence(int second) const;

  std::uint64_t symbol_offset(const std::string& symbol) const;
  // The line the victim executes (SingleLineLoop) or the probed function start (pair).
  probe::CacheLineTarget hot_line() const;
  // A 64-byte line in the middle of a pair function (degrade target).
  probe::CacheLineTarget middle_line(int which) const;

 private:
  void* fn(const std::string& symbol) const;
  VictimSpec spec_;
  std::string so_path_;
  void* handle_ = nullptr;
};

// Emits the source into out_dir and assembles a shared object (`cc -shared -nostdlib`).
Victim build_victim(const VictimSpec& spec, const std::filesystem::path& out_dir);
std::string assembler_command();

// Counter-sync orchestration over three FIFOs: C (control), A (controller ack to
// degrade), V (degrade ack forwarded to victim). This process is the controller.
struct SyncConfig {
  std::chrono::milliseconds ack_timeout{10000};
  int victim_core = -1;
  int degrade_core = -1;
  std::filesystem::path fifo_dir;  // empty: a fresh temp dir
};

struct SyncEvent {
  std::string party;    // controller | degrade | victim
  std::string message;  // e.g. "C:enable"
  std::uint64_t tsc = 0;
};

struct SyncResult {
  std::uint64_t cycles = 0;  // victim loop only
  std::uint64_t nanoseconds = 0;
  std::uint64_t loop_start_tsc = 0;
  std::uint64_t loop_end_tsc = 0;
  std::vector<SyncEvent> events;
  std::vector<std::string> messages() const;
};

// Runs in the degrade child until stop is signalled; empty = dummy party.
using DegradeBody = std::function<void(const probe::StopFlag&)>;

SyncResult sync_protocol(const std::function<void()>& victim_body, const DegradeBody& degrade,
                         const SyncConfig& cfg = {});

struct CycleStats {
  std::vector<double> cycles;
  double mean = 0;
  double rsd = 0;
  bool unstable = false;  // rsd > 4%
  std::string backend = "tsc";
  std::optional<std::uint64_t> instructions_retired;
  std::optional<std::uint64_t> l1i_misses;
  std::optional<std::uint64_t> smc_machine_clears;

  static CycleStats from_runs(std::vector<double> runs);
};

inline constexpr double kUnstableRsd = 0.04;

DegradeBody degrade_body_for(DegradeStrategy strategy, const probe::CacheLineTarget& target);
probe::Needs needs_for(DegradeStrategy strategy);

CycleStats run_benchmark(const Victim& victim, DegradeStrategy strategy,
                         const probe::CacheLineTarget& target, std::uint32_t reps,
                         const SyncConfig& cfg = {});

std::vector<probe::RankedTarget> profile_cachelines(const Victim& victim,
                                                    const std::vector<probe::CacheLineTarget>& candidates,
                                                    DegradeStrategy strategy, std::uint32_t reps = 3);

double slowdown_factor(double strategy_cycles, double baseline_cycles, bool subtract_baseline = false,
                       std::optional<double> reference_cycles = std::nullopt);

struct Aggregate {
  double median = 0, min = 0, max = 0, mean = 0, stdev = 0;
};
Aggregate aggregate_stats(std::vector<double> rows);

struct SlowdownRow {
  std::string benchmark;
  DegradeStrategy strategy = DegradeStrategy::NoDegrade;
  double cycles_mean = 0;
  double cycles_rsd = 0;
  double ratio = 1;
};

struct SlowdownReport {
  std::vector<SlowdownRow> rows;
  std::map<DegradeStrategy, Aggregate> aggregates;

  // rows need a NoDegrade entry per benchmark; ratios are filled in.
  static SlowdownReport from_rows(std::vector<SlowdownRow> rows);
  std::string csv() const;
};

// Per-benchmark slowdown fixture: (family, strategy) -> ratios.
std::map<std::pair<std::string, DegradeStrategy>, std::vector<double>> load_ratio_fixture(
    const std::string& csv_path);

}  // namespace degradekit::victim
