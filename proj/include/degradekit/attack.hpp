#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "degradekit/dh.hpp"
#include "degradekit/hnp.hpp"
#include "degradekit/lattice.hpp"
#include "degradekit/probe.hpp"
#include "degradekit/trace.hpp"

namespace degradekit::attack {

// AtLeastTwo: some pair of hits no more than d samples apart.
// ExactlyTwo: the trace holds exactly two hits and they are that close.
enum class Closeness { AtLeastTwo, ExactlyTwo };
Closeness parse_closeness(const std::string& name);

bool detect_padding(std::span<const trace::Latency> latencies, std::uint32_t t, std::uint32_t d,
                    Closeness rule = Closeness::AtLeastTwo);
bool detect_padding(const trace::Trace& trace, const AttackParams& params,
                    Closeness rule = Closeness::AtLeastTwo);

// Base observations plus `retries` fresh ones for every positive base detection.
inline std::uint64_t total_observations(std::uint64_t base_queries, std::uint64_t positives,
                                        std::uint32_t retries) {
  return base_queries + std::uint64_t(retries) * positives;
}

// ceil(d_required / (tp_rate * pad_prob))
std::uint64_t estimate_traces(double tp_rate, double pad_prob, std::uint64_t d_required);

struct ParamGrid {
  std::vector<std::uint32_t> r{128, 256};
  std::vector<std::uint32_t> t{50, 100, 150, 170, 200};
  std::vector<std::uint32_t> d{1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90, 95};

  void validate() const;
};

// Traces captured for a padding and a non-padding key pair under one strategy and wait time.
struct LabeledTraces {
  trace::TraceSet pad;
  trace::TraceSet nopad;
};

struct SweepRow {
  DegradeStrategy strategy = DegradeStrategy::NoDegrade;
  AttackParams params;
  double tp_rate = 0;
  double fp_rate = 0;
  std::optional<std::uint64_t> est_traces;  // iff fp = 0 and tp > 0
};

struct HistogramPoint {
  std::uint64_t trace_budget = 0;
  std::size_t param_sets = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double pad_prob = 0;
  std::uint64_t d_required = 0;

  std::vector<SweepRow> zero_fp() const;
  // Minimal est_traces over the zero-FP rows; ties keep grid order.
  std::map<DegradeStrategy, std::optional<SweepRow>> best() const;
  // For every distinct zero-FP budget x: number of parameter sets needing <= x traces.
  std::vector<HistogramPoint> histogram(DegradeStrategy strategy) const;
  std::vector<DegradeStrategy> strategies() const;
};

SweepReport sweep(const std::vector<LabeledTraces>& corpus, const ParamGrid& grid, double pad_prob,
                  std::uint64_t d_required, Closeness rule = Closeness::AtLeastTwo);

// Synthetic sweep corpus. Pad traces: `close_pairs` of them carry two hits
// `pair_spacing` samples apart; the rest carry one hit. No-pad traces carry
// one hit, or two hits `nopad_spacing` apart for `nopad_far_pairs` of them.
// Hit latencies are uniform in [hit_lo, hit_hi], misses in [miss_lo, miss_hi].
struct SweepFixture {
  DegradeStrategy strategy = DegradeStrategy::HyperDegrade;
  std::uint32_t wait_r = 256;
  std::size_t traces = 1000;
  std::size_t length = 400;
  std::size_t close_pairs = 570;
  std::uint32_t pair_spacing = 1;
  std::size_t nopad_far_pairs = 100;
  std::uint32_t nopad_spacing = 60;
  std::uint32_t hit_lo = 90, hit_hi = 160;
  std::uint32_t miss_lo = 250, miss_hi = 350;
  std::uint64_t seed = 1;
};
LabeledTraces simulate_sweep_corpus(const SweepFixture& fx);

enum class Mode { Simulate, Hardware };

// Hardware observation hook: run one victim decryption on the query and report
// whether the captured trace shows padding.
using PaddingObserver = std::function<bool(const dh::ChosenQuery&, std::uint32_t retry)>;

// Capture-based observer: trigger() makes the victim process the query while a
// Flush+Reload capture on `line` runs; detection uses detect_padding.
PaddingObserver capture_observer(std::function<void(const dh::ChosenQuery&)> trigger,
                                 probe::CacheLineTarget line, AttackParams params,
                                 std::size_t samples, DegradeStrategy strategy,
                                 Closeness rule = Closeness::AtLeastTwo);

struct AttackRunConfig {
  Mode mode = Mode::Simulate;
  dh::DhGroup group;
  dh::OracleConfig oracle;
  AttackParams params;
  std::size_t ell = 8;
  double confidence = 1.35;
  std::optional<std::size_t> d_required;  // default dimension_heuristic(confidence, bits(p), ell)
  std::size_t collect = 0;                // accepted samples to collect before ranking; 0 = d_required
  bool voting = true;
  lattice::ReductionParams reduction;
  std::uint64_t seed = 0;
  std::uint64_t query_budget = 10'000'000;
  // Hardware mode: public values of the target, and the observer.
  std::optional<Integer> g_a, g_b;
  PaddingObserver observer;

  void validate() const;
  std::size_t required() const;
};

struct AttackStats {
  std::uint64_t queries = 0;
  std::uint64_t observations = 0;
  std::uint64_t base_positives = 0;
  std::size_t accepted = 0;
  std::size_t selected = 0;
  std::optional<std::size_t> selected_false_positives;  // simulate only
  std::optional<std::size_t> accepted_false_positives;
  std::map<std::uint32_t, std::size_t> vote_histogram;
  double wall_time = 0;
  double lattice_time = 0;
};

struct AttackResult {
  std::optional<Integer> alpha;
  std::optional<Integer> ground_truth;  // simulate only
  bool success = false;
  AttackStats stats;
  std::vector<dh::TranscriptEntry> transcript;
  hnp::HnpInstance instance;
  std::size_t satisfied = 0;
  std::string advice;
};

class BudgetExhausted : public Error {
 public:
  BudgetExhausted(const std::string& what, AttackResult partial)
      : Error(ErrorKind::Budget, what), partial(std::move(partial)) {}
  AttackResult partial;
};

AttackResult run_attack(const AttackRunConfig& cfg);

// Reports. All outputs are deterministic for a given input.
std::string sweep_csv(const SweepReport& r);
std::string sweep_json(const SweepReport& r);
SweepReport parse_sweep_json(const std::string& text);
std::string histogram_csv(const SweepReport& r);
std::string attack_json(const AttackResult& r, bool include_timing = true);

}  // namespace degradekit::attack
