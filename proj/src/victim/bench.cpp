#include <cmath>
#include <numeric>

#include "degradekit/victim.hpp"

namespace degradekit::victim {

CycleStats CycleStats::from_runs(std::vector<double> runs) {
  require(!runs.empty(), ErrorKind::Validation, "cycle statistics need at least one run");
  CycleStats s;
  for (double c : runs) require(c >= 0, ErrorKind::Validation, "cycle counts must be nonnegative");
  s.cycles = std::move(runs);
  const double n = static_cast<double>(s.cycles.size());
  s.mean = std::accumulate(s.cycles.begin(), s.cycles.end(), 0.0) / n;
  double ss = 0;
  for (double c : s.cycles) ss += (c - s.mean) * (c - s.mean);
  const double stdev = s.cycles.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  s.rsd = s.mean > 0 ? stdev / s.mean : 0.0;
  s.unstable = s.rsd > kUnstableRsd;
  return s;
}

probe::Needs needs_for(DegradeStrategy strategy) {
  probe::Needs n{.tsc = true};
  switch (strategy) {
    case DegradeStrategy::NoDegrade:
      break;
    case DegradeStrategy::Degrade:
      n.flush = true;
      n.min_physical_cores = 2;
      break;
    case DegradeStrategy::HyperDegrade:
    case DegradeStrategy::Contention:
      n.flush = true;
      n.smt = true;
      break;
    case DegradeStrategy::SmcDegrade:
      n.writable_exec = true;
      break;
  }
  return n;
}

DegradeBody degrade_body_for(DegradeStrategy strategy, const probe::CacheLineTarget& target) {
  switch (strategy) {
    case DegradeStrategy::NoDegrade:
      return {};
    case DegradeStrategy::SmcDegrade:
      return [](const probe::StopFlag& stop) { probe::smc_degrade_loop(stop); };
    default:
      target.validate();
      return [target](const probe::StopFlag& stop) { probe::degrade_loop(target, stop); };
  }
}

CycleStats run_benchmark(const Victim& victim, DegradeStrategy strategy,
                         const probe::CacheLineTarget& target, std::uint32_t reps,
                         const SyncConfig& cfg) {
  require(reps >= 1, ErrorKind::Validation, "benchmark needs reps >= 1");
  probe::require_capabilities(probe::detect_capabilities(), needs_for(strategy),
                              std::string("benchmark under ") + to_string(strategy));
  SyncConfig run_cfg = cfg;
  if (run_cfg.victim_core < 0 || run_cfg.degrade_core < 0) {
    auto placement = probe::Placement::choose(strategy, probe::discover_topology());
    if (run_cfg.victim_core < 0) run_cfg.victim_core = placement.victim_core;
    if (run_cfg.degrade_core < 0) run_cfg.degrade_core = placement.degrade_core;
  }
  const auto degrade = degrade_body_for(strategy, target);
  std::vector<double> runs;
  runs.reserve(reps);
  for (std::uint32_t i = 0; i < reps; ++i) {
    auto r = sync_protocol([&victim] { victim.run(); }, degrade, run_cfg);
    runs.push_back(static_cast<double>(r.cycles));
  }
  return CycleStats::from_runs(std::move(runs));
}

std::vector<probe::RankedTarget> profile_cachelines(const Victim& victim,
                                                    const std::vector<probe::CacheLineTarget>& candidates,
                                                    DegradeStrategy strategy, std::uint32_t reps) {
  require(!candidates.empty(), ErrorKind::Validation, "no candidate cache lines to profile");
  if (candidates.size() == 1) return {{candidates.front(), 0.0}};
  return probe::rank_targets(candidates, [&](const probe::CacheLineTarget& t) {
    return run_benchmark(victim, strategy, t, reps).mean;
  });
}

}  // namespace degradekit::victim
