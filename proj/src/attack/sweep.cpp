#include <algorithm>
#include <set>

#include "degradekit/attack.hpp"

namespace degradekit::attack {

void ParamGrid::validate() const {
  require(!r.empty() && !t.empty() && !d.empty(), ErrorKind::Validation,
          "parameter grid must have at least one r, t and d");
  for (auto v : r) require(v > 0, ErrorKind::Validation, "grid r values must be positive");
  for (auto v : t) require(v > 0, ErrorKind::Validation, "grid t values must be positive");
  for (auto v : d) require(v > 0, ErrorKind::Validation, "grid d values must be positive");
}

std::vector<SweepRow> SweepReport::zero_fp() const {
  std::vector<SweepRow> out;
  for (const auto& row : rows)
    if (row.est_traces) out.push_back(row);
  return out;
}

std::vector<DegradeStrategy> SweepReport::strategies() const {
  std::vector<DegradeStrategy> out;
  for (const auto& row : rows)
    if (std::find(out.begin(), out.end(), row.strategy) == out.end()) out.push_back(row.strategy);
  return out;
}

std::map<DegradeStrategy, std::optional<SweepRow>> SweepReport::best() const {
  std::map<DegradeStrategy, std::optional<SweepRow>> out;
  for (auto s : strategies()) out[s] = std::nullopt;
  for (const auto& row : rows) {
    if (!row.est_traces) continue;
    auto& b = out[row.strategy];
    if (!b || *row.est_traces < *b->est_traces) b = row;
  }
  return out;
}

std::vector<HistogramPoint> SweepReport::histogram(DegradeStrategy strategy) const {
  std::vector<std::uint64_t> budgets;
  for (const auto& row : rows)
    if (row.strategy == strategy && row.est_traces) budgets.push_back(*row.est_traces);
  std::sort(budgets.begin(), budgets.end());
  std::vector<HistogramPoint> out;
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (i + 1 < budgets.size() && budgets[i + 1] == budgets[i]) continue;
    out.push_back({budgets[i], i + 1});
  }
  return out;
}

namespace {

// Per-trace summary at one threshold: hit count and smallest gap between hits.
struct HitSummary {
  std::size_t hits = 0;
  std::size_t min_gap = SIZE_MAX;
};

HitSummary summarize(const trace::Trace& tr, std::uint32_t t) {
  HitSummary s;
  std::size_t last = 0;
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    if (tr.samples[i] >= t) continue;
    if (s.hits > 0) s.min_gap = std::min(s.min_gap, i - last);
    ++s.hits;
    last = i;
  }
  return s;
}

bool detected(const HitSummary& s, std::uint32_t d, Closeness rule) {
  if (rule == Closeness::ExactlyTwo && s.hits != 2) return false;
  return s.hits >= 2 && s.min_gap <= d;
}

double rate(const std::vector<HitSummary>& set, std::uint32_t d, Closeness rule) {
  std::size_t n = 0;
  for (const auto& s : set) n += detected(s, d, rule);
  return static_cast<double>(n) / static_cast<double>(set.size());
}

}  // namespace

SweepReport sweep(const std::vector<LabeledTraces>& corpus, const ParamGrid& grid, double pad_prob,
                  std::uint64_t d_required, Closeness rule) {
  grid.validate();
  require(!corpus.empty(), ErrorKind::Validation, "sweep needs at least one labelled trace pair");
  require(pad_prob > 0 && pad_prob <= 1, ErrorKind::Domain, "pad probability must be in (0, 1]");
  require(d_required >= 1, ErrorKind::Validation, "d_required must be >= 1");
  for (const auto& lt : corpus) {
    require(!lt.pad.empty() && !lt.nopad.empty(), ErrorKind::Validation,
            "pad and no-pad trace sets must both be nonempty");
    require(lt.pad.strategy() == lt.nopad.strategy() && lt.pad.wait_r() == lt.nopad.wait_r(),
            ErrorKind::Mismatch, "pad and no-pad sets disagree on strategy or wait_r");
  }

  std::vector<DegradeStrategy> order;
  for (const auto& lt : corpus)
    if (std::find(order.begin(), order.end(), lt.pad.strategy()) == order.end())
      order.push_back(lt.pad.strategy());

  SweepReport rep;
  rep.pad_prob = pad_prob;
  rep.d_required = d_required;
  for (auto strategy : order) {
    for (auto r : grid.r) {
      const LabeledTraces* found = nullptr;
      for (const auto& lt : corpus)
        if (lt.pad.strategy() == strategy && lt.pad.wait_r() == r) found = &lt;
      require(found != nullptr, ErrorKind::Mismatch,
              "grid wait r=" + std::to_string(r) + " has no " + to_string(strategy) +
                  " traces in the corpus");
      for (auto t : grid.t) {
        std::vector<HitSummary> pad, nopad;
        for (const auto& tr : found->pad.traces()) pad.push_back(summarize(tr, t));
        for (const auto& tr : found->nopad.traces()) nopad.push_back(summarize(tr, t));
        for (auto d : grid.d) {
          SweepRow row;
          row.strategy = strategy;
          row.params = {r, t, d};
          row.tp_rate = rate(pad, d, rule);
          row.fp_rate = rate(nopad, d, rule);
          if (row.fp_rate == 0 && row.tp_rate > 0)
            row.est_traces = estimate_traces(row.tp_rate, pad_prob, d_required);
          rep.rows.push_back(row);
        }
      }
    }
  }
  return rep;
}

LabeledTraces simulate_sweep_corpus(const SweepFixture& fx) {
  require(fx.traces > 0 && fx.length > 0, ErrorKind::Validation, "fixture needs traces and samples");
  require(fx.close_pairs <= fx.traces && fx.nopad_far_pairs <= fx.traces, ErrorKind::Validation,
          "fixture pair counts exceed the trace count");
  require(fx.pair_spacing >= 1 && fx.nopad_spacing >= 1, ErrorKind::Validation,
          "fixture spacings must be >= 1");
  require(fx.pair_spacing < fx.length && fx.nopad_spacing < fx.length, ErrorKind::Validation,
          "fixture spacing does not fit in the trace length");
  require(fx.hit_lo > 0 && fx.hit_lo <= fx.hit_hi && fx.hit_hi < fx.miss_lo &&
              fx.miss_lo <= fx.miss_hi,
          ErrorKind::Validation, "fixture latency ranges must satisfy 0 < hit <= miss");

  Rng rng(fx.seed);
  auto uniform = [&](std::uint32_t lo, std::uint32_t hi) {
    return lo + static_cast<std::uint32_t>(rng.next_u64() % (hi - lo + 1));
  };
  auto make = [&](int label, std::size_t index, std::size_t hits, std::uint32_t spacing) {
    trace::Trace tr;
    tr.meta.strategy = fx.strategy;
    tr.meta.wait_r = fx.wait_r;
    tr.meta.class_label = label;
    tr.meta.capture_id = (label ? "pad-" : "nopad-") + std::to_string(index);
    tr.samples.resize(fx.length);
    for (auto& s : tr.samples) s = uniform(fx.miss_lo, fx.miss_hi);
    const std::size_t span = hits == 2 ? spacing : 0;
    const std::size_t pos = rng.next_u64() % (fx.length - span);
    tr.samples[pos] = uniform(fx.hit_lo, fx.hit_hi);
    if (hits == 2) tr.samples[pos + span] = uniform(fx.hit_lo, fx.hit_hi);
    return tr;
  };

  LabeledTraces out;
  for (std::size_t i = 0; i < fx.traces; ++i)
    out.pad.add(make(1, i, i < fx.close_pairs ? 2 : 1, fx.pair_spacing));
  for (std::size_t i = 0; i < fx.traces; ++i)
    out.nopad.add(make(0, i, i < fx.nopad_far_pairs ? 2 : 1, fx.nopad_spacing));
  return out;
}

}  // namespace degradekit::attack
