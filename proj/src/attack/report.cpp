#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "degradekit/attack.hpp"

namespace degradekit::attack {

using nlohmann::ordered_json;

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

ordered_json row_json(const SweepRow& row) {
  ordered_json j;
  j["strategy"] = to_string(row.strategy);
  j["r"] = row.params.r;
  j["t"] = row.params.t;
  j["d"] = row.params.d;
  j["tp_rate"] = row.tp_rate;
  j["fp_rate"] = row.fp_rate;
  j["est_traces"] = row.est_traces ? ordered_json(*row.est_traces) : ordered_json(nullptr);
  return j;
}

}  // namespace

std::string sweep_csv(const SweepReport& r) {
  std::ostringstream os;
  os << "strategy,r,t,d,tp_rate,fp_rate,est_traces\n";
  for (const auto& row : r.rows) {
    os << to_string(row.strategy) << ',' << row.params.r << ',' << row.params.t << ','
       << row.params.d << ',' << fixed6(row.tp_rate) << ',' << fixed6(row.fp_rate) << ',';
    if (row.est_traces) os << *row.est_traces;
    os << '\n';
  }
  return os.str();
}

std::string histogram_csv(const SweepReport& r) {
  std::ostringstream os;
  os << "strategy,trace_budget,count\n";
  for (auto s : r.strategies())
    for (const auto& p : r.histogram(s))
      os << to_string(s) << ',' << p.trace_budget << ',' << p.param_sets << '\n';
  return os.str();
}

std::string sweep_json(const SweepReport& r) {
  ordered_json j;
  j["pad_prob"] = r.pad_prob;
  j["d_required"] = r.d_required;
  j["rows"] = ordered_json::array();
  for (const auto& row : r.rows) j["rows"].push_back(row_json(row));
  j["best"] = ordered_json::object();
  for (const auto& [s, b] : r.best()) j["best"][to_string(s)] = b ? row_json(*b) : ordered_json(nullptr);
  j["histogram"] = ordered_json::object();
  for (auto s : r.strategies()) {
    auto& h = j["histogram"][to_string(s)] = ordered_json::array();
    for (const auto& p : r.histogram(s))
      h.push_back({{"trace_budget", p.trace_budget}, {"count", p.param_sets}});
  }
  return j.dump(2) + "\n";
}

SweepReport parse_sweep_json(const std::string& text) {
  const auto j = ordered_json::parse(text, nullptr, false);
  require(!j.is_discarded() && j.is_object(), ErrorKind::Format, "sweep report is not valid JSON");
  SweepReport r;
  try {
    r.pad_prob = j.at("pad_prob").get<double>();
    r.d_required = j.at("d_required").get<std::uint64_t>();
    for (const auto& jr : j.at("rows")) {
      SweepRow row;
      row.strategy = parse_strategy(jr.at("strategy").get<std::string>());
      row.params = {jr.at("r").get<std::uint32_t>(), jr.at("t").get<std::uint32_t>(),
                    jr.at("d").get<std::uint32_t>()};
      row.tp_rate = jr.at("tp_rate").get<double>();
      row.fp_rate = jr.at("fp_rate").get<double>();
      if (!jr.at("est_traces").is_null()) row.est_traces = jr["est_traces"].get<std::uint64_t>();
      require(row.est_traces.has_value() == (row.fp_rate == 0 && row.tp_rate > 0), ErrorKind::Format,
              "sweep row est_traces must be present exactly when fp = 0 and tp > 0");
      r.rows.push_back(row);
    }
  } catch (const ordered_json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed sweep report: ") + e.what());
  }
  return r;
}

std::string attack_json(const AttackResult& r, bool include_timing) {
  ordered_json j;
  j["success"] = r.success;
  j["alpha"] = r.alpha ? ordered_json(to_hex(*r.alpha)) : ordered_json(nullptr);
  if (r.ground_truth) j["ground_truth"] = to_hex(*r.ground_truth);
  j["satisfied"] = r.satisfied;
  j["d"] = r.instance.samples.size();
  const auto& s = r.stats;
  ordered_json st;
  st["queries"] = s.queries;
  st["observations"] = s.observations;
  st["base_positives"] = s.base_positives;
  st["accepted"] = s.accepted;
  st["selected"] = s.selected;
  if (s.selected_false_positives) st["selected_false_positives"] = *s.selected_false_positives;
  if (s.accepted_false_positives) st["accepted_false_positives"] = *s.accepted_false_positives;
  ordered_json hist = ordered_json::object();
  for (const auto& [votes, n] : s.vote_histogram) hist[std::to_string(votes)] = n;
  st["vote_histogram"] = std::move(hist);
  if (include_timing) {
    st["wall_time"] = s.wall_time;
    st["lattice_time"] = s.lattice_time;
  }
  j["stats"] = std::move(st);
  if (!r.advice.empty()) j["advice"] = r.advice;
  return j.dump(2) + "\n";
}

}  // namespace degradekit::attack
