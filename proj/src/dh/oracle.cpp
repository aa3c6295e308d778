#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "degradekit/dh.hpp"

namespace degradekit::dh {

using nlohmann::json;

void OracleConfig::validate() const {
  require(tp_rate >= 0 && tp_rate <= 1 && fp_rate >= 0 && fp_rate <= 1, ErrorKind::Validation,
          "tp/fp rates must lie in [0, 1]");
  require(retries >= 1, ErrorKind::Validation, "retries must be >= 1");
  require(vote_pass >= 1 && vote_pass <= retries, ErrorKind::Validation,
          "vote_pass must lie in [1, retries]");
}

ChosenQuery craft_query_with(const Integer& g_b, const Integer& g_a, const DhGroup& group,
                             const Integer& r, std::uint64_t index) {
  require(g_b > 0 && g_b < group.p && g_a > 0 && g_a < group.p, ErrorKind::Validation,
          "public values must lie in (0, p)");
  ChosenQuery q;
  q.index = index;
  q.r = r;
  q.point = mod_floor(g_b * powm(group.g, r, group.p), group.p);
  q.t = powm(g_a, r, group.p);
  return q;
}

ChosenQuery craft_query(const Integer& g_b, const Integer& g_a, const DhGroup& group, Rng& rng,
                        std::uint64_t index) {
  const Integer order = group.q != 0 ? group.q : Integer(group.p - 1);
  return craft_query_with(g_b, g_a, group, rng.between(1, order), index);
}

bool query_truth(const ChosenQuery& q, const Integer& victim_priv, const DhGroup& group) {
  return needs_padding(powm(q.point, victim_priv, group.p), group);
}

bool observe_truth(bool truth, std::uint64_t index, std::uint32_t retry, const OracleConfig& cfg) {
  const double u = counter_uniform(cfg.seed, index, retry);
  return truth ? u < cfg.tp_rate : u < cfg.fp_rate;
}

bool oracle_observe(const ChosenQuery& q, const Integer& victim_priv, const DhGroup& group,
                    const OracleConfig& cfg, std::uint32_t retry) {
  return observe_truth(query_truth(q, victim_priv, group), q.index, retry, cfg);
}

Vote vote_truth(bool truth, std::uint64_t index, const OracleConfig& cfg) {
  cfg.validate();
  Vote v;
  for (std::uint32_t k = 1; k <= cfg.retries; ++k) v.votes += observe_truth(truth, index, k, cfg);
  v.accepted = v.votes >= cfg.vote_pass;
  return v;
}

Vote majority_vote(const ChosenQuery& q, const Integer& victim_priv, const DhGroup& group,
                   const OracleConfig& cfg) {
  return vote_truth(query_truth(q, victim_priv, group), q.index, cfg);
}

double binomial_tail(std::uint32_t n, double p, std::uint32_t k) {
  double total = 0;
  for (std::uint32_t i = k; i <= n; ++i)
    total += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0)) *
             std::pow(p, i) * std::pow(1 - p, n - i);
  return total;
}

std::vector<VotedQuery> rank_and_select(std::vector<VotedQuery> accepted, std::size_t count) {
  if (accepted.size() < count) {
    const std::size_t shortfall = count - accepted.size();
    throw InsufficientSamplesError("need " + std::to_string(count) + " accepted samples, have " +
                                       std::to_string(accepted.size()) + " (short by " +
                                       std::to_string(shortfall) + ")",
                                   shortfall);
  }
  std::stable_sort(accepted.begin(), accepted.end(),
                   [](const VotedQuery& a, const VotedQuery& b) { return a.votes > b.votes; });
  accepted.resize(count);
  return accepted;
}

std::string transcript_jsonl(const std::vector<TranscriptEntry>& entries) {
  std::ostringstream os;
  for (const auto& e : entries)
    os << json{{"index", e.query.index},
               {"r_i", to_hex(e.query.r)},
               {"point", to_hex(e.query.point)},
               {"t_i", to_hex(e.query.t)},
               {"votes", e.votes},
               {"accepted", e.accepted}}
              .dump()
       << '\n';
  return os.str();
}

std::vector<TranscriptEntry> parse_transcript(const std::string& jsonl) {
  std::vector<TranscriptEntry> out;
  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    require(!j.is_discarded(), ErrorKind::Format, "bad transcript line: " + line);
    try {
      TranscriptEntry e;
      e.query.index = j.at("index").get<std::uint64_t>();
      e.query.r = from_hex(j.at("r_i").get<std::string>());
      e.query.point = from_hex(j.at("point").get<std::string>());
      e.query.t = from_hex(j.at("t_i").get<std::string>());
      e.votes = j.at("votes").get<std::uint32_t>();
      e.accepted = j.at("accepted").get<bool>();
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      fail(ErrorKind::Format, std::string("bad transcript line: ") + ex.what());
    }
  }
  return out;
}

}  // namespace degradekit::dh
