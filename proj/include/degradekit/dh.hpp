#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "degradekit/bigint.hpp"
#include "degradekit/error.hpp"

namespace degradekit::dh {

struct DhGroup {
  Integer p;
  Integer q;  // 0 when unknown
  Integer g;
  std::string source;

  void validate() const;
  std::size_t byte_len() const { return byte_length(p); }
  // Hex sha256 over "P:Q:G" (uppercase hex fields).
  std::string checksum() const;
};

// {p, q, g, source, sha256?}; a present checksum must match.
DhGroup load_group(const std::string& path);
DhGroup parse_group(const std::string& json_text);
std::string group_json(const DhGroup& g);
// Fixture directory: $DEGRADEKIT_DATA_DIR, else the source tree data/.
std::string data_dir();
std::string default_group_path();     // RFC 5114 1024/160 fixture
std::string safe_prime_256_path();    // 256-bit desk-scale group

struct DhKeyPair {
  Integer priv;
  Integer pub;
};

DhKeyPair keygen(const DhGroup& group, Rng& rng);
DhKeyPair keypair_from(const DhGroup& group, const Integer& priv);
Integer shared_secret(const Integer& pub_other, const Integer& priv, const Integer& p);

bool needs_padding(const Integer& secret, const DhGroup& group);
// 2^(8(k-1)) with k = byte_len(p): secrets below this are padded.
Integer padding_bound(const DhGroup& group);
double pad_probability(const DhGroup& group);

struct OracleConfig {
  double tp_rate = 1.0;
  double fp_rate = 0.0;
  std::uint32_t retries = 7;
  std::uint32_t vote_pass = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ChosenQuery {
  std::uint64_t index = 0;
  Integer r;
  Integer point;  // g_b * g^r mod p
  Integer t;      // g_a^r mod p
};

ChosenQuery craft_query(const Integer& g_b, const Integer& g_a, const DhGroup& group, Rng& rng,
                        std::uint64_t index = 0);
ChosenQuery craft_query_with(const Integer& g_b, const Integer& g_a, const DhGroup& group,
                             const Integer& r, std::uint64_t index = 0);

// Ground truth the victim leaks: does point^a mod p need padding?
bool query_truth(const ChosenQuery& q, const Integer& victim_priv, const DhGroup& group);

// Noisy detector; observation `retry` of query `index` is a pure function of the seed.
bool observe_truth(bool truth, std::uint64_t index, std::uint32_t retry, const OracleConfig& cfg);
bool oracle_observe(const ChosenQuery& q, const Integer& victim_priv, const DhGroup& group,
                    const OracleConfig& cfg, std::uint32_t retry = 0);

struct Vote {
  bool accepted = false;
  std::uint32_t votes = 0;
};

// cfg.retries fresh observations (retry indices 1..retries).
Vote vote_truth(bool truth, std::uint64_t index, const OracleConfig& cfg);
Vote majority_vote(const ChosenQuery& q, const Integer& victim_priv, const DhGroup& group,
                   const OracleConfig& cfg);
// P(Bin(n, p) >= k).
double binomial_tail(std::uint32_t n, double p, std::uint32_t k);

struct VotedQuery {
  ChosenQuery query;
  std::uint32_t votes = 0;
  std::optional<bool> truth;  // known only in simulation
};

class InsufficientSamplesError : public Error {
 public:
  InsufficientSamplesError(const std::string& what, std::size_t shortfall)
      : Error(ErrorKind::InsufficientSamples, what), shortfall(shortfall) {}
  std::size_t shortfall;
};

// Stable sort by votes descending, keep the first `count`.
std::vector<VotedQuery> rank_and_select(std::vector<VotedQuery> accepted, std::size_t count);

struct TranscriptEntry {
  ChosenQuery query;
  std::uint32_t votes = 0;
  bool accepted = false;
};

// One JSON object per line: {index, r_i, point, t_i, votes, accepted}.
std::string transcript_jsonl(const std::vector<TranscriptEntry>& entries);
std::vector<TranscriptEntry> parse_transcript(const std::string& jsonl);

}  // namespace degradekit::dh
