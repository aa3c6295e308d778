#include <set>

#include "degradekit/dh.hpp"
#include "helpers.hpp"

using namespace degradekit;
using namespace degradekit::dh;

namespace {

DhGroup toy() { return DhGroup{23, 11, 5, "toy"}; }
DhGroup rfc() { return load_group(std::string(TEST_DATA_DIR) + "/rfc5114_1024_160.json"); }
DhGroup two_byte(unsigned p) { return DhGroup{p, 0, 3, "two-byte"}; }

// Exact binomial tail by summing integer binomial coefficients.
double tail_by_sum(unsigned n, double p, unsigned k) {
  double total = 0;
  for (unsigned i = k; i <= n; ++i) {
    double c = 1;
    for (unsigned j = 0; j < i; ++j) c = c * (n - j) / (j + 1);
    double term = c;
    for (unsigned j = 0; j < i; ++j) term *= p;
    for (unsigned j = 0; j < n - i; ++j) term *= 1 - p;
    total += term;
  }
  return total;
}

}  // namespace

TEST_SUITE("dh") {

TEST_CASE("toy keygen by hand") {
  CHECK(keypair_from(toy(), 6).pub == 8);
  CHECK(keypair_from(toy(), 1).pub == toy().g);
  Rng a(42), b(42);
  const auto ka = keygen(toy(), a), kb = keygen(toy(), b);
  CHECK(ka.priv == kb.priv);
  CHECK(ka.pub == kb.pub);
  CHECK(ka.priv >= 1);
  CHECK(ka.priv < 11);
}

TEST_CASE("toy shared secrets by hand") {
  CHECK(shared_secret(19, 6, 23) == 2);
  CHECK(shared_secret(8, 15, 23) == 2);
  CHECK(shared_secret(19, 0, 23) == 1);
  CHECK_KIND(shared_secret(23, 3, 23), ErrorKind::Validation);
  CHECK_KIND(shared_secret(0, 3, 23), ErrorKind::Validation);
}

TEST_CASE("DH symmetry on the shipped group") {
  const auto g = rfc();
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const auto a = keygen(g, rng), b = keygen(g, rng);
    CHECK(shared_secret(b.pub, a.priv, g.p) == shared_secret(a.pub, b.priv, g.p));
  }
}

TEST_CASE("shipped group fixture facts") {
  const auto g = rfc();
  CHECK(bit_length(g.p) == 1024);
  CHECK(bit_length(g.q) == 160);
  CHECK(g.byte_len() == 128);
  CHECK(Integer(g.p >> 1016) == 0xB1);
  CHECK(powm(g.g, g.q, g.p) == 1);
  CHECK(g.source == "RFC5114-1024-160");
  const auto s = load_group(safe_prime_256_path());
  CHECK(bit_length(s.p) == 256);
  CHECK(Integer(s.p >> 248) == 0xFF);
  CHECK(s.q * 2 + 1 == s.p);
}

TEST_CASE("group fixture checksum guards the constants") {
  auto text = group_json(rfc());
  CHECK(parse_group(text).p == rfc().p);
  const auto pos = text.find("\"p\": \"") + 6;
  text[pos] = text[pos] == 'A' ? 'B' : 'A';
  CHECK_KIND(parse_group(text), ErrorKind::Corruption);
  CHECK_KIND(load_group("/nonexistent.json"), ErrorKind::Io);
  CHECK_KIND(parse_group("{\"p\": \"17\", \"g\": \"1\", \"q\": \"0\"}"), ErrorKind::Validation);
}

TEST_CASE("padding predicate on a two-byte prime") {
  const auto g = two_byte(40961);
  CHECK(g.byte_len() == 2);
  CHECK(needs_padding(200, g));
  CHECK_FALSE(needs_padding(g.p - 1, g));
  for (unsigned s = 0; s < 40961; ++s) CHECK_MESSAGE(needs_padding(s, g) == (s < 256), s);
}

TEST_CASE("padding boundary on the 1024-bit prime") {
  const auto g = rfc();
  const Integer b = Integer(1) << 1016;
  CHECK(padding_bound(g) == b);
  CHECK(needs_padding(b - 1, g));
  CHECK_FALSE(needs_padding(b, g));
  CHECK_FALSE(needs_padding(g.p - 1, g));
}

TEST_CASE("pad probability examples") {
  const double pr = pad_probability(rfc());
  CHECK(pr > 1.0 / 178);
  CHECK(pr <= 1.0 / 177);
  CHECK(pr == doctest::Approx(0.00565).epsilon(0.002));
  const unsigned p = 521;  // 512 + 9
  CHECK(pad_probability(two_byte(p)) == doctest::Approx(256.0 / p).epsilon(0.01));
  CHECK(pad_probability(load_group(safe_prime_256_path())) == doctest::Approx(1.0 / 256).epsilon(1e-6));
}

TEST_CASE("pad probability matches sampled secrets") {
  const auto g = rfc();
  Rng rng(2024);
  const int n = 100000;
  int pads = 0;
  for (int i = 0; i < n; ++i) pads += needs_padding(rng.between(1, g.p), g);
  CHECK(within_3sigma(pads, n, pad_probability(g)));
}

TEST_CASE("chosen queries by hand") {
  const auto g = toy();
  const auto q0 = craft_query_with(19, 8, g, 0);
  CHECK(q0.point == 19);
  CHECK(q0.t == 1);
  const auto q2 = craft_query_with(19, 8, g, 2, 5);
  CHECK(q2.point == 15);
  CHECK(q2.t == 18);
  CHECK(q2.index == 5);
  CHECK_KIND(craft_query_with(0, 8, g, 2), ErrorKind::Validation);
}

TEST_CASE("query point raised to the victim key is alpha times t") {
  const auto g = rfc();
  Rng rng(5);
  const auto a = keygen(g, rng), b = keygen(g, rng);
  const Integer alpha = shared_secret(b.pub, a.priv, g.p);
  for (int i = 0; i < 10; ++i) {
    const auto q = craft_query(b.pub, a.pub, g, rng, i);
    CHECK(powm(q.point, a.priv, g.p) == mod_floor(alpha * q.t, g.p));
    CHECK(query_truth(q, a.priv, g) == needs_padding(mod_floor(alpha * q.t, g.p), g));
  }
}

TEST_CASE("oracle extremes") {
  OracleConfig perfect{1, 0, 7, 4, 3};
  OracleConfig blind{0, 0, 7, 4, 3};
  for (std::uint64_t i = 0; i < 1000; ++i) {
    CHECK(observe_truth(true, i, 0, perfect));
    CHECK_FALSE(observe_truth(false, i, 0, perfect));
    CHECK_FALSE(observe_truth(true, i, 0, blind));
  }
}

TEST_CASE("oracle rates match the configuration") {
  OracleConfig cfg{0.9, 0.01, 7, 4, 77};
  const int n = 100000;
  int tp = 0, fp = 0;
  for (int i = 0; i < n; ++i) {
    tp += observe_truth(true, i, 0, cfg);
    fp += observe_truth(false, i, 0, cfg);
  }
  CHECK(within_3sigma(tp, n, 0.9));
  CHECK(within_3sigma(fp, n, 0.01));
}

TEST_CASE("oracle observations are pure in (seed, index, retry)") {
  OracleConfig cfg{0.5, 0.5, 7, 4, 9};
  for (std::uint64_t i = 0; i < 100; ++i)
    for (std::uint32_t r = 0; r < 8; ++r) CHECK(observe_truth(true, i, r, cfg) == observe_truth(true, i, r, cfg));
  OracleConfig other = cfg;
  other.seed = 10;
  int differ = 0;
  for (std::uint64_t i = 0; i < 200; ++i) differ += observe_truth(true, i, 0, cfg) != observe_truth(true, i, 0, other);
  CHECK(differ > 50);
}

TEST_CASE("majority vote extremes") {
  OracleConfig cfg{1, 0, 7, 4, 1};
  const auto yes = vote_truth(true, 3, cfg);
  CHECK(yes.votes == 7);
  CHECK(yes.accepted);
  const auto no = vote_truth(false, 3, cfg);
  CHECK(no.votes == 0);
  CHECK_FALSE(no.accepted);
}

TEST_CASE("voting false-accept rate is the binomial tail") {
  OracleConfig cfg{1, 0.05, 7, 4, 123};
  const double tail = binomial_tail(7, 0.05, 4);
  CHECK(tail == doctest::Approx(tail_by_sum(7, 0.05, 4)).epsilon(1e-12));
  CHECK(tail == doctest::Approx(1.9e-4).epsilon(0.05));
  const int n = 100000;
  int accepted = 0;
  for (int i = 0; i < n; ++i) accepted += vote_truth(false, i, cfg).accepted;
  CHECK(within_3sigma(accepted, n, tail));
}

TEST_CASE("votes use fresh observations only") {
  // With tp=1 and fp=0 the initial observation cannot leak into the vote count.
  OracleConfig cfg{0.5, 0, 7, 4, 5};
  for (std::uint64_t i = 0; i < 200; ++i) {
    std::uint32_t expect = 0;
    for (std::uint32_t r = 1; r <= 7; ++r) expect += observe_truth(true, i, r, cfg);
    CHECK(vote_truth(true, i, cfg).votes == expect);
  }
}

TEST_CASE("rank and select") {
  auto vq = [](std::uint64_t idx, std::uint32_t votes, bool truth = true) {
    VotedQuery v;
    v.query.index = idx;
    v.votes = votes;
    v.truth = truth;
    return v;
  };
  auto sel = rank_and_select({vq(0, 7), vq(1, 4), vq(2, 6)}, 2);
  REQUIRE(sel.size() == 2);
  CHECK(sel[0].query.index == 0);
  CHECK(sel[1].query.index == 2);

  auto ties = rank_and_select({vq(0, 5), vq(1, 6), vq(2, 5), vq(3, 5)}, 3);
  CHECK(ties[0].query.index == 1);
  CHECK(ties[1].query.index == 0);
  CHECK(ties[2].query.index == 2);

  try {
    rank_and_select({vq(0, 5)}, 3);
    FAIL("expected a shortfall");
  } catch (const InsufficientSamplesError& e) {
    CHECK(e.shortfall == 2);
    CHECK(e.kind() == ErrorKind::InsufficientSamples);
  }
}

TEST_CASE("full-scale replay: low-vote false positives fall below the cut") {
  std::vector<VotedQuery> acc;
  Rng rng(1);
  std::uint64_t idx = 0;
  std::size_t fp_left = 47, tp_left = 192;
  while (fp_left + tp_left > 0) {
    const bool fp = fp_left > 0 && (tp_left == 0 || rng.next_u64() % 5 == 0);
    VotedQuery v;
    v.query.index = idx++;
    v.truth = !fp;
    v.votes = fp ? 4 : 5 + static_cast<std::uint32_t>(rng.next_u64() % 3);
    (fp ? fp_left : tp_left)--;
    acc.push_back(v);
  }
  REQUIRE(acc.size() == 239);
  const auto sel = rank_and_select(acc, 173);
  std::size_t fps = 0;
  for (const auto& v : sel) fps += !*v.truth;
  CHECK(fps == 0);
}

TEST_CASE("transcript lines round-trip") {
  const auto g = toy();
  std::vector<TranscriptEntry> es{{craft_query_with(19, 8, g, 2, 0), 5, true},
                                  {craft_query_with(19, 8, g, 3, 1), 0, false}};
  const auto text = transcript_jsonl(es);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  for (const char* key : {"\"index\"", "\"r_i\"", "\"point\"", "\"t_i\"", "\"votes\"", "\"accepted\""})
    CHECK(text.find(key) != std::string::npos);
  const auto back = parse_transcript(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].query.point == es[0].query.point);
  CHECK(back[1].query.t == es[1].query.t);
  CHECK(back[0].votes == 5);
  CHECK_FALSE(back[1].accepted);
  CHECK_KIND(parse_transcript("{not json}\n"), ErrorKind::Format);
}

TEST_CASE("identical seeds give identical query streams") {
  const auto g = rfc();
  Rng a(77), b(77);
  const auto ka = keygen(g, a), kb = keygen(g, b);
  for (int i = 0; i < 5; ++i) {
    const auto qa = craft_query(ka.pub, ka.pub, g, a, i), qb = craft_query(kb.pub, kb.pub, g, b, i);
    CHECK(qa.r == qb.r);
    CHECK(qa.point == qb.point);
  }
}

TEST_CASE("oracle configuration validation") {
  CHECK_KIND((OracleConfig{1.5, 0, 7, 4, 0}).validate(), ErrorKind::Validation);
  CHECK_KIND((OracleConfig{1, 0, 7, 8, 0}).validate(), ErrorKind::Validation);
  CHECK_KIND((OracleConfig{1, 0, 0, 0, 0}).validate(), ErrorKind::Validation);
}

}  // TEST_SUITE
