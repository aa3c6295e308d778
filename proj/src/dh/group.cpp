#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "degradekit/dh.hpp"

namespace degradekit::dh {

using nlohmann::json;

void DhGroup::validate() const {
  require(p > 2, ErrorKind::Validation, "group modulus must exceed 2");
  require(g > 1 && g < p, ErrorKind::Validation, "generator must satisfy 1 < g < p");
  if (q != 0) {
    require(q > 1, ErrorKind::Validation, "subgroup order must exceed 1");
    require(Integer(p - 1) % q == 0, ErrorKind::Validation, "q does not divide p - 1");
  }
}

std::string DhGroup::checksum() const {
  const std::string text = to_hex(p) + ":" + to_hex(q) + ":" + to_hex(g);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) == 1,
          ErrorKind::Io, "sha256 unavailable");
  static const char* hexd = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hexd[md[i] >> 4]);
    out.push_back(hexd[md[i] & 15]);
  }
  return out;
}

DhGroup parse_group(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  require(!j.is_discarded() && j.is_object(), ErrorKind::Format, "group fixture is not a JSON object");
  DhGroup g;
  try {
    g.p = from_hex(j.at("p").get<std::string>());
    g.g = from_hex(j.at("g").get<std::string>());
    g.q = j.contains("q") && !j["q"].is_null() ? from_hex(j["q"].get<std::string>()) : Integer(0);
    g.source = j.value("source", "");
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed group fixture: ") + e.what());
  }
  // Integrity first: a tampered constant should read as corruption, not as a bad group.
  if (j.contains("sha256"))
    require(j["sha256"].get<std::string>() == g.checksum(), ErrorKind::Corruption,
            "group fixture checksum mismatch");
  g.validate();
  return g;
}

DhGroup load_group(const std::string& path) {
  std::ifstream f(path);
  require(f.is_open(), ErrorKind::Io, "cannot open group fixture '" + path + "'");
  return parse_group(std::string(std::istreambuf_iterator<char>(f), {}));
}

std::string group_json(const DhGroup& g) {
  json j{{"p", to_hex(g.p)}, {"q", to_hex(g.q)}, {"g", to_hex(g.g)}, {"source", g.source},
         {"sha256", g.checksum()}};
  return j.dump(2);
}

std::string data_dir() {
  if (const char* env = std::getenv("DEGRADEKIT_DATA_DIR"); env && *env) return env;
  return DEGRADEKIT_DATA_DIR;
}
std::string default_group_path() { return data_dir() + "/rfc5114_1024_160.json"; }
std::string safe_prime_256_path() { return data_dir() + "/safe_prime_256.json"; }

DhKeyPair keypair_from(const DhGroup& group, const Integer& priv) {
  return {priv, powm(group.g, priv, group.p)};
}

DhKeyPair keygen(const DhGroup& group, Rng& rng) {
  group.validate();
  const Integer order = group.q != 0 ? group.q : Integer(group.p - 1);
  return keypair_from(group, rng.between(1, order));
}

Integer shared_secret(const Integer& pub_other, const Integer& priv, const Integer& p) {
  require(pub_other > 0 && pub_other < p, ErrorKind::Validation, "public value must lie in (0, p)");
  return powm(pub_other, priv, p);
}

Integer padding_bound(const DhGroup& group) {
  Integer b = 1;
  b <<= static_cast<mp_bitcnt_t>(8 * (group.byte_len() - 1));
  return b;
}

bool needs_padding(const Integer& secret, const DhGroup& group) {
  return byte_length(secret) < group.byte_len();
}

double pad_probability(const DhGroup& group) {
  group.validate();
  mpq_class q(padding_bound(group) - 1, group.p - 1);
  q.canonicalize();
  return q.get_d();
}

}  // namespace degradekit::dh
