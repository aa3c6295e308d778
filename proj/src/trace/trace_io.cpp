#include <cstring>
#include <fstream>
#include <iterator>
#include <ostream>

#include <json.hpp>

#include "degradekit/error.hpp"
#include "degradekit/trace.hpp"

namespace degradekit::trace {

using nlohmann::json;

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = bytes_[pos_] | (bytes_[pos_ + 1] << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n)
      fail(ErrorKind::Corruption, std::string("trace file truncated while reading ") + what);
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

json label_json(const std::optional<int>& l) { return l ? json(*l) : json(nullptr); }

}  // namespace

std::vector<std::uint8_t> encode_traces(const TraceSet& set) {
  set.validate();
  const auto& traces = set.traces();

  bool fixed = !traces.empty();
  bool same_label = true;
  bool same_id = true;
  for (const auto& t : traces) {
    fixed = fixed && t.size() == traces.front().size();
    same_label = same_label && t.meta.class_label == traces.front().meta.class_label;
    same_id = same_id && t.meta.capture_id == traces.front().meta.capture_id;
  }

  json h;
  h["version"] = kFormatVersion;
  h["strategy"] = traces.empty() ? "nodegrade" : to_string(set.strategy());
  h["wait_r"] = traces.empty() ? 1u : set.wait_r();
  h["trace_count"] = traces.size();
  h["samples_per_trace"] = fixed ? traces.front().size() : 0;
  h["class_label"] = (traces.empty() || !same_label) ? json(nullptr)
                                                     : label_json(traces.front().meta.class_label);
  h["capture_id"] = (traces.empty() || !same_id) ? std::string() : traces.front().meta.capture_id;
  // Mixed sets carry per-trace arrays so decoding stays lossless.
  if (!same_label) {
    json labels = json::array();
    for (const auto& t : traces) labels.push_back(label_json(t.meta.class_label));
    h["labels"] = std::move(labels);
  }
  if (!same_id) {
    json ids = json::array();
    for (const auto& t : traces) ids.push_back(t.meta.capture_id);
    h["capture_ids"] = std::move(ids);
  }
  const std::string header = h.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u16(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  for (const auto& t : traces) {
    if (!fixed) put_u32(out, static_cast<std::uint32_t>(t.size()));
    for (Latency l : t.samples) put_u32(out, l);
  }
  return out;
}

TraceSet decode_traces(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  require(std::memcmp(magic.data(), kMagic, 4) == 0, ErrorKind::Format,
          "not a trace file (bad magic)");
  const std::uint16_t version = r.u16("version");
  require(version == kFormatVersion, ErrorKind::Format,
          "unsupported trace file version " + std::to_string(version));
  const std::uint32_t hlen = r.u32("header length");
  auto hbytes = r.take(hlen, "header");
  json h = json::parse(hbytes.begin(), hbytes.end(), nullptr, false);
  require(!h.is_discarded() && h.is_object(), ErrorKind::Format, "trace header is not valid JSON");

  TraceSet set;
  try {
    require(h.at("version").get<int>() == kFormatVersion, ErrorKind::Format,
            "header version disagrees with the file version");
    const auto strategy = parse_strategy(h.at("strategy").get<std::string>());
    const auto wait_r = h.at("wait_r").get<std::uint32_t>();
    const auto count = h.at("trace_count").get<std::size_t>();
    const auto per_trace = h.at("samples_per_trace").get<std::size_t>();
    const json& shared_label = h.at("class_label");
    const auto shared_id = h.at("capture_id").get<std::string>();
    const json* labels = h.contains("labels") ? &h["labels"] : nullptr;
    const json* ids = h.contains("capture_ids") ? &h["capture_ids"] : nullptr;
    require(!labels || labels->size() == count, ErrorKind::Format, "labels array size mismatch");
    require(!ids || ids->size() == count, ErrorKind::Format, "capture_ids array size mismatch");

    for (std::size_t i = 0; i < count; ++i) {
      Trace t;
      t.meta.strategy = strategy;
      t.meta.wait_r = wait_r;
      const json& lj = labels ? (*labels)[i] : shared_label;
      if (!lj.is_null()) t.meta.class_label = lj.get<int>();
      t.meta.capture_id = ids ? (*ids)[i].get<std::string>() : shared_id;
      const std::size_t n = per_trace ? per_trace : r.u32("trace length");
      // Guard against absurd lengths before allocating.
      require(n <= r.remaining() / 4, ErrorKind::Corruption, "trace file truncated in body");
      t.samples.resize(n);
      for (std::size_t j = 0; j < n; ++j) t.samples[j] = r.u32("latency");
      set.add(std::move(t));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed trace header: ") + e.what());
  }
  require(r.remaining() == 0, ErrorKind::Corruption, "trailing bytes after trace body");
  return set;
}

std::size_t write_traces(const TraceSet& set, std::ostream& out) {
  const auto bytes = encode_traces(set);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorKind::Io, "failed writing trace data");
  return bytes.size();
}

TraceSet read_traces(std::istream& in) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  require(!in.bad(), ErrorKind::Io, "failed reading trace data");
  return decode_traces(bytes);
}

void save_traces(const TraceSet& set, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  require(f.is_open(), ErrorKind::Io, "cannot open '" + path + "' for writing");
  write_traces(set, f);
}

TraceSet load_traces(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.is_open(), ErrorKind::Io, "cannot open '" + path + "'");
  return read_traces(f);
}

}  // namespace degradekit::trace
