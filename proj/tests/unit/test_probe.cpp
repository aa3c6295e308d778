#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "degradekit/probe.hpp"
#include "helpers.hpp"

using namespace degradekit;
using namespace degradekit::probe;
namespace fs = std::filesystem;

namespace {

std::string scratch_file(std::size_t bytes) {
  const auto path = fs::temp_directory_path() / ("dk-probe-" + std::to_string(::getpid()) + ".bin");
  std::ofstream f(path, std::ios::binary);
  std::vector<char> buf(bytes, 'x');
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  return path.string();
}

bool has_flush_tsc() {
  const auto c = detect_capabilities();
  return c.x86_64 && c.clflush && c.invariant_tsc;
}

CpuTopology four_way() { return CpuTopology::from_map({{0, 0}, {1, 1}, {2, 0}, {3, 1}}); }

}  // namespace

TEST_SUITE("probe") {

TEST_CASE("synthetic map yields the sibling pairs") {
  const auto t = four_way();
  CHECK(t.sibling_pairs() == std::vector<std::pair<int, int>>{{0, 2}, {1, 3}});
  CHECK(t.smt());
  CHECK(t.are_siblings(0, 2));
  CHECK_FALSE(t.are_siblings(0, 1));
  CHECK_FALSE(t.are_siblings(0, 0));
  CHECK(t.siblings_of(3) == std::vector<int>{1});
  CHECK(t.physical_count() == 2);
}

TEST_CASE("unique physical ids mean no SMT") {
  const auto t = CpuTopology::from_map({{0, 0}, {1, 1}, {2, 2}});
  CHECK(t.sibling_pairs().empty());
  CHECK_FALSE(t.smt());
}

TEST_CASE("duplicate logical ids are rejected") {
  CHECK_KIND(CpuTopology::from_map({{0, 0}, {0, 1}}), ErrorKind::Validation);
}

TEST_CASE("host topology agrees with the OS sibling lists") {
  const auto topo = discover_topology();
  const auto lists = os_sibling_lists();
  std::set<std::pair<int, int>> from_lists;
  for (const auto& g : lists)
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = i + 1; j < g.size(); ++j) from_lists.insert({g[i], g[j]});
  const std::set<std::pair<int, int>> from_ids(topo.sibling_pairs().begin(), topo.sibling_pairs().end());
  CHECK(from_ids == from_lists);
}

TEST_CASE("topology read from a fake sysfs tree") {
  const auto root = fs::temp_directory_path() / ("dk-sysfs-" + std::to_string(::getpid()));
  const std::pair<int, int> map[] = {{0, 0}, {1, 1}, {2, 0}, {3, 1}};
  for (auto [cpu, core] : map) {
    const auto dir = root / ("cpu" + std::to_string(cpu)) / "topology";
    fs::create_directories(dir);
    std::ofstream(dir / "core_id") << core << "\n";
    std::ofstream(dir / "physical_package_id") << 0 << "\n";
    std::ofstream(dir / "thread_siblings_list") << (core == 0 ? "0,2" : "1,3") << "\n";
  }
  fs::create_directories(root / "cpufreq");  // not a cpu directory
  const auto t = discover_topology(root.string());
  CHECK(t.sibling_pairs() == std::vector<std::pair<int, int>>{{0, 2}, {1, 3}});
  CHECK(os_sibling_lists(root.string()) == std::vector<std::vector<int>>{{0, 2}, {1, 3}});
  fs::remove_all(root);
  CHECK_KIND(discover_topology(root.string()), ErrorKind::Capability);
}

TEST_CASE("cpu lists parse ranges") {
  CHECK(parse_cpu_list("0-2,5") == std::vector<int>{0, 1, 2, 5});
  CHECK(parse_cpu_list("3") == std::vector<int>{3});
}

TEST_CASE("placement rules per strategy") {
  const auto t = four_way();
  CHECK_KIND(Placement::make(DegradeStrategy::HyperDegrade, t, 1, 1, 0), ErrorKind::Validation);
  CHECK_NOTHROW(Placement::make(DegradeStrategy::HyperDegrade, t, 1, 2, 0));
  CHECK_KIND(Placement::make(DegradeStrategy::Degrade, t, 1, 2, 0), ErrorKind::Validation);
  CHECK_NOTHROW(Placement::make(DegradeStrategy::Degrade, t, 3, 1, 0));
  CHECK_KIND(Placement::make(DegradeStrategy::Contention, t, 1, 3, 0), ErrorKind::Validation);
  CHECK_KIND(Placement::make(DegradeStrategy::SmcDegrade, t, 1, 0, 0), ErrorKind::Validation);
  // Spy sharing the victim's physical core is rejected for degrading strategies.
  CHECK_KIND(Placement::make(DegradeStrategy::HyperDegrade, t, 0, 2, 0), ErrorKind::Validation);
  CHECK_KIND(Placement::make(DegradeStrategy::NoDegrade, t, 0, 9, 0), ErrorKind::Validation);
  CHECK_NOTHROW(Placement::make(DegradeStrategy::HyperDegrade, t, -1, 2, 0));
}

TEST_CASE("placement choice honours the rules or reports a capability error") {
  const auto t = four_way();
  const auto p = Placement::choose(DegradeStrategy::HyperDegrade, t);
  CHECK(t.are_siblings(p.degrade_core, p.victim_core));
  const auto d = Placement::choose(DegradeStrategy::Degrade, t);
  CHECK(*t.physical_of(d.degrade_core) != *t.physical_of(d.victim_core));
  const auto single = CpuTopology::from_map({{0, 0}});
  CHECK_KIND(Placement::choose(DegradeStrategy::Degrade, single), ErrorKind::Capability);
  CHECK_KIND(Placement::choose(DegradeStrategy::HyperDegrade, single), ErrorKind::Capability);
  CHECK_NOTHROW(Placement::choose(DegradeStrategy::NoDegrade, single));
}

TEST_CASE("cache line targets validate alignment and bounds") {
  const auto path = scratch_file(8192);
  CHECK(CacheLineTarget::parse(path + ":0x40").offset == 64);
  CHECK(CacheLineTarget::parse(path + ":128").offset == 128);
  CHECK_NOTHROW(CacheLineTarget::parse(path + ":0x40").validate());
  CHECK_KIND(CacheLineTarget::parse(path + ":0x41").validate(), ErrorKind::Validation);
  CHECK_KIND(CacheLineTarget::parse(path + ":8192").validate(), ErrorKind::Validation);
  CHECK_KIND(CacheLineTarget::parse("/nonexistent/file:0").validate(), ErrorKind::Validation);
  CHECK_KIND(CacheLineTarget::parse("no-offset"), ErrorKind::Validation);
  CHECK_KIND(CacheLineTarget::parse(path + ":12zz"), ErrorKind::Validation);
  CHECK(CacheLineTarget::parse(path + ":0x1000").str() == path + ":0x1000");
  fs::remove(path);
}

TEST_CASE("capture of zero samples is a validation error") {
  const auto path = scratch_file(4096);
  CHECK_KIND(flush_reload_capture({path, 0}, 16, 0, DegradeStrategy::NoDegrade), ErrorKind::Validation);
  fs::remove(path);
}

TEST_CASE("capture length equals the requested sample count") {
  if (!has_flush_tsc()) return;
  const auto path = scratch_file(4096);
  for (std::size_t n : {1u, 17u, 1000u}) {
    auto tr = flush_reload_capture({path, 64}, 32, n, DegradeStrategy::Degrade, 1, "x");
    CHECK(tr.size() == n);
    CHECK(tr.meta.wait_r == 32);
    CHECK(tr.meta.strategy == DegradeStrategy::Degrade);
    CHECK_NOTHROW(tr.validate());
  }
  fs::remove(path);
}

TEST_CASE("synthetic calibration picks the midpoint") {
  std::vector<trace::Latency> hits(1000, 60), misses(1000, 280);
  hits[3] = 75;
  misses[9] = 400;
  const auto c = suggest_threshold(Histogram::from_samples(hits), Histogram::from_samples(misses));
  CHECK(c.hit_peak == 60);
  CHECK(c.miss_peak == 280);
  CHECK(c.suggested_t == 170);
  CHECK(separation_rate(c, hits, misses) == 1.0);
}

TEST_CASE("identical histograms are ambiguous") {
  std::vector<trace::Latency> s(100, 120);
  bool caught = false;
  try {
    suggest_threshold(Histogram::from_samples(s), Histogram::from_samples(s));
  } catch (const CalibrationAmbiguous& e) {
    caught = true;
    CHECK(e.kind() == ErrorKind::CalibrationAmbiguous);
    CHECK(e.hits.total() == 100);
  }
  CHECK(caught);
}

TEST_CASE("histograms clip at the last bucket") {
  const trace::Latency s[] = {5, 5, 9000};
  const auto h = Histogram::from_samples(s, 16);
  CHECK(h.counts[15] == 1);
  CHECK(h.mode() == 5);
  CHECK(h.total() == 3);
}

TEST_CASE("on-host calibration separates forced hits from forced misses") {
  if (!has_flush_tsc()) return;
  const auto path = scratch_file(4096);
  const CacheLineTarget target{path, 0};
  Calibration c;
  try {
    c = calibrate_threshold(target, 20000);
  } catch (const CalibrationAmbiguous&) {
    FAIL("calibration found no hit/miss gap on this host");
    return;
  }
  MappedLine line(target);
  std::vector<trace::Latency> hits, misses;
  for (int i = 0; i < 20000; ++i) {
    (void)*line.line();
    hits.push_back(timed_reload(line.line()));
    flush_line(line.line());
    misses.push_back(timed_reload(line.line()));
  }
  CHECK(c.hit_peak < c.miss_peak);
  CHECK(separation_rate(c, hits, misses) >= 0.99);
  fs::remove(path);
}

TEST_CASE("degrade loop returns at once when stop is already set") {
  if (!detect_capabilities().clflush) return;
  const auto path = scratch_file(4096);
  StopFlag stop;
  stop.signal();
  CHECK(degrade_loop(CacheLineTarget{path, 0}, stop) == 0);
  fs::remove(path);
}

TEST_CASE("degrade loop stops after the signal") {
  if (!detect_capabilities().clflush) return;
  const auto path = scratch_file(4096);
  for (const DegradeLoopConfig cfg : {DegradeLoopConfig{.pause_iterations = 4},
                                     DegradeLoopConfig{.pause_iterations = 0, .fence = true}}) {
    StopFlag stop;
    std::uint64_t flushes = 0;
    std::thread th([&] { flushes = degrade_loop(CacheLineTarget{path, 0}, stop, cfg); });
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    stop.signal();
    th.join();
    CHECK(flushes > 0);
  }
  fs::remove(path);
}

TEST_CASE("SMC loop code shape") {
  const auto code = smc_loop_code();
  CHECK(code.size() == 24);
  CHECK(code[12] == 0x40);  // the byte it stores over
  CHECK(code.back() == 0xc3);
}

TEST_CASE("SMC loop executes no stores when stop is pre-signalled") {
  if (!detect_capabilities().writable_exec) return;
  StopFlag stop;
  stop.signal();
  CHECK(smc_degrade_loop(stop) == 0);
}

TEST_CASE("SMC loop counts stores until stopped") {
  if (!detect_capabilities().writable_exec) return;
  StopFlag stop;
  std::uint64_t stores = 0;
  std::thread th([&] { stores = smc_degrade_loop(stop); });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  stop.signal();
  th.join();
  CHECK(stores > 0);
}

TEST_CASE("target ranking is stable and descending") {
  const std::vector<CacheLineTarget> c{{"a", 0}, {"b", 64}, {"a", 0}, {"c", 128}};
  const std::map<std::string, double> cycles{{"a", 5}, {"b", 9}, {"c", 5}};
  const auto ranked = rank_targets(c, [&](const CacheLineTarget& t) { return cycles.at(t.path); });
  REQUIRE(ranked.size() == 4);
  CHECK(ranked[0].target.path == "b");
  CHECK(ranked[1].target.path == "a");
  CHECK(ranked[2].target.path == "a");
  CHECK(ranked[3].target.path == "c");
  CHECK(ranked[1].cycles == ranked[2].cycles);
}

TEST_CASE("capability errors list what is missing") {
  Capabilities none;
  const auto k = thrown_kind([&] { require_capabilities(none, {.flush = true, .smt = true}, "op"); });
  CHECK(k == ErrorKind::Capability);
  try {
    require_capabilities(none, {.flush = true, .smt = true}, "op");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("clflush") != std::string::npos);
    CHECK(msg.find("SMT") != std::string::npos);
  }
}

}  // TEST_SUITE
