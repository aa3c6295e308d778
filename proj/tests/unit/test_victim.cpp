#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "degradekit/victim.hpp"
#include "helpers.hpp"

using namespace degradekit;
using namespace degradekit::victim;
namespace fs = std::filesystem;

namespace {

fs::path work_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("dk-victim-" + std::to_string(::getpid())) / name;
  fs::create_directories(d);
  return d;
}

std::vector<std::uint8_t> file_bytes(const std::string& path, std::uint64_t off, std::size_t n) {
  std::ifstream f(path, std::ios::binary);
  f.seekg(static_cast<std::streamoff>(off));
  std::vector<std::uint8_t> out(n);
  f.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n));
  return out;
}

// Instruction lines of one `.rept 64` body with the inner `.rept N` expanded.
std::size_t instructions_per_line(const std::string& src) {
  std::istringstream in(src);
  std::string line;
  bool in_outer = false;
  std::size_t count = 0, inner = 0, repeat = 1;
  while (std::getline(in, line)) {
    if (line == ".rept 64") {
      in_outer = true;
      continue;
    }
    if (!in_outer) continue;
    if (line == ".endr") break;
    if (line.rfind("\t.rept ", 0) == 0) {
      repeat = std::stoul(line.substr(7));
      inner = 0;
      continue;
    }
    if (line == "\t.endr") {
      count += inner * repeat;
      repeat = 1;
      inner = 0;
      continue;
    }
    if (line.rfind("\t.", 0) == 0) continue;  // directive
    (repeat > 1 ? inner : count) += 1;
  }
  return count;
}

}  // namespace

TEST_SUITE("victim") {

TEST_CASE("single-line loop retires 16 instructions per iteration in its hot line") {
  CHECK(instructions_per_line(single_line_loop_source()) == kInstructionsPerIteration);
  CHECK((std::uint64_t{1} << 16) * kInstructionsPerIteration == 1048576);

  auto v = build_victim(VictimSpec::single_line(1u << 16, 5), work_dir("loop"));
  const auto hot = v.hot_line();
  CHECK(hot.offset % 64 == 0);
  CHECK_NOTHROW(hot.validate());
  // The hot line holds exactly the 16 instructions and nothing else.
  const auto bytes = file_bytes(v.so_path(), hot.offset, 64);
  const std::uint8_t add1[] = {0x48, 0x83, 0xc6, 0x01}, sub1[] = {0x48, 0x83, 0xee, 0x01};
  for (int i = 0; i < 6; ++i) {
    CHECK(std::equal(add1, add1 + 4, bytes.begin() + 8 * i));
    CHECK(std::equal(sub1, sub1 + 4, bytes.begin() + 8 * i + 4));
  }
  CHECK(bytes[55] == 0x02);                    // sub $2, %rsi
  CHECK((bytes[56] == 0x0f && bytes[57] == 0x84));  // jz rel32
  CHECK((bytes[62] == 0xff && bytes[63] == 0xe7));  // jmp *%rdi
  v.run();
}

TEST_CASE("every loop line index runs to completion") {
  for (std::uint32_t line : {0u, 31u, 63u}) {
    auto v = build_victim(VictimSpec::single_line(1000, line), work_dir("line" + std::to_string(line)));
    CHECK_NOTHROW(v.run());
    CHECK(v.hot_line().offset - v.symbol_offset(kLoopBase) == 64ull * line);
  }
}

TEST_CASE("victim pair entries sit 0x200 apart with identical bodies") {
  auto v = build_victim(VictimSpec::pair(), work_dir("pair"));
  const auto a = v.symbol_offset(kPairEntry0), b = v.symbol_offset(kPairEntry1);
  CHECK(b - a == 0x200);
  CHECK(b - a == kPairSeparation);
  const auto fa = file_bytes(v.so_path(), a, 200), fb = file_bytes(v.so_path(), b, 200);
  CHECK(fa == fb);
  CHECK(v.middle_line(0).offset == a + 128);
  CHECK(v.middle_line(1).offset == b + 128);
  CHECK_NOTHROW(v.run_sequence(0));
  CHECK_NOTHROW(v.run_sequence(1));
  CHECK(victim_pair_source(2048).find("mov $2048, %r10") != std::string::npos);
}

TEST_CASE("VictimSpec validation") {
  CHECK_KIND(VictimSpec::single_line(0).validate(), ErrorKind::Validation);
  CHECK_KIND(build_victim(VictimSpec::single_line(0), work_dir("zero")), ErrorKind::Validation);
  CHECK_KIND(VictimSpec::single_line(10, 64).validate(), ErrorKind::Validation);
  CHECK_KIND(VictimSpec::pair(0).validate(), ErrorKind::Validation);
  CHECK_KIND(VictimSpec::external("", "x").validate(), ErrorKind::Validation);
}

TEST_CASE("ELF offsets map symbols through the load segments") {
  auto v = build_victim(VictimSpec::single_line(10), work_dir("elf"));
  const auto syms = elf_symbols(v.so_path());
  REQUIRE(syms.count(kLoopEntry));
  CHECK(symbol_file_offset(v.so_path(), kLoopEntry) == vaddr_to_file_offset(v.so_path(), syms.at(kLoopEntry)));
  CHECK_KIND(symbol_file_offset(v.so_path(), "no_such_symbol"), ErrorKind::Validation);
}

TEST_CASE("dummy degrade follows the same message sequence") {
  auto v = build_victim(VictimSpec::single_line(1u << 12), work_dir("sync"));
  const std::vector<std::string> expected{"C:enable", "A:ack", "V:ack", "C:disable"};
  const auto dummy = sync_protocol([&] { v.run(); }, {});
  CHECK(dummy.messages() == expected);
  const auto busy = sync_protocol([&] { v.run(); }, [](const probe::StopFlag& s) {
    while (!s.signalled()) {
    }
  });
  CHECK(busy.messages() == expected);
}

TEST_CASE("event log brackets the victim loop") {
  auto v = build_victim(VictimSpec::single_line(1u << 14), work_dir("events"));
  const auto r = sync_protocol([&] { v.run(); }, {});
  // Four protocol messages plus the degrade and victim loop observation points.
  REQUIRE(r.events.size() == 7);
  CHECK(r.messages().size() == 4);
  const auto& enable = r.events.front();
  const auto& disable = r.events.back();
  CHECK(enable.message == "C:enable");
  CHECK(disable.message == "C:disable");
  CHECK(enable.tsc <= r.loop_start_tsc);
  CHECK(r.loop_start_tsc < r.loop_end_tsc);
  CHECK(r.loop_end_tsc <= disable.tsc);
  CHECK(r.cycles == r.loop_end_tsc - r.loop_start_tsc);
  for (std::size_t i = 1; i < r.events.size(); ++i) CHECK(r.events[i - 1].tsc <= r.events[i].tsc);
}

TEST_CASE("victim crash is an orchestration error and the FIFOs are removed") {
  auto v = Victim(VictimSpec::external(CRASH_VICTIM_PATH, "crash_entry"), CRASH_VICTIM_PATH);
  SyncConfig cfg;
  cfg.fifo_dir = work_dir("crash");
  cfg.ack_timeout = std::chrono::milliseconds(3000);
  CHECK_KIND(sync_protocol([&] { v.run(); }, {}, cfg), ErrorKind::Orchestration);
  for (const char* f : {"C", "A", "V"}) CHECK_FALSE(fs::exists(cfg.fifo_dir / f));
}

TEST_CASE("degrade child crash is an orchestration error") {
  auto v = build_victim(VictimSpec::single_line(1u << 20), work_dir("dcrash"));
  CHECK_KIND(sync_protocol([&] { v.run(); }, [](const probe::StopFlag&) { std::abort(); }),
             ErrorKind::Orchestration);
}

TEST_CASE("one repetition has zero spread") {
  auto v = build_victim(VictimSpec::single_line(1u << 12), work_dir("reps"));
  const auto s = run_benchmark(v, DegradeStrategy::NoDegrade, v.hot_line(), 1);
  CHECK(s.cycles.size() == 1);
  CHECK(s.rsd == 0);
  CHECK(s.mean > 0);
  CHECK(s.backend == "tsc");
  CHECK_KIND(run_benchmark(v, DegradeStrategy::NoDegrade, v.hot_line(), 0), ErrorKind::Validation);
}

TEST_CASE("cycle statistics from identical inputs") {
  const auto s = CycleStats::from_runs({500, 500, 500, 500});
  CHECK(s.mean == 500);
  CHECK(s.rsd == 0);
  CHECK_FALSE(s.unstable);
  const auto u = CycleStats::from_runs({100, 200});
  CHECK(u.unstable);
  CHECK(u.rsd == doctest::Approx(std::sqrt(5000.0) / 150));
}

TEST_CASE("profiling one candidate returns it unconditionally") {
  auto v = build_victim(VictimSpec::single_line(10), work_dir("profile"));
  const auto r = profile_cachelines(v, {v.hot_line()}, DegradeStrategy::HyperDegrade);
  REQUIRE(r.size() == 1);
  CHECK(r[0].target.offset == v.hot_line().offset);
}

TEST_CASE("slowdown factors") {
  CHECK(slowdown_factor(504395314, 1252211) == doctest::Approx(402.8).epsilon(0.1 / 402.8));
  CHECK(std::fabs(slowdown_factor(504395314, 1252211, false) - 402.8) <= 0.1);
  CHECK(std::fabs(slowdown_factor(504395314, 1252211, true, 12935389) - 43.06) <= 0.05);
  CHECK(slowdown_factor(77, 77) == 1);
  CHECK_KIND(slowdown_factor(1, 0), ErrorKind::Domain);
  CHECK_KIND(slowdown_factor(1, 2, true), ErrorKind::Validation);
  CHECK_KIND(slowdown_factor(1, 2, true, 2.0), ErrorKind::Domain);
}

TEST_CASE("slowdown factors multiply") {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(1, 1e9);
  for (int i = 0; i < 200; ++i) {
    double a = u(g), b = u(g), c = u(g);
    const double lhs = slowdown_factor(a, b) * slowdown_factor(b, c);
    CHECK(std::fabs(lhs - slowdown_factor(a, c)) <= 1e-9 * std::max(1.0, std::fabs(lhs)));
  }
}

TEST_CASE("aggregate statistics by hand") {
  const auto one = aggregate_stats({10});
  CHECK(one.median == 10);
  CHECK(one.min == 10);
  CHECK(one.max == 10);
  CHECK(one.mean == 10);
  CHECK(one.stdev == 0);
  const auto four = aggregate_stats({1, 2, 3, 4});
  CHECK(four.median == 2.5);
  CHECK(four.mean == 2.5);
  CHECK(four.stdev == doctest::Approx(1.29).epsilon(0.01));
  CHECK(four.stdev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK_KIND(aggregate_stats({}), ErrorKind::Validation);
}

TEST_CASE("aggregates do not depend on row order") {
  std::vector<double> rows{3.5, 1, 9, 2.25, 7, 7, 0.5};
  const auto a = aggregate_stats(rows);
  std::mt19937_64 g(9);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(rows.begin(), rows.end(), g);
    const auto b = aggregate_stats(rows);
    CHECK(a.median == b.median);
    CHECK(a.min == b.min);
    CHECK(a.max == b.max);
    CHECK(a.mean == doctest::Approx(b.mean));
    CHECK(a.stdev == doctest::Approx(b.stdev));
  }
}

TEST_CASE("Skylake Degrade column of the ratio fixture") {
  const auto fx = load_ratio_fixture(std::string(TEST_DATA_DIR) + "/beebs_slowdown.csv");
  const auto it = fx.find({"Skylake", DegradeStrategy::Degrade});
  REQUIRE(it != fx.end());
  const auto a = aggregate_stats(it->second);
  CHECK(std::fabs(a.median - 11.1) <= 0.1);
  CHECK(std::fabs(a.min - 1.4) <= 0.1);
  CHECK(std::fabs(a.max - 33.1) <= 0.1);
  CHECK(std::fabs(a.mean - 13.1) <= 0.1);
  CHECK(std::fabs(a.stdev - 8.0) <= 0.1);
}

TEST_CASE("slowdown report CSV") {
  auto rep = SlowdownReport::from_rows({{"loop", DegradeStrategy::NoDegrade, 100, 0.01, 0},
                                        {"loop", DegradeStrategy::HyperDegrade, 25000, 0.02, 0}});
  CHECK(rep.rows[1].ratio == 250);
  const auto csv = rep.csv();
  CHECK(csv.rfind("benchmark,strategy,cycles_mean,cycles_rsd,ratio\n", 0) == 0);
  CHECK(csv.find("loop,hyperdegrade,") != std::string::npos);
  CHECK_KIND(SlowdownReport::from_rows({{"x", DegradeStrategy::Degrade, 1, 0, 0}}), ErrorKind::Validation);
}

TEST_CASE("hardware ordering on the single-line victim") {
  const auto caps = probe::detect_capabilities();
  if (!(caps.smt && caps.clflush && caps.invariant_tsc && caps.physical_cores >= 2)) {
    MESSAGE("skipped: needs SMT, clflush, invariant TSC and two physical cores");
    return;
  }
  auto v = build_victim(VictimSpec::single_line(1u << 16), work_dir("hw"));
  const auto none = run_benchmark(v, DegradeStrategy::NoDegrade, v.hot_line(), 5);
  const auto deg = run_benchmark(v, DegradeStrategy::Degrade, v.hot_line(), 5);
  const auto hyper = run_benchmark(v, DegradeStrategy::HyperDegrade, v.hot_line(), 5);
  CHECK(none.mean < deg.mean);
  CHECK(deg.mean < hyper.mean);
}

}  // TEST_SUITE
