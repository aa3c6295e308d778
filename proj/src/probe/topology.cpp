#include <sched.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "degradekit/probe.hpp"

namespace degradekit::probe {

namespace fs = std::filesystem;

CpuTopology CpuTopology::from_map(std::vector<LogicalCore> cores) {
  std::sort(cores.begin(), cores.end(),
            [](const LogicalCore& a, const LogicalCore& b) { return a.logical_id < b.logical_id; });
  for (std::size_t i = 1; i < cores.size(); ++i)
    require(cores[i].logical_id != cores[i - 1].logical_id, ErrorKind::Validation,
            "duplicate logical core id " + std::to_string(cores[i].logical_id));
  CpuTopology t;
  t.cores_ = std::move(cores);
  for (std::size_t i = 0; i < t.cores_.size(); ++i)
    for (std::size_t j = i + 1; j < t.cores_.size(); ++j)
      if (t.cores_[i].physical_id == t.cores_[j].physical_id)
        t.siblings_.emplace_back(t.cores_[i].logical_id, t.cores_[j].logical_id);
  return t;
}

std::optional<int> CpuTopology::physical_of(int logical) const {
  for (const auto& c : cores_)
    if (c.logical_id == logical) return c.physical_id;
  return std::nullopt;
}

bool CpuTopology::are_siblings(int a, int b) const {
  if (a == b) return false;
  auto pa = physical_of(a), pb = physical_of(b);
  return pa && pb && *pa == *pb;
}

std::vector<int> CpuTopology::siblings_of(int logical) const {
  std::vector<int> out;
  for (const auto& c : cores_)
    if (are_siblings(logical, c.logical_id)) out.push_back(c.logical_id);
  return out;
}

int CpuTopology::physical_count() const {
  std::set<int> s;
  for (const auto& c : cores_) s.insert(c.physical_id);
  return static_cast<int>(s.size());
}

namespace {

std::optional<long> read_long(const fs::path& p) {
  std::ifstream f(p);
  long v = 0;
  if (f >> v) return v;
  return std::nullopt;
}

std::vector<std::pair<int, fs::path>> cpu_dirs(const std::string& root) {
  std::vector<std::pair<int, fs::path>> out;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(root, ec)) {
    const std::string name = e.path().filename().string();
    if (name.size() < 4 || name.rfind("cpu", 0) != 0) continue;
    const std::string num = name.substr(3);
    if (!std::all_of(num.begin(), num.end(), ::isdigit)) continue;
    out.emplace_back(std::stoi(num), e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

CpuTopology discover_topology(const std::string& sysfs_root) {
  std::vector<LogicalCore> cores;
  std::map<std::pair<long, long>, int> physical_ids;
  for (const auto& [id, dir] : cpu_dirs(sysfs_root)) {
    auto core = read_long(dir / "topology" / "core_id");
    auto pkg = read_long(dir / "topology" / "physical_package_id");
    if (!core) continue;  // offline cpus expose no topology
    auto key = std::make_pair(pkg.value_or(0), *core);
    auto it = physical_ids.try_emplace(key, static_cast<int>(physical_ids.size())).first;
    cores.push_back({id, it->second});
  }
  require(!cores.empty(), ErrorKind::Capability,
          "CPU topology unavailable under " + sysfs_root);
  return CpuTopology::from_map(std::move(cores));
}

std::vector<int> parse_cpu_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part.erase(std::remove_if(part.begin(), part.end(), ::isspace), part.end());
    if (part.empty()) continue;
    auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(std::stoi(part));
    } else {
      int lo = std::stoi(part.substr(0, dash)), hi = std::stoi(part.substr(dash + 1));
      for (int i = lo; i <= hi; ++i) out.push_back(i);
    }
  }
  return out;
}

std::vector<std::vector<int>> os_sibling_lists(const std::string& sysfs_root) {
  std::set<std::vector<int>> groups;
  for (const auto& [id, dir] : cpu_dirs(sysfs_root)) {
    std::ifstream f(dir / "topology" / "thread_siblings_list");
    std::string line;
    if (!std::getline(f, line)) continue;
    auto g = parse_cpu_list(line);
    std::sort(g.begin(), g.end());
    groups.insert(g);
  }
  return {groups.begin(), groups.end()};
}

namespace {
void check_core(const CpuTopology& topo, int core, const char* role) {
  require(topo.physical_of(core).has_value(), ErrorKind::Validation,
          std::string(role) + " core " + std::to_string(core) + " is not in the topology");
}
}  // namespace

Placement Placement::make(DegradeStrategy strategy, const CpuTopology& topo, int spy, int degrade,
                          int victim) {
  check_core(topo, victim, "victim");
  check_core(topo, degrade, "degrade");
  if (spy >= 0) {
    check_core(topo, spy, "spy");
  }
  const bool same_physical = *topo.physical_of(degrade) == *topo.physical_of(victim);
  switch (strategy) {
    case DegradeStrategy::Degrade:
      require(!same_physical, ErrorKind::Validation,
              "Degrade placement requires the degrade core on a different physical core than the victim");
      break;
    case DegradeStrategy::HyperDegrade:
    case DegradeStrategy::Contention:
      require(topo.are_siblings(degrade, victim), ErrorKind::Validation,
              std::string(to_string(strategy)) +
                  " placement requires the degrade core to be the victim's SMT sibling");
      break;
    case DegradeStrategy::SmcDegrade:
      require(degrade != victim, ErrorKind::Validation,
              "SMC placement requires a degrade core distinct from the victim core");
      break;
    case DegradeStrategy::NoDegrade:
      break;
  }
  if (spy >= 0 && strategy != DegradeStrategy::NoDegrade)
    require(*topo.physical_of(spy) != *topo.physical_of(victim), ErrorKind::Validation,
            "spy core must sit on a different physical core than the victim");
  return Placement{spy, degrade, victim};
}

Placement Placement::choose(DegradeStrategy strategy, const CpuTopology& topo) {
  const auto& cores = topo.cores();
  require(!cores.empty(), ErrorKind::Capability, "empty CPU topology");
  for (const auto& v : cores) {
    for (const auto& g : cores) {
      try {
        return make(strategy, topo, -1, g.logical_id, v.logical_id);
      } catch (const Error&) {
      }
    }
  }
  fail(ErrorKind::Capability, std::string("no core placement satisfies ") + to_string(strategy) +
                                  " on this topology");
}

void pin_current_thread(int logical_core) {
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(logical_core, &set);
  require(sched_setaffinity(0, sizeof(set), &set) == 0, ErrorKind::Capability,
          "cannot pin to logical core " + std::to_string(logical_core));
}

}  // namespace degradekit::probe
