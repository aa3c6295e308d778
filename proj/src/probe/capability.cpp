#include <sys/mman.h>
#include <unistd.h>

#include <sstream>

#if defined(__x86_64__)
#include <cpuid.h>
#endif

#include "degradekit/probe.hpp"

namespace degradekit::probe {

namespace {
bool probe_writable_exec() {
  void* p = mmap(nullptr, 4096, PROT_READ | PROT_WRITE | PROT_EXEC, MAP_PRIVATE | MAP_ANONYMOUS,
                 -1, 0);
  if (p == MAP_FAILED) return false;
  munmap(p, 4096);
  return true;
}
}  // namespace

std::string Capabilities::describe() const {
  std::ostringstream os;
  os << "x86_64=" << x86_64 << " clflush=" << clflush << " invariant_tsc=" << invariant_tsc
     << " rdtscp=" << rdtscp << " smt=" << smt << " writable_exec=" << writable_exec
     << " logical_cores=" << logical_cores << " physical_cores=" << physical_cores;
  return os.str();
}

Capabilities detect_capabilities() {
  Capabilities c;
#if defined(__x86_64__)
  c.x86_64 = true;
  unsigned a = 0, b = 0, cx = 0, d = 0;
  if (__get_cpuid(1, &a, &b, &cx, &d)) c.clflush = (d >> 19) & 1u;
  if (__get_cpuid(0x80000001, &a, &b, &cx, &d)) c.rdtscp = (d >> 27) & 1u;
  if (__get_cpuid(0x80000007, &a, &b, &cx, &d)) c.invariant_tsc = (d >> 8) & 1u;
#endif
  try {
    auto topo = discover_topology();
    c.logical_cores = static_cast<int>(topo.cores().size());
    c.physical_cores = topo.physical_count();
    c.smt = topo.smt();
  } catch (const Error&) {
    c.logical_cores = static_cast<int>(sysconf(_SC_NPROCESSORS_ONLN));
    c.physical_cores = c.logical_cores;
  }
  c.writable_exec = probe_writable_exec();
  return c;
}

void require_capabilities(const Capabilities& caps, const Needs& needs, const std::string& op) {
  std::vector<std::string> missing;
  if ((needs.flush || needs.tsc || needs.writable_exec) && !caps.x86_64)
    missing.emplace_back("x86-64 host");
  if (needs.flush && !caps.clflush) missing.emplace_back("clflush instruction");
  if (needs.tsc && !caps.invariant_tsc) missing.emplace_back("invariant timestamp counter");
  if (needs.smt && !caps.smt) missing.emplace_back("SMT sibling cores");
  if (needs.writable_exec && !caps.writable_exec) missing.emplace_back("writable+executable pages");
  if (caps.physical_cores < needs.min_physical_cores)
    missing.emplace_back(std::to_string(needs.min_physical_cores) + " physical cores (have " +
                         std::to_string(caps.physical_cores) + ")");
  if (missing.empty()) return;
  std::string msg = op + " unavailable on this host; missing:";
  for (const auto& m : missing) msg += " [" + m + "]";
  fail(ErrorKind::Capability, msg);
}

}  // namespace degradekit::probe
