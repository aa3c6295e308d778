#include <x86intrin.h>

#include "degradekit/probe.hpp"

namespace degradekit::probe {

void flush_line(const volatile void* p) {
  _mm_clflush(const_cast<const void*>(p));
}

std::uint64_t fenced_timestamp() {
  _mm_mfence();
  _mm_lfence();
  const std::uint64_t t = __rdtsc();
  _mm_lfence();
  return t;
}

std::uint32_t timed_reload(const volatile void* p) {
  std::uint32_t delta;
  asm volatile(
      "mfence\n\t"
      "lfence\n\t"
      "rdtsc\n\t"
      "lfence\n\t"
      "movl %%eax, %%esi\n\t"
      "movzbl (%1), %%eax\n\t"
      "lfence\n\t"
      "rdtsc\n\t"
      "lfence\n\t"
      "subl %%esi, %%eax\n\t"
      : "=&a"(delta)
      : "r"(p)
      : "rdx", "rsi", "memory");
  return delta == 0 ? 1 : delta;
}

void busy_wait(std::uint32_t iterations) {
  for (std::uint32_t i = 0; i < iterations; ++i) asm volatile("" ::: "memory");
}

std::vector<trace::Latency> flush_reload_samples(const volatile void* line, std::uint32_t wait_r,
                                                 std::size_t n_samples) {
  std::vector<trace::Latency> out(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    flush_line(line);
    busy_wait(wait_r);
    out[i] = timed_reload(line);
  }
  return out;
}

trace::Trace flush_reload_capture(const CacheLineTarget& target, std::uint32_t wait_r,
                                  std::size_t n_samples, DegradeStrategy strategy,
                                  std::optional<int> class_label, std::string capture_id) {
  require(n_samples > 0, ErrorKind::Validation, "flush+reload capture of 0 samples gives an empty trace");
  require(wait_r > 0, ErrorKind::Validation, "wait_r must be positive");
  require_capabilities(detect_capabilities(), Needs{.flush = true, .tsc = true}, "flush+reload capture");
  MappedLine line(target);
  trace::Trace t;
  t.samples = flush_reload_samples(line.line(), wait_r, n_samples);
  t.meta = {strategy, wait_r, class_label, std::move(capture_id)};
  return t;
}

}  // namespace degradekit::probe
