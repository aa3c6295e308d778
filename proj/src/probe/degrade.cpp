#include <sys/mman.h>
#include <x86intrin.h>

#include <array>
#include <cstring>

#include "degradekit/probe.hpp"

namespace degradekit::probe {

std::uint64_t degrade_loop(const volatile void* line, const StopFlag& stop, DegradeLoopConfig cfg) {
  std::uint64_t flushes = 0;
  while (!stop.signalled()) {
    _mm_clflush(const_cast<const void*>(line));
    if (cfg.fence) _mm_mfence();
    ++flushes;
    for (std::uint32_t i = 0; i < cfg.pause_iterations; ++i) _mm_pause();
  }
  return flushes;
}

std::uint64_t degrade_loop(const CacheLineTarget& target, const StopFlag& stop,
                           DegradeLoopConfig cfg) {
  require_capabilities(detect_capabilities(), Needs{.flush = true}, "degrade loop");
  MappedLine line(target);
  return degrade_loop(line.line(), stop, cfg);
}

namespace {
// void loop(uint64_t, uint64_t* counter /*rsi*/, const volatile uint8_t* stop /*rdx*/)
//   mov $0x40, %dil
//   lea self(%rip), %rcx
//   jmp check
// self:
//   mov %dil, (%rcx)      # rewrites its own REX byte with the same value
//   incq (%rsi)
// check:
//   cmpb $0, (%rdx)
//   je self
//   ret
constexpr std::array<std::uint8_t, 24> kSmcLoop = {
    0x40, 0xb7, 0x40,                          //
    0x48, 0x8d, 0x0d, 0x02, 0x00, 0x00, 0x00,  //
    0xeb, 0x06,                                //
    0x40, 0x88, 0x39,                          //
    0x48, 0xff, 0x06,                          //
    0x80, 0x3a, 0x00,                          //
    0x74, 0xf5,                                //
    0xc3};
}  // namespace

std::span<const std::uint8_t> smc_loop_code() { return kSmcLoop; }

std::uint64_t smc_degrade_loop(const StopFlag& stop) {
  require_capabilities(detect_capabilities(), Needs{.writable_exec = true}, "SMC degrade loop");
  void* page = mmap(nullptr, 4096, PROT_READ | PROT_WRITE | PROT_EXEC, MAP_PRIVATE | MAP_ANONYMOUS,
                    -1, 0);
  require(page != MAP_FAILED, ErrorKind::Capability, "cannot map a writable+executable page");
  std::memcpy(page, kSmcLoop.data(), kSmcLoop.size());
  using Fn = void (*)(std::uint64_t, std::uint64_t*, const volatile std::uint8_t*);
  std::uint64_t stores = 0;
  reinterpret_cast<Fn>(page)(0, &stores, stop.raw());
  munmap(page, 4096);
  return stores;
}

}  // namespace degradekit::probe
