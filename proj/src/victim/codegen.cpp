#include <dlfcn.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "degradekit/victim.hpp"

namespace degradekit::victim {

void VictimSpec::validate() const {
  switch (kind) {
    case VictimKind::SingleLineLoop:
      require(iterations > 0, ErrorKind::Validation, "victim iterations must be positive");
      require(line_index < kLoopLines, ErrorKind::Validation,
              "line_index must be below " + std::to_string(kLoopLines));
      break;
    case VictimKind::VictimPair:
      require(cnt > 0, ErrorKind::Validation, "victim pair CNT must be positive");
      break;
    case VictimKind::ExternalSharedLib:
      require(!path.empty() && !entry.empty(), ErrorKind::Validation,
              "external victim needs a shared-library path and an entry symbol");
      break;
  }
}

VictimSpec VictimSpec::single_line(std::uint64_t iterations, std::uint32_t line_index) {
  VictimSpec s;
  s.kind = VictimKind::SingleLineLoop;
  s.iterations = iterations;
  s.line_index = line_index;
  return s;
}

VictimSpec VictimSpec::pair(std::uint32_t cnt) {
  VictimSpec s;
  s.kind = VictimKind::VictimPair;
  s.cnt = cnt;
  return s;
}

VictimSpec VictimSpec::external(std::string path, std::string entry) {
  VictimSpec s;
  s.kind = VictimKind::ExternalSharedLib;
  s.path = std::move(path);
  s.entry = std::move(entry);
  return s;
}

// Entry is dk_victim_loop(line_index /*rdi*/, iterations /*rsi*/). Each line is
// 16 instructions whose only net effect is rsi -= 1.
std::string single_line_loop_source() {
  std::ostringstream s;
  s << "\t.text\n"
    << "\t.globl " << kLoopEntry << "\n\t.type " << kLoopEntry << ", @function\n"
    << kLoopEntry << ":\n"
    // Local alias: a PC-relative reference to the global symbol would need a PLT/GOT hop.
    << "\tlea .Lloop_base(%rip), %rax\n"
    << "\tshl $6, %rdi\n"
    << "\tadd %rax, %rdi\n"
    << "\tjmp *%rdi\n"
    << "\t.p2align 12\n"
    << "\t.globl " << kLoopBase << "\n"
    << kLoopBase << ":\n"
    << ".Lloop_base:\n"
    << ".rept 64\n"
    << "\t.rept 6\n"
    << "\tadd $1, %rsi\n"
    << "\tsub $1, %rsi\n"
    << "\t.endr\n"
    << "\tadd $1, %rsi\n"
    << "\tsub $2, %rsi\n"
    << "\tjz 1f\n"
    << "\tjmp *%rdi\n"
    << "\t.p2align 6\n"
    << ".endr\n"
    << "1:\n"
    << "\tret\n"
    << "\t.size " << kLoopEntry << ", .-" << kLoopEntry << "\n"
    << "\t.section .note.GNU-stack,\"\",@progbits\n";
  return s.str();
}

namespace {
void pair_function(std::ostringstream& s, const char* name, std::uint32_t cnt) {
  s << "\t.p2align 9\n"
    << "\t.globl " << name << "\n\t.type " << name << ", @function\n"
    << name << ":\n"
    << "\tmov $" << cnt << ", %r10\n"
    << "2:\n"
    << "\t.rept 29\n"
    << "\tadd $1, %r10\n"
    << "\tsub $1, %r10\n"
    << "\t.endr\n"
    << "\tsub $1, %r10\n"
    << "\tjnz 2b\n"
    << "\tret\n"
    << "\t.size " << name << ", .-" << name << "\n";
}
}  // namespace

std::string victim_pair_source(std::uint32_t cnt) {
  std::ostringstream s;
  s << "\t.text\n";
  pair_function(s, kPairEntry0, cnt);
  pair_function(s, kPairEntry1, cnt);
  s << "\t.section .note.GNU-stack,\"\",@progbits\n";
  return s.str();
}

std::string assembler_command() {
  const char* cc = std::getenv("CC");
  return cc && *cc ? cc : "cc";
}

Victim build_victim(const VictimSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  if (spec.kind == VictimKind::ExternalSharedLib) return Victim(spec, spec.path);

  std::filesystem::create_directories(out_dir);
  const bool loop = spec.kind == VictimKind::SingleLineLoop;
  const std::string stem = loop ? "single_line_loop" : "victim_pair_" + std::to_string(spec.cnt);
  const auto src = out_dir / (stem + ".S");
  const auto so = out_dir / ("lib" + stem + ".so");
  {
    std::ofstream f(src);
    require(f.is_open(), ErrorKind::Io, "cannot write " + src.string());
    f << (loop ? single_line_loop_source() : victim_pair_source(spec.cnt));
  }
  const std::string cmd = assembler_command() + " -shared -nostdlib -Wl,-z,noexecstack -o '" +
                          so.string() + "' '" + src.string() + "' 2>&1";
  const int rc = std::system(cmd.c_str());
  require(rc != -1 && WIFEXITED(rc) && WEXITSTATUS(rc) == 0, ErrorKind::Capability,
          "assembler/toolchain unavailable or failed: " + cmd);
  return Victim(spec, so.string());
}

Victim::Victim(VictimSpec spec, std::string so_path)
    : spec_(std::move(spec)), so_path_(std::move(so_path)) {
  spec_.validate();
  handle_ = dlopen(so_path_.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (!handle_) fail(ErrorKind::Io, std::string("cannot load victim: ") + dlerror());
}

Victim::Victim(Victim&& other) noexcept
    : spec_(std::move(other.spec_)), so_path_(std::move(other.so_path_)), handle_(other.handle_) {
  other.handle_ = nullptr;
}

Victim::~Victim() {
  if (handle_) dlclose(handle_);
}

void* Victim::fn(const std::string& symbol) const {
  void* f = dlsym(handle_, symbol.c_str());
  require(f != nullptr, ErrorKind::Validation, "victim has no symbol '" + symbol + "'");
  return f;
}

void Victim::run() const {
  switch (spec_.kind) {
    case VictimKind::SingleLineLoop:
      reinterpret_cast<void (*)(std::uint64_t, std::uint64_t)>(fn(kLoopEntry))(spec_.line_index,
                                                                              spec_.iterations);
      break;
    case VictimKind::VictimPair:
      run_sequence(1);
      break;
    case VictimKind::ExternalSharedLib:
      reinterpret_cast<void (*)()>(fn(spec_.entry))();
      break;
  }
}

void Victim::run_sequence(int second) const {
  require(spec_.kind == VictimKind::VictimPair, ErrorKind::Validation,
          "call sequences apply to the victim pair only");
  require(second == 0 || second == 1, ErrorKind::Validation, "sequence must be 0-0 or 0-1");
  auto f0 = reinterpret_cast<void (*)()>(fn(kPairEntry0));
  auto f1 = reinterpret_cast<void (*)()>(fn(kPairEntry1));
  f0();
  (second ? f1 : f0)();
}

std::uint64_t Victim::symbol_offset(const std::string& symbol) const {
  return symbol_file_offset(so_path_, symbol);
}

probe::CacheLineTarget Victim::hot_line() const {
  switch (spec_.kind) {
    case VictimKind::SingleLineLoop:
      return {so_path_, symbol_offset(kLoopBase) + probe::kCacheLine * spec_.line_index};
    case VictimKind::VictimPair:
      return {so_path_, symbol_offset(kPairEntry0)};
    case VictimKind::ExternalSharedLib:
      break;
  }
  return {so_path_, symbol_offset(spec_.entry) / probe::kCacheLine * probe::kCacheLine};
}

probe::CacheLineTarget Victim::middle_line(int which) const {
  require(spec_.kind == VictimKind::VictimPair, ErrorKind::Validation,
          "middle lines apply to the victim pair only");
  return {so_path_, symbol_offset(which ? kPairEntry1 : kPairEntry0) + 2 * probe::kCacheLine};
}

}  // namespace degradekit::victim
