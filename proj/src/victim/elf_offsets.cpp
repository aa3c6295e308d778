#include <elf.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "degradekit/victim.hpp"

namespace degradekit::victim {

namespace {

std::vector<char> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.is_open(), ErrorKind::Io, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

template <typename T>
T at(const std::vector<char>& b, std::uint64_t off, const std::string& path) {
  require(off + sizeof(T) <= b.size(), ErrorKind::Format, "truncated ELF file '" + path + "'");
  T v;
  std::memcpy(&v, b.data() + off, sizeof(T));
  return v;
}

Elf64_Ehdr header(const std::vector<char>& b, const std::string& path) {
  auto eh = at<Elf64_Ehdr>(b, 0, path);
  require(std::memcmp(eh.e_ident, ELFMAG, SELFMAG) == 0 && eh.e_ident[EI_CLASS] == ELFCLASS64,
          ErrorKind::Format, "'" + path + "' is not a 64-bit ELF file");
  return eh;
}

}  // namespace

std::map<std::string, std::uint64_t> elf_symbols(const std::string& path) {
  const auto b = read_file(path);
  const auto eh = header(b, path);
  std::map<std::string, std::uint64_t> out;
  for (unsigned i = 0; i < eh.e_shnum; ++i) {
    auto sh = at<Elf64_Shdr>(b, eh.e_shoff + std::uint64_t(i) * eh.e_shentsize, path);
    if (sh.sh_type != SHT_SYMTAB && sh.sh_type != SHT_DYNSYM) continue;
    auto strtab = at<Elf64_Shdr>(b, eh.e_shoff + std::uint64_t(sh.sh_link) * eh.e_shentsize, path);
    for (std::uint64_t off = 0; off + sizeof(Elf64_Sym) <= sh.sh_size; off += sizeof(Elf64_Sym)) {
      auto sym = at<Elf64_Sym>(b, sh.sh_offset + off, path);
      if (sym.st_name == 0 || sym.st_shndx == SHN_UNDEF) continue;
      const std::uint64_t name_off = strtab.sh_offset + sym.st_name;
      require(name_off < b.size(), ErrorKind::Format, "bad symbol name in '" + path + "'");
      out.emplace(std::string(b.data() + name_off, strnlen(b.data() + name_off, b.size() - name_off)),
                  sym.st_value);
    }
  }
  return out;
}

std::uint64_t vaddr_to_file_offset(const std::string& path, std::uint64_t vaddr) {
  const auto b = read_file(path);
  const auto eh = header(b, path);
  for (unsigned i = 0; i < eh.e_phnum; ++i) {
    auto ph = at<Elf64_Phdr>(b, eh.e_phoff + std::uint64_t(i) * eh.e_phentsize, path);
    if (ph.p_type == PT_LOAD && vaddr >= ph.p_vaddr && vaddr < ph.p_vaddr + ph.p_filesz)
      return vaddr - ph.p_vaddr + ph.p_offset;
  }
  fail(ErrorKind::Validation, "address 0x" + std::to_string(vaddr) + " is not file-backed in '" +
                                  path + "'");
}

std::uint64_t symbol_file_offset(const std::string& path, const std::string& symbol) {
  const auto syms = elf_symbols(path);
  auto it = syms.find(symbol);
  require(it != syms.end(), ErrorKind::Validation, "no symbol '" + symbol + "' in '" + path + "'");
  return vaddr_to_file_offset(path, it->second);
}

}  // namespace degradekit::victim
