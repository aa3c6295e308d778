#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>

#include "degradekit/probe.hpp"

namespace degradekit::probe {

void CacheLineTarget::validate() const {
  require(!path.empty(), ErrorKind::Validation, "cache line target needs a path");
  require(offset % kCacheLine == 0, ErrorKind::Validation,
          "cache line offset " + std::to_string(offset) + " is not 64-byte aligned");
  struct stat st {};
  require(::stat(path.c_str(), &st) == 0 && S_ISREG(st.st_mode), ErrorKind::Validation,
          "'" + path + "' is not a mappable file");
  require(offset < static_cast<std::uint64_t>(st.st_size), ErrorKind::Validation,
          "offset " + std::to_string(offset) + " lies beyond the end of '" + path + "'");
}

CacheLineTarget CacheLineTarget::parse(const std::string& spec) {
  auto colon = spec.rfind(':');
  require(colon != std::string::npos && colon > 0 && colon + 1 < spec.size(),
          ErrorKind::Validation, "cache line target must look like path:offset, got '" + spec + "'");
  CacheLineTarget t;
  t.path = spec.substr(0, colon);
  const std::string off = spec.substr(colon + 1);
  try {
    std::size_t used = 0;
    t.offset = std::stoull(off, &used, 0);
    require(used == off.size(), ErrorKind::Validation, "bad offset '" + off + "'");
  } catch (const std::logic_error&) {
    fail(ErrorKind::Validation, "bad offset '" + off + "'");
  }
  return t;
}

std::string CacheLineTarget::str() const {
  std::ostringstream os;
  os << path << ":0x" << std::hex << offset;
  return os.str();
}

MappedLine::MappedLine(const CacheLineTarget& target) {
  target.validate();
  int fd = ::open(target.path.c_str(), O_RDONLY | O_CLOEXEC);
  require(fd >= 0, ErrorKind::Io, "cannot open '" + target.path + "': " + std::strerror(errno));
  const auto page = static_cast<std::uint64_t>(sysconf(_SC_PAGESIZE));
  const std::uint64_t base = target.offset / page * page;
  length_ = page;
  base_ = ::mmap(nullptr, length_, PROT_READ, MAP_SHARED, fd, static_cast<off_t>(base));
  const int err = errno;
  ::close(fd);
  if (base_ == MAP_FAILED) {
    base_ = nullptr;
    fail(ErrorKind::Io, "cannot map '" + target.path + "': " + std::strerror(err));
  }
  line_ = static_cast<const volatile std::uint8_t*>(base_) + (target.offset - base);
}

MappedLine::MappedLine(MappedLine&& other) noexcept
    : base_(other.base_), length_(other.length_), line_(other.line_) {
  other.base_ = nullptr;
  other.line_ = nullptr;
}

MappedLine::~MappedLine() {
  if (base_) ::munmap(base_, length_);
}

}  // namespace degradekit::probe
