#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <ctime>
#include <new>
#include <sstream>

#include "degradekit/victim.hpp"

namespace degradekit::victim {

namespace fs = std::filesystem;

namespace {

struct Shared {
  probe::StopFlag stop;
  std::atomic<std::uint64_t> degrade_got_ack{0};
  std::atomic<std::uint64_t> degrade_loop_start{0};
};

class SharedBlock {
 public:
  SharedBlock() {
    void* p = mmap(nullptr, sizeof(Shared), PROT_READ | PROT_WRITE, MAP_SHARED | MAP_ANONYMOUS, -1, 0);
    require(p != MAP_FAILED, ErrorKind::Orchestration, "cannot map shared state");
    state_ = new (p) Shared;
  }
  ~SharedBlock() {
    state_->~Shared();
    munmap(state_, sizeof(Shared));
  }
  Shared* operator->() const { return state_; }
  Shared* get() const { return state_; }

 private:
  Shared* state_;
};

class Fifos {
 public:
  explicit Fifos(const fs::path& dir) {
    if (dir.empty()) {
      std::string tmpl = (fs::temp_directory_path() / "degradekit-sync-XXXXXX").string();
      require(mkdtemp(tmpl.data()) != nullptr, ErrorKind::Orchestration, "cannot create FIFO dir");
      dir_ = tmpl;
      owned_ = true;
    } else {
      dir_ = dir;
      fs::create_directories(dir_);
    }
    for (const char* name : {"C", "A", "V"}) {
      const auto p = dir_ / name;
      ::unlink(p.c_str());
      require(mkfifo(p.c_str(), 0600) == 0, ErrorKind::Orchestration,
              "cannot create FIFO " + p.string() + ": " + std::strerror(errno));
    }
  }
  ~Fifos() {
    std::error_code ec;
    for (const char* name : {"C", "A", "V"}) fs::remove(dir_ / name, ec);
    if (owned_) fs::remove(dir_, ec);
  }
  std::string path(const char* name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
  bool owned_ = false;
};

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

std::uint64_t now_ns() {
  timespec ts{};
  clock_gettime(CLOCK_MONOTONIC, &ts);
  return std::uint64_t(ts.tv_sec) * 1'000'000'000u + std::uint64_t(ts.tv_nsec);
}

bool write_line(int fd, const std::string& s) {
  const std::string line = s + "\n";
  return ::write(fd, line.data(), line.size()) == static_cast<ssize_t>(line.size());
}

// Child side: blocking read of one line; empty on EOF or error.
std::string read_line(int fd) {
  std::string out;
  char c;
  while (::read(fd, &c, 1) == 1) {
    if (c == '\n') return out;
    out.push_back(c);
  }
  return {};
}

struct Child {
  const char* party;
  pid_t pid = -1;
  bool reaped = false;
  int status = 0;
};

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exit code " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "signal " + std::to_string(WTERMSIG(status));
  return "status " + std::to_string(status);
}

bool poll_exit(Child& c) {
  if (c.reaped) return true;
  if (waitpid(c.pid, &c.status, WNOHANG) == c.pid) c.reaped = true;
  return c.reaped;
}

void kill_all(std::vector<Child>& kids) {
  for (auto& c : kids) {
    if (c.pid <= 0 || c.reaped) continue;
    ::kill(c.pid, SIGKILL);
    waitpid(c.pid, &c.status, 0);
    c.reaped = true;
  }
}

class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}

  // Waits for one line from the control FIFO, failing fast when a party dies.
  std::string await(std::vector<Child>& kids, std::chrono::milliseconds timeout, const char* what) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto line = take()) return *line;
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 20) > 0) drain();
      if (auto line = take()) return *line;
      for (auto& c : kids) {
        if (!poll_exit(c)) continue;
        drain();
        if (auto line = take()) return *line;
        fail(ErrorKind::Orchestration, std::string(c.party) + " exited early (" +
                                           describe_status(c.status) + ") while waiting for " + what);
      }
      if (std::chrono::steady_clock::now() > deadline)
        fail(ErrorKind::Orchestration, std::string("timed out waiting for ") + what);
    }
  }

 private:
  void drain() {
    char buf[256];
    for (;;) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 0) <= 0) return;
      const ssize_t n = ::read(fd_, buf, sizeof buf);
      if (n <= 0) return;
      buf_.append(buf, static_cast<std::size_t>(n));
    }
  }
  std::optional<std::string> take() {
    auto nl = buf_.find('\n');
    if (nl == std::string::npos) return std::nullopt;
    std::string line = buf_.substr(0, nl);
    buf_.erase(0, nl + 1);
    return line;
  }
  int fd_;
  std::string buf_;
};

// Children must die on fatal signals rather than run handlers inherited from the host process.
void reset_signals() {
  for (int sig : {SIGABRT, SIGSEGV, SIGBUS, SIGFPE, SIGILL, SIGTERM, SIGINT, SIGPIPE})
    ::signal(sig, SIG_DFL);
}

void pin_or_exit(int core) {
  if (core < 0) return;
  try {
    probe::pin_current_thread(core);
  } catch (...) {
    _exit(30);
  }
}

[[noreturn]] void run_victim_child(const Fifos& f, const SyncConfig& cfg,
                                    const std::function<void()>& body) {
  reset_signals();
  pin_or_exit(cfg.victim_core);
  const int c = ::open(f.path("C").c_str(), O_WRONLY);
  const int v = ::open(f.path("V").c_str(), O_RDONLY);
  if (c < 0 || v < 0) _exit(31);
  if (!write_line(c, "enable")) _exit(32);
  if (read_line(v) != "ack") _exit(33);
  const std::uint64_t ns0 = now_ns();
  const std::uint64_t t0 = probe::fenced_timestamp();
  try {
    body();
  } catch (...) {
    _exit(34);
  }
  const std::uint64_t t1 = probe::fenced_timestamp();
  const std::uint64_t ns1 = now_ns();
  std::ostringstream msg;
  msg << "disable " << t0 << ' ' << t1 << ' ' << ns0 << ' ' << ns1;
  if (!write_line(c, msg.str())) _exit(35);
  _exit(0);
}

[[noreturn]] void run_degrade_child(const Fifos& f, const SyncConfig& cfg, const DegradeBody& body,
                                     Shared* shared) {
  reset_signals();
  pin_or_exit(cfg.degrade_core);
  const int a = ::open(f.path("A").c_str(), O_RDONLY);
  const int v = ::open(f.path("V").c_str(), O_WRONLY);
  if (a < 0 || v < 0) _exit(41);
  if (read_line(a) != "ack") _exit(42);
  shared->degrade_got_ack.store(probe::fenced_timestamp());
  shared->degrade_loop_start.store(probe::fenced_timestamp());
  if (!write_line(v, "ack")) _exit(43);
  try {
    if (body) {
      body(shared->stop);
    } else {
      while (!shared->stop.signalled()) ::usleep(200);
    }
  } catch (...) {
    _exit(44);
  }
  _exit(0);
}

}  // namespace

std::vector<std::string> SyncResult::messages() const {
  std::vector<std::string> out;
  for (const auto& e : events)
    if (e.message.size() > 1 && e.message[1] == ':') out.push_back(e.message);
  return out;
}

SyncResult sync_protocol(const std::function<void()>& victim_body, const DegradeBody& degrade,
                         const SyncConfig& cfg) {
  require(static_cast<bool>(victim_body), ErrorKind::Validation, "sync protocol needs a victim body");
  Fifos fifos(cfg.fifo_dir);
  SharedBlock shared;
  // Controller holds C and A read-write so neither child blocks opening them.
  Fd ctl(::open(fifos.path("C").c_str(), O_RDWR | O_NONBLOCK));
  Fd ack(::open(fifos.path("A").c_str(), O_RDWR));
  require(ctl.get() >= 0 && ack.get() >= 0, ErrorKind::Orchestration, "cannot open control FIFOs");

  std::vector<Child> kids{{"degrade"}, {"victim"}};
  SyncResult result;
  auto log = [&](const char* party, std::string msg, std::uint64_t tsc) {
    result.events.push_back({party, std::move(msg), tsc});
  };

  try {
    kids[0].pid = fork();
    require(kids[0].pid >= 0, ErrorKind::Orchestration, "cannot fork degrade party");
    if (kids[0].pid == 0) run_degrade_child(fifos, cfg, degrade, shared.get());
    kids[1].pid = fork();
    require(kids[1].pid >= 0, ErrorKind::Orchestration, "cannot fork victim party");
    if (kids[1].pid == 0) run_victim_child(fifos, cfg, victim_body);

    LineReader control(ctl.get());
    const std::string enable = control.await(kids, cfg.ack_timeout, "the victim's enable command");
    require(enable == "enable", ErrorKind::Orchestration, "unexpected control message '" + enable + "'");
    log("controller", "C:enable", probe::fenced_timestamp());
    log("controller", "A:ack", probe::fenced_timestamp());
    require(write_line(ack.get(), "ack"), ErrorKind::Orchestration, "cannot write ACK to degrade");

    // No timeout on the victim run itself beyond the children staying alive.
    const std::string disable = control.await(kids, std::chrono::hours(24), "the victim's disable command");
    const std::uint64_t disable_tsc = probe::fenced_timestamp();
    std::istringstream in(disable);
    std::string word;
    std::uint64_t t0 = 0, t1 = 0, ns0 = 0, ns1 = 0;
    in >> word >> t0 >> t1 >> ns0 >> ns1;
    require(word == "disable" && !in.fail(), ErrorKind::Orchestration,
            "unexpected control message '" + disable + "'");
    shared->stop.signal();

    log("degrade", "V:ack", shared->degrade_got_ack.load());
    log("degrade", "degrade:loop_start", shared->degrade_loop_start.load());
    log("victim", "victim:loop_start", t0);
    log("victim", "victim:loop_end", t1);
    log("controller", "C:disable", disable_tsc);

    const auto deadline = std::chrono::steady_clock::now() + cfg.ack_timeout;
    while (!(poll_exit(kids[0]) && poll_exit(kids[1]))) {
      require(std::chrono::steady_clock::now() < deadline, ErrorKind::Orchestration,
              "parties did not exit after the disable command");
      ::usleep(500);
    }
    for (auto& c : kids)
      require(WIFEXITED(c.status) && WEXITSTATUS(c.status) == 0, ErrorKind::Orchestration,
              std::string(c.party) + " failed (" + describe_status(c.status) + ")");

    result.loop_start_tsc = t0;
    result.loop_end_tsc = t1;
    result.cycles = t1 - t0;
    result.nanoseconds = ns1 - ns0;
  } catch (...) {
    shared->stop.signal();
    kill_all(kids);
    throw;
  }
  std::stable_sort(result.events.begin(), result.events.end(),
                   [](const SyncEvent& a, const SyncEvent& b) { return a.tsc < b.tsc; });
  return result;
}

}  // namespace degradekit::victim
