#include "dsukit/ledger.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <thread>

#include <nlohmann/json.hpp>

#include "dsukit/encoding.hpp"

namespace dsukit::anchoring {

namespace {

using nlohmann::json;

Result<void> check_chain(const std::vector<LedgerEntry>& history, const std::string& expected) {
  const std::string tail = history.empty() ? std::string{} : history.back().link;
  if (tail != expected) {
    return make_error(Errc::conflict, "expected_last does not match the current tail",
                      "expected_last");
  }
  return {};
}

Result<void> check_batch_shape(std::span<const LedgerEntry> entries) {
  if (entries.empty()) return make_error(Errc::validation, "empty batch");
  for (size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].expected_last != entries[i - 1].link) {
      return make_error(Errc::validation, "batch entries do not chain", "expected_last");
    }
  }
  return {};
}

json entry_to_json(const LedgerEntry& e) {
  json j;
  j["link"] = e.link;
  j["expected_last"] = e.expected_last;
  j["signature"] = json::parse(keyssi::signature_to_json(e.signature));
  j["timestamp_ms"] = e.timestamp_ms;
  return j;
}

Result<LedgerEntry> entry_from_json(const json& j) {
  LedgerEntry e;
  try {
    e.link = j.at("link").get<std::string>();
    e.expected_last = j.at("expected_last").get<std::string>();
    auto sig = keyssi::signature_from_json(j.at("signature").dump());
    if (!sig.ok()) return sig.error();
    e.signature = std::move(sig).value();
    e.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
  } catch (const json::exception& ex) {
    return make_error(Errc::parse_error, std::string("bad ledger entry: ") + ex.what());
  }
  return e;
}

}  // namespace

std::int64_t wall_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// ---------------------------------------------------------------------------
// MemoryLedger

Result<void> MemoryLedger::create(const std::string& anchor_id) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = anchors_.try_emplace(anchor_id);
  if (!inserted) return make_error(Errc::already_exists, "anchor already exists", "anchor_id");
  return {};
}

Result<bool> MemoryLedger::exists(const std::string& anchor_id) {
  std::lock_guard lock(mu_);
  return anchors_.contains(anchor_id);
}

Result<void> MemoryLedger::append(const std::string& anchor_id, const LedgerEntry& entry) {
  return append_batch(anchor_id, std::span(&entry, 1));
}

Result<void> MemoryLedger::append_batch(const std::string& anchor_id,
                                        std::span<const LedgerEntry> entries) {
  if (auto s = check_batch_shape(entries); !s.ok()) return s.error();
  std::lock_guard lock(mu_);
  auto it = anchors_.find(anchor_id);
  if (it == anchors_.end()) return make_error(Errc::not_found, "unknown anchor", "anchor_id");
  if (auto c = check_chain(it->second, entries.front().expected_last); !c.ok()) return c.error();
  for (const auto& e : entries) {
    it->second.push_back(e);
    if (policy_ == AnchorPolicy::Heavy) it->second.back().timestamp_ms = wall_clock_ms();
  }
  return {};
}

Result<std::vector<LedgerEntry>> MemoryLedger::history(const std::string& anchor_id) {
  std::lock_guard lock(mu_);
  auto it = anchors_.find(anchor_id);
  if (it == anchors_.end()) return make_error(Errc::not_found, "unknown anchor", "anchor_id");
  return it->second;
}

// ---------------------------------------------------------------------------
// FileLogLedger

struct FileLogLedger::Impl {
  std::filesystem::path path;
  AnchorPolicy policy;
  int fd = -1;
  std::mutex mu;  // serializes threads within this process; flock covers processes
  off_t replayed = 0;
  std::unordered_map<std::string, std::vector<LedgerEntry>> anchors;

  Result<void> replay_locked() {
    off_t end = ::lseek(fd, 0, SEEK_END);
    if (end < 0) return make_error(Errc::io, "lseek failed");
    if (end == replayed) return {};
    std::string buf(static_cast<size_t>(end - replayed), '\0');
    ssize_t got = ::pread(fd, buf.data(), buf.size(), replayed);
    if (got < 0 || static_cast<off_t>(got) != end - replayed) {
      return make_error(Errc::io, "short read of ledger log");
    }
    size_t start = 0;
    while (start < buf.size()) {
      size_t nl = buf.find('\n', start);
      if (nl == std::string::npos) break;  // torn tail line: re-read next time
      std::string_view line(buf.data() + start, nl - start);
      replayed += static_cast<off_t>(nl - start) + 1;
      start = nl + 1;
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        return make_error(Errc::corruption, "unparseable ledger log line");
      }
      const std::string op = j.value("op", "");
      const std::string anchor = j.value("anchor", "");
      if (op == "create") {
        anchors.try_emplace(anchor);
      } else if (op == "append") {
        auto e = entry_from_json(j.at("entry"));
        if (!e.ok()) return e.error();
        anchors[anchor].push_back(std::move(e).value());
      }
    }
    return {};
  }

  Result<void> write_line_locked(const json& j) {
    std::string line = j.dump();
    line.push_back('\n');
    ssize_t put = ::write(fd, line.data(), line.size());
    if (put < 0 || static_cast<size_t>(put) != line.size()) {
      return make_error(Errc::io, "short write to ledger log");
    }
    if (::fsync(fd) != 0) return make_error(Errc::io, "fsync failed");
    replayed += static_cast<off_t>(line.size());
    return {};
  }
};

// RAII over flock so every early return unlocks.
namespace {
struct FlockGuard {
  int fd;
  explicit FlockGuard(int fd_, int op) : fd(fd_) { ::flock(fd, op); }
  ~FlockGuard() { ::flock(fd, LOCK_UN); }
};
}  // namespace

FileLogLedger::FileLogLedger(std::filesystem::path path, AnchorPolicy policy)
    : impl_(std::make_unique<Impl>()) {
  impl_->path = std::move(path);
  impl_->policy = policy;
  std::filesystem::create_directories(impl_->path.parent_path());
  impl_->fd = ::open(impl_->path.c_str(), O_RDWR | O_CREAT | O_APPEND, 0644);
}

FileLogLedger::~FileLogLedger() {
  if (impl_->fd >= 0) ::close(impl_->fd);
}

Result<void> FileLogLedger::create(const std::string& anchor_id) {
  std::lock_guard lock(impl_->mu);
  if (impl_->fd < 0) return make_error(Errc::io, "ledger log not open");
  FlockGuard fl(impl_->fd, LOCK_EX);
  if (auto r = impl_->replay_locked(); !r.ok()) return r.error();
  if (impl_->anchors.contains(anchor_id)) {
    return make_error(Errc::already_exists, "anchor already exists", "anchor_id");
  }
  json j;
  j["op"] = "create";
  j["anchor"] = anchor_id;
  if (auto w = impl_->write_line_locked(j); !w.ok()) return w.error();
  impl_->anchors.try_emplace(anchor_id);
  return {};
}

Result<bool> FileLogLedger::exists(const std::string& anchor_id) {
  std::lock_guard lock(impl_->mu);
  if (impl_->fd < 0) return make_error(Errc::io, "ledger log not open");
  FlockGuard fl(impl_->fd, LOCK_SH);
  if (auto r = impl_->replay_locked(); !r.ok()) return r.error();
  return impl_->anchors.contains(anchor_id);
}

Result<void> FileLogLedger::append(const std::string& anchor_id, const LedgerEntry& entry) {
  return append_batch(anchor_id, std::span(&entry, 1));
}

Result<void> FileLogLedger::append_batch(const std::string& anchor_id,
                                         std::span<const LedgerEntry> entries) {
  if (auto s = check_batch_shape(entries); !s.ok()) return s.error();
  std::lock_guard lock(impl_->mu);
  if (impl_->fd < 0) return make_error(Errc::io, "ledger log not open");
  FlockGuard fl(impl_->fd, LOCK_EX);
  if (auto r = impl_->replay_locked(); !r.ok()) return r.error();
  auto it = impl_->anchors.find(anchor_id);
  if (it == impl_->anchors.end()) return make_error(Errc::not_found, "unknown anchor", "anchor_id");
  if (auto c = check_chain(it->second, entries.front().expected_last); !c.ok()) return c.error();
  for (LedgerEntry e : entries) {
    if (impl_->policy == AnchorPolicy::Heavy) e.timestamp_ms = wall_clock_ms();
    json j;
    j["op"] = "append";
    j["anchor"] = anchor_id;
    j["entry"] = entry_to_json(e);
    if (auto w = impl_->write_line_locked(j); !w.ok()) return w.error();
    it->second.push_back(std::move(e));
  }
  return {};
}

Result<std::vector<LedgerEntry>> FileLogLedger::history(const std::string& anchor_id) {
  std::lock_guard lock(impl_->mu);
  if (impl_->fd < 0) return make_error(Errc::io, "ledger log not open");
  FlockGuard fl(impl_->fd, LOCK_SH);
  if (auto r = impl_->replay_locked(); !r.ok()) return r.error();
  auto it = impl_->anchors.find(anchor_id);
  if (it == impl_->anchors.end()) return make_error(Errc::not_found, "unknown anchor", "anchor_id");
  return it->second;
}

// ---------------------------------------------------------------------------
// SimulatedChainLedger

SimulatedChainLedger::SimulatedChainLedger(std::shared_ptr<LedgerBackend> inner, double latency_ms,
                                           double cap_tps)
    : inner_(std::move(inner)),
      latency_ms_(latency_ms),
      cap_tps_(cap_tps),
      tokens_(0),
      burst_(std::max(1.0, cap_tps / 10.0)),
      last_refill_(std::chrono::steady_clock::now()) {
  tokens_ = burst_;
}

void SimulatedChainLedger::take_tokens(size_t n) {
  size_t need = n;
  while (need > 0) {
    std::chrono::duration<double> wait{0};
    {
      std::lock_guard lock(bucket_mu_);
      auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_refill_).count() *
                                              cap_tps_);
      last_refill_ = now;
      if (tokens_ >= 1.0) {
        double take = std::min(static_cast<double>(need), std::floor(tokens_));
        tokens_ -= take;
        need -= static_cast<size_t>(take);
        continue;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / cap_tps_);
    }
    std::this_thread::sleep_for(wait);
  }
}

void SimulatedChainLedger::hold_until(std::chrono::steady_clock::time_point deadline) {
  std::this_thread::sleep_until(deadline);
}

Result<void> SimulatedChainLedger::create(const std::string& anchor_id) {
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double, std::milli>(latency_ms_));
  take_tokens(1);
  hold_until(deadline);
  return inner_->create(anchor_id);
}

Result<bool> SimulatedChainLedger::exists(const std::string& anchor_id) {
  return inner_->exists(anchor_id);
}

Result<void> SimulatedChainLedger::append(const std::string& anchor_id, const LedgerEntry& entry) {
  return append_batch(anchor_id, std::span(&entry, 1));
}

Result<void> SimulatedChainLedger::append_batch(const std::string& anchor_id,
                                                std::span<const LedgerEntry> entries) {
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double, std::milli>(latency_ms_));
  take_tokens(entries.size());
  hold_until(deadline);
  return inner_->append_batch(anchor_id, entries);
}

Result<std::vector<LedgerEntry>> SimulatedChainLedger::history(const std::string& anchor_id) {
  return inner_->history(anchor_id);
}

// ---------------------------------------------------------------------------

Result<std::shared_ptr<LedgerBackend>> make_ledger(const BackendSpec& spec) {
  std::shared_ptr<LedgerBackend> base;
  if (spec.kind == "memory") {
    base = std::make_shared<MemoryLedger>(spec.policy);
  } else if (spec.kind == "file-log") {
    if (spec.log_path.empty()) {
      return make_error(Errc::config, "file-log backend requires log_path", "log_path");
    }
    base = std::make_shared<FileLogLedger>(spec.log_path, spec.policy);
  } else if (spec.kind == "simulated-chain") {
    if (spec.cap_tps <= 0) return make_error(Errc::config, "cap_tps must be > 0", "cap_tps");
    if (spec.latency_ms < 0) return make_error(Errc::config, "latency_ms must be >= 0", "latency_ms");
    std::shared_ptr<LedgerBackend> inner =
        spec.log_path.empty()
            ? std::shared_ptr<LedgerBackend>(std::make_shared<MemoryLedger>(spec.policy))
            : std::shared_ptr<LedgerBackend>(std::make_shared<FileLogLedger>(spec.log_path, spec.policy));
    base = std::make_shared<SimulatedChainLedger>(std::move(inner), spec.latency_ms, spec.cap_tps);
  } else {
    return make_error(Errc::config, "unknown ledger kind '" + spec.kind + "'", "kind");
  }
  return base;
}

}  // namespace dsukit::anchoring
