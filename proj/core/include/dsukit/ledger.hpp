#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsukit/errors.hpp"
#include "dsukit/keyssi.hpp"

// Ledger backends: the pluggable notarization substrate behind anchoring.
// A backend stores per-anchor append-only entry lists and provides one
// atomic primitive, compare-and-append: an append succeeds iff the caller's
// expected_last matches the current tail. Signature validation happens in
// the anchoring service, not here.
namespace dsukit::anchoring {

// Empty string = "expect empty history" sentinel for first appends.
struct LedgerEntry {
  std::string link;           // serialized hashlink identifier
  std::string expected_last;  // predecessor link, or "" for the first entry
  keyssi::Signature signature;
  std::int64_t timestamp_ms = 0;
};

// Light anchors keep whatever timestamp the caller supplied (informational);
// the heavy policy stamps entries with the backend's own clock server-side.
enum class AnchorPolicy { Light, Heavy };

class LedgerBackend {
 public:
  virtual ~LedgerBackend() = default;

  virtual Result<void> create(const std::string& anchor_id) = 0;
  virtual Result<bool> exists(const std::string& anchor_id) = 0;

  // Atomic compare-and-append of one entry.
  virtual Result<void> append(const std::string& anchor_id, const LedgerEntry& entry) = 0;

  // Atomic all-or-nothing append of a locally chained batch: entry[0] must
  // match the current tail and each subsequent entry must chain on its
  // predecessor. Nonce-ordered commands landing in one confirmation window.
  virtual Result<void> append_batch(const std::string& anchor_id,
                                    std::span<const LedgerEntry> entries) = 0;

  virtual Result<std::vector<LedgerEntry>> history(const std::string& anchor_id) = 0;
};

std::int64_t wall_clock_ms();

class MemoryLedger final : public LedgerBackend {
 public:
  explicit MemoryLedger(AnchorPolicy policy = AnchorPolicy::Light) : policy_(policy) {}

  Result<void> create(const std::string& anchor_id) override;
  Result<bool> exists(const std::string& anchor_id) override;
  Result<void> append(const std::string& anchor_id, const LedgerEntry& entry) override;
  Result<void> append_batch(const std::string& anchor_id,
                            std::span<const LedgerEntry> entries) override;
  Result<std::vector<LedgerEntry>> history(const std::string& anchor_id) override;

 private:
  AnchorPolicy policy_;
  std::mutex mu_;
  std::unordered_map<std::string, std::vector<LedgerEntry>> anchors_;
};

// Newline-delimited JSON records, fsync per append. The log file is the
// shared source of truth: every mutation takes an exclusive flock, replays
// records appended by other processes, then applies compare-and-append.
class FileLogLedger final : public LedgerBackend {
 public:
  explicit FileLogLedger(std::filesystem::path path, AnchorPolicy policy = AnchorPolicy::Light);
  ~FileLogLedger() override;

  Result<void> create(const std::string& anchor_id) override;
  Result<bool> exists(const std::string& anchor_id) override;
  Result<void> append(const std::string& anchor_id, const LedgerEntry& entry) override;
  Result<void> append_batch(const std::string& anchor_id,
                            std::span<const LedgerEntry> entries) override;
  Result<std::vector<LedgerEntry>> history(const std::string& anchor_id) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Wraps another backend with blockchain-shaped timing: every mutation
// completes no earlier than latency_ms after submission and sustained
// confirmations are token-bucket capped at cap_tps. Reads pass through
// immediately, like querying a chain node's local state.
class SimulatedChainLedger final : public LedgerBackend {
 public:
  SimulatedChainLedger(std::shared_ptr<LedgerBackend> inner, double latency_ms, double cap_tps);

  Result<void> create(const std::string& anchor_id) override;
  Result<bool> exists(const std::string& anchor_id) override;
  Result<void> append(const std::string& anchor_id, const LedgerEntry& entry) override;
  Result<void> append_batch(const std::string& anchor_id,
                            std::span<const LedgerEntry> entries) override;
  Result<std::vector<LedgerEntry>> history(const std::string& anchor_id) override;

  double latency_ms() const { return latency_ms_; }
  double cap_tps() const { return cap_tps_; }

 private:
  void take_tokens(size_t n);
  void hold_until(std::chrono::steady_clock::time_point deadline);

  std::shared_ptr<LedgerBackend> inner_;
  double latency_ms_;
  double cap_tps_;

  std::mutex bucket_mu_;
  double tokens_;
  double burst_;
  std::chrono::steady_clock::time_point last_refill_;
};

// Builds a backend from a BDNS-style descriptor (kind, latency, cap, path).
struct BackendSpec {
  std::string kind = "memory";  // memory | file-log | simulated-chain
  double latency_ms = 0;
  double cap_tps = 1e9;
  std::string log_path;  // file-log state; simulated-chain wraps it when set
  AnchorPolicy policy = AnchorPolicy::Light;
};

Result<std::shared_ptr<LedgerBackend>> make_ledger(const BackendSpec& spec);

}  // namespace dsukit::anchoring
