#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <thread>

#include "dsukit/ledger.hpp"

// Anchor service: per-AnchorID append-only, signature-validated hash-link
// histories over a ledger backend, with two execution modes.
//
//   validated   acknowledge only after the backend's compare-and-append
//               confirms (paying its latency).
//   optimistic  acknowledge after signature + nonce validation against this
//               node's local view, submit asynchronously, and reconcile:
//               entries the ledger rejects become invalidated and emit an
//               event.
//
// The nonce is the previous tail hash-link; the first append uses the empty
// sentinel. A signature binds (anchor_id, new_link, expected_last), so a
// stale or replayed request can never be accepted twice.
namespace dsukit::anchoring {

enum class ExecMode { Optimistic, Validated };
enum class EntryStatus { PendingOptimistic, Confirmed, Invalidated };

const char* exec_mode_token(ExecMode m);
const char* entry_status_token(EntryStatus s);
std::optional<ExecMode> exec_mode_from_token(std::string_view token);

struct AppendReceipt {
  std::int64_t accepted_at_ms = 0;
  EntryStatus status = EntryStatus::Confirmed;
  std::string link;
};

struct VersionEntry {
  std::string link;
  std::string expected_last;
  keyssi::Signature signature;
  EntryStatus status = EntryStatus::Confirmed;
  std::int64_t timestamp_ms = 0;
};

struct InvalidationEvent {
  std::string anchor_id;
  std::string link;
  std::string reason;
  std::int64_t at_ms = 0;
};

struct ValidationReport {
  bool valid = true;
  std::optional<size_t> first_bad_index;
};

// Canonical byte string covered by an append signature.
std::string append_payload(const std::string& anchor_id, const std::string& link,
                           const std::string& expected_last);

// Wire format helpers shared by the HTTP surface and its client.
std::string versions_to_json(const std::string& anchor_id, std::span<const VersionEntry> entries);
Result<std::vector<VersionEntry>> versions_from_json(std::string_view text);
std::string receipt_to_json(const AppendReceipt& receipt);
Result<AppendReceipt> receipt_from_json(std::string_view text);

// Walks the chain verifying each entry's signature over
// (anchor_id, link[i], link[i-1]) against the anchor's committed public key,
// plus hash-link continuity. Any strict prefix of a valid history is valid.
ValidationReport validate_history(const std::string& anchor_id,
                                  std::span<const VersionEntry> history);

// Surface shared by the in-process service and the HTTP client.
class AnchorClient {
 public:
  virtual ~AnchorClient() = default;

  virtual Result<void> create_anchor(const std::string& anchor_id) = 0;
  virtual Result<AppendReceipt> append_version(const std::string& anchor_id,
                                               const std::string& new_link,
                                               const keyssi::Signature& sig,
                                               const std::string& expected_last, ExecMode mode) = 0;
  virtual Result<std::vector<VersionEntry>> get_versions(const std::string& anchor_id,
                                                         bool include_pending = false) = 0;
};

class AnchorService final : public AnchorClient {
 public:
  struct Options {
    // With background=false nothing is submitted or reconciled until the
    // caller pumps explicitly; deterministic harnesses rely on this.
    bool background = true;
    std::chrono::milliseconds reconcile_interval{1000};
  };

  explicit AnchorService(std::shared_ptr<LedgerBackend> ledger);
  AnchorService(std::shared_ptr<LedgerBackend> ledger, Options options);
  ~AnchorService() override;

  AnchorService(const AnchorService&) = delete;
  AnchorService& operator=(const AnchorService&) = delete;

  Result<void> create_anchor(const std::string& anchor_id) override;
  Result<AppendReceipt> append_version(const std::string& anchor_id, const std::string& new_link,
                                       const keyssi::Signature& sig,
                                       const std::string& expected_last, ExecMode mode) override;
  Result<std::vector<VersionEntry>> get_versions(const std::string& anchor_id,
                                                 bool include_pending = false) override;

  // Pull-based reconciliation against the ledger's confirmed tail: promotes
  // winners, invalidates losers, returns this call's events. Idempotent.
  Result<std::vector<InvalidationEvent>> reconcile(const std::string& anchor_id);

  // Manual submission stepping. pump_one submits the globally oldest
  // unsubmitted optimistic entry; returns false when the outbox is empty.
  Result<bool> pump_one();
  void pump_all();

  // Drives the outbox and reconciliation until no pending-optimistic entries
  // remain (or progress stalls). Used by benchmarks and tests.
  void quiesce();

  // Invalidation events accumulated from pumps and reconciles since the last
  // drain.
  std::vector<InvalidationEvent> drain_events();

  size_t pending_count() const;
  std::shared_ptr<LedgerBackend> ledger() const { return ledger_; }

 private:
  struct LocalAnchor {
    std::vector<VersionEntry> confirmed;
    std::deque<VersionEntry> pending;  // PendingOptimistic and Invalidated (audit)
  };

  struct OutboxItem {
    std::string anchor_id;
    std::string link;
  };

  // Local viable tail: confirmed tail extended by pending-optimistic entries.
  static std::string local_tail(const LocalAnchor& a);
  static void merge_confirmed(LocalAnchor& a, const std::vector<LedgerEntry>& ledger_entries);

  Result<LocalAnchor*> anchor_state_locked(const std::string& anchor_id,
                                           std::unique_lock<std::mutex>& lock);
  std::vector<InvalidationEvent> reconcile_against_locked(LocalAnchor& a,
                                                          const std::string& anchor_id,
                                                          const std::vector<LedgerEntry>& ledger);
  Result<bool> pump_front(bool batch);
  void worker_loop();

  std::shared_ptr<LedgerBackend> ledger_;
  Options options_;

  mutable std::mutex mu_;
  std::unordered_map<std::string, LocalAnchor> anchors_;
  std::deque<OutboxItem> outbox_;
  std::vector<InvalidationEvent> events_;

  std::condition_variable work_cv_;
  bool stop_ = false;
  std::thread worker_;
};

}  // namespace dsukit::anchoring
