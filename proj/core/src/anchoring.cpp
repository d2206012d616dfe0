#include "dsukit/anchoring.hpp"

#include <algorithm>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace dsukit::anchoring {

namespace {

using nlohmann::json;

Result<keyssi::KeySsi> parse_anchor_id(const std::string& anchor_id) {
  auto ssi = keyssi::parse(anchor_id);
  if (!ssi.ok()) {
    return make_error(Errc::validation, "anchor id is not a parseable identifier", "anchor_id");
  }
  if (ssi.value().rank() != keyssi::AccessRank::ZeroAccess) {
    return make_error(Errc::validation, "anchor id must be a zero-access identifier", "anchor_id");
  }
  return ssi;
}

VersionEntry to_version(const LedgerEntry& e) {
  return VersionEntry{e.link, e.expected_last, e.signature, EntryStatus::Confirmed, e.timestamp_ms};
}

LedgerEntry to_ledger(const VersionEntry& e) {
  return LedgerEntry{e.link, e.expected_last, e.signature, e.timestamp_ms};
}

}  // namespace

const char* exec_mode_token(ExecMode m) {
  return m == ExecMode::Optimistic ? "optimistic" : "validated";
}

const char* entry_status_token(EntryStatus s) {
  switch (s) {
    case EntryStatus::PendingOptimistic: return "pending-optimistic";
    case EntryStatus::Confirmed: return "confirmed";
    case EntryStatus::Invalidated: return "invalidated";
  }
  return "unknown";
}

std::optional<ExecMode> exec_mode_from_token(std::string_view token) {
  if (token == "optimistic") return ExecMode::Optimistic;
  if (token == "validated") return ExecMode::Validated;
  return std::nullopt;
}

std::string append_payload(const std::string& anchor_id, const std::string& link,
                           const std::string& expected_last) {
  std::string payload;
  payload.reserve(anchor_id.size() + link.size() + expected_last.size() + 2);
  payload.append(anchor_id).push_back('\n');
  payload.append(link).push_back('\n');
  payload.append(expected_last);
  return payload;
}

std::string versions_to_json(const std::string& anchor_id, std::span<const VersionEntry> entries) {
  json j;
  j["anchor_id"] = anchor_id;
  json arr = json::array();
  for (const auto& e : entries) {
    json item;
    item["link"] = e.link;
    item["expected_last"] = e.expected_last;
    item["status"] = entry_status_token(e.status);
    item["timestamp_ms"] = e.timestamp_ms;
    item["signature"] = json::parse(keyssi::signature_to_json(e.signature));
    arr.push_back(std::move(item));
  }
  j["entries"] = std::move(arr);
  return j.dump();
}

Result<std::vector<VersionEntry>> versions_from_json(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("entries")) {
    return make_error(Errc::parse_error, "malformed versions payload");
  }
  std::vector<VersionEntry> out;
  try {
    for (const auto& item : j.at("entries")) {
      VersionEntry e;
      e.link = item.at("link").get<std::string>();
      e.expected_last = item.value("expected_last", "");
      const std::string status = item.value("status", "confirmed");
      if (status == "pending-optimistic") e.status = EntryStatus::PendingOptimistic;
      else if (status == "invalidated") e.status = EntryStatus::Invalidated;
      else e.status = EntryStatus::Confirmed;
      e.timestamp_ms = item.value("timestamp_ms", std::int64_t{0});
      auto sig = keyssi::signature_from_json(item.at("signature").dump());
      if (!sig.ok()) return sig.error();
      e.signature = std::move(sig).value();
      out.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    return make_error(Errc::parse_error, std::string("malformed versions payload: ") + ex.what());
  }
  return out;
}

std::string receipt_to_json(const AppendReceipt& receipt) {
  json j;
  j["accepted_at_ms"] = receipt.accepted_at_ms;
  j["status"] = entry_status_token(receipt.status);
  j["link"] = receipt.link;
  return j.dump();
}

Result<AppendReceipt> receipt_from_json(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return make_error(Errc::parse_error, "malformed receipt payload");
  }
  AppendReceipt r;
  r.accepted_at_ms = j.value("accepted_at_ms", std::int64_t{0});
  r.link = j.value("link", "");
  const std::string status = j.value("status", "confirmed");
  if (status == "pending-optimistic") r.status = EntryStatus::PendingOptimistic;
  else if (status == "invalidated") r.status = EntryStatus::Invalidated;
  else r.status = EntryStatus::Confirmed;
  return r;
}

ValidationReport validate_history(const std::string& anchor_id,
                                  std::span<const VersionEntry> history) {
  auto ssi = keyssi::parse(anchor_id);
  if (!ssi.ok()) return ValidationReport{false, 0};
  for (size_t i = 0; i < history.size(); ++i) {
    const std::string& prev = i == 0 ? std::string{} : history[i - 1].link;
    if (history[i].expected_last != prev) return ValidationReport{false, i};
    auto payload = to_bytes(append_payload(anchor_id, history[i].link, prev));
    if (!keyssi::verify(ssi.value(), payload, history[i].signature)) {
      return ValidationReport{false, i};
    }
  }
  return ValidationReport{true, std::nullopt};
}

// ---------------------------------------------------------------------------

AnchorService::AnchorService(std::shared_ptr<LedgerBackend> ledger)
    : AnchorService(std::move(ledger), Options{}) {}

AnchorService::AnchorService(std::shared_ptr<LedgerBackend> ledger, Options options)
    : ledger_(std::move(ledger)), options_(options) {
  if (options_.background) {
    worker_ = std::thread([this] { worker_loop(); });
  }
}

AnchorService::~AnchorService() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  work_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

std::string AnchorService::local_tail(const LocalAnchor& a) {
  for (auto it = a.pending.rbegin(); it != a.pending.rend(); ++it) {
    if (it->status == EntryStatus::PendingOptimistic) return it->link;
  }
  return a.confirmed.empty() ? std::string{} : a.confirmed.back().link;
}

void AnchorService::merge_confirmed(LocalAnchor& a, const std::vector<LedgerEntry>& ledger_entries) {
  a.confirmed.clear();
  a.confirmed.reserve(ledger_entries.size());
  for (const auto& e : ledger_entries) a.confirmed.push_back(to_version(e));
  // Drop pendings the ledger has since confirmed.
  std::unordered_set<std::string> confirmed_links;
  for (const auto& e : a.confirmed) confirmed_links.insert(e.link);
  std::erase_if(a.pending, [&](const VersionEntry& p) { return confirmed_links.contains(p.link); });
}

Result<AnchorService::LocalAnchor*> AnchorService::anchor_state_locked(
    const std::string& anchor_id, std::unique_lock<std::mutex>& lock) {
  auto it = anchors_.find(anchor_id);
  if (it != anchors_.end()) return &it->second;

  // Unknown locally: consult the ledger (another node may have created it).
  lock.unlock();
  auto known = ledger_->exists(anchor_id);
  if (!known.ok()) {
    lock.lock();
    return known.error();
  }
  if (!known.value()) {
    lock.lock();
    return make_error(Errc::not_found, "unknown anchor", "anchor_id");
  }
  auto hist = ledger_->history(anchor_id);
  lock.lock();
  if (!hist.ok()) return hist.error();
  auto& state = anchors_[anchor_id];
  if (state.confirmed.empty()) merge_confirmed(state, hist.value());
  return &state;
}

Result<void> AnchorService::create_anchor(const std::string& anchor_id) {
  if (auto p = parse_anchor_id(anchor_id); !p.ok()) return p.error();
  if (auto c = ledger_->create(anchor_id); !c.ok()) return c.error();
  std::lock_guard lock(mu_);
  anchors_.try_emplace(anchor_id);
  return {};
}

Result<AppendReceipt> AnchorService::append_version(const std::string& anchor_id,
                                                    const std::string& new_link,
                                                    const keyssi::Signature& sig,
                                                    const std::string& expected_last,
                                                    ExecMode mode) {
  auto anchor_ssi = parse_anchor_id(anchor_id);
  if (!anchor_ssi.ok()) return anchor_ssi.error();
  auto link_ssi = keyssi::parse(new_link);
  if (!link_ssi.ok() || link_ssi.value().type != keyssi::SsiType::HashLink) {
    return make_error(Errc::validation, "new_link must be a hashlink identifier", "new_link");
  }

  auto payload = to_bytes(append_payload(anchor_id, new_link, expected_last));
  if (!keyssi::verify(anchor_ssi.value(), payload, sig)) {
    return make_error(Errc::auth, "signature does not bind this request to the anchor",
                      "signature");
  }

  std::unique_lock lock(mu_);
  auto state = anchor_state_locked(anchor_id, lock);
  if (!state.ok()) return state.error();

  VersionEntry entry{new_link, expected_last, sig, EntryStatus::PendingOptimistic,
                     wall_clock_ms()};

  if (mode == ExecMode::Validated) {
    lock.unlock();
    auto r = ledger_->append(anchor_id, to_ledger(entry));
    if (!r.ok()) {
      if (r.error().code == Errc::conflict) {
        // Refresh the local view so callers can reload before retrying.
        auto hist = ledger_->history(anchor_id);
        if (hist.ok()) {
          lock.lock();
          merge_confirmed(anchors_[anchor_id], hist.value());
          lock.unlock();
        }
      }
      return r.error();
    }
    entry.status = EntryStatus::Confirmed;
    lock.lock();
    auto& a = anchors_[anchor_id];
    if (a.confirmed.empty() || a.confirmed.back().link != new_link) {
      a.confirmed.push_back(entry);
    }
    return AppendReceipt{wall_clock_ms(), EntryStatus::Confirmed, new_link};
  }

  // Optimistic: the node's local view is the nonce authority at ack time.
  LocalAnchor& a = *state.value();
  if (expected_last != local_tail(a)) {
    return make_error(Errc::conflict, "expected_last is stale on this node", "expected_last");
  }
  a.pending.push_back(entry);
  outbox_.push_back(OutboxItem{anchor_id, new_link});
  lock.unlock();
  work_cv_.notify_all();
  return AppendReceipt{wall_clock_ms(), EntryStatus::PendingOptimistic, new_link};
}

Result<std::vector<VersionEntry>> AnchorService::get_versions(const std::string& anchor_id,
                                                              bool include_pending) {
  std::unique_lock lock(mu_);
  auto state = anchor_state_locked(anchor_id, lock);
  if (!state.ok()) return state.error();
  std::vector<VersionEntry> out = state.value()->confirmed;
  if (include_pending) {
    for (const auto& p : state.value()->pending) out.push_back(p);
  }
  return out;
}

std::vector<InvalidationEvent> AnchorService::reconcile_against_locked(
    LocalAnchor& a, const std::string& anchor_id, const std::vector<LedgerEntry>& ledger) {
  std::vector<InvalidationEvent> events;
  merge_confirmed(a, ledger);
  std::string viable_tail = a.confirmed.empty() ? std::string{} : a.confirmed.back().link;
  for (auto& p : a.pending) {
    if (p.status != EntryStatus::PendingOptimistic) continue;
    if (p.expected_last == viable_tail) {
      viable_tail = p.link;  // still submittable
      continue;
    }
    p.status = EntryStatus::Invalidated;
    InvalidationEvent ev{anchor_id, p.link, "ledger-conflict", wall_clock_ms()};
    events.push_back(ev);
    events_.push_back(ev);
    std::erase_if(outbox_, [&](const OutboxItem& o) {
      return o.anchor_id == anchor_id && o.link == p.link;
    });
  }
  return events;
}

Result<std::vector<InvalidationEvent>> AnchorService::reconcile(const std::string& anchor_id) {
  auto hist = ledger_->history(anchor_id);
  if (!hist.ok()) {
    if (hist.error().code == Errc::not_found) return hist.error();
    return make_error(Errc::retryable, "ledger backend unavailable: " + hist.error().message);
  }
  std::lock_guard lock(mu_);
  return reconcile_against_locked(anchors_[anchor_id], anchor_id, hist.value());
}

Result<bool> AnchorService::pump_front(bool batch) {
  std::vector<LedgerEntry> chain;
  std::string anchor_id;
  {
    std::lock_guard lock(mu_);
    while (!outbox_.empty()) {
      const OutboxItem& front = outbox_.front();
      auto it = anchors_.find(front.anchor_id);
      const VersionEntry* entry = nullptr;
      if (it != anchors_.end()) {
        for (const auto& p : it->second.pending) {
          if (p.link == front.link && p.status == EntryStatus::PendingOptimistic) {
            entry = &p;
            break;
          }
        }
      }
      if (entry == nullptr) {
        outbox_.pop_front();  // invalidated or promoted meanwhile
        continue;
      }
      if (chain.empty()) {
        anchor_id = front.anchor_id;
      } else if (front.anchor_id != anchor_id) {
        break;  // next round handles the other anchor
      }
      chain.push_back(to_ledger(*entry));
      outbox_.pop_front();
      if (!batch) break;
    }
  }
  if (chain.empty()) return false;

  auto r = ledger_->append_batch(anchor_id, chain);

  std::unique_lock lock(mu_);
  auto& a = anchors_[anchor_id];
  if (r.ok()) {
    for (const auto& e : chain) {
      for (auto it = a.pending.begin(); it != a.pending.end(); ++it) {
        if (it->link == e.link) {
          VersionEntry confirmed = *it;
          confirmed.status = EntryStatus::Confirmed;
          a.pending.erase(it);
          a.confirmed.push_back(std::move(confirmed));
          break;
        }
      }
    }
    return true;
  }

  // Rejected: flag the whole chain (its base nonce is stale) and refresh.
  for (const auto& e : chain) {
    for (auto& p : a.pending) {
      if (p.link == e.link && p.status == EntryStatus::PendingOptimistic) {
        p.status = EntryStatus::Invalidated;
        events_.push_back(InvalidationEvent{anchor_id, p.link, "ledger-conflict", wall_clock_ms()});
      }
    }
  }
  lock.unlock();
  auto hist = ledger_->history(anchor_id);
  if (hist.ok()) {
    lock.lock();
    merge_confirmed(anchors_[anchor_id], hist.value());
  }
  return true;
}

Result<bool> AnchorService::pump_one() { return pump_front(false); }

void AnchorService::pump_all() {
  while (true) {
    auto r = pump_front(true);
    if (!r.ok() || !r.value()) break;
  }
}

void AnchorService::quiesce() {
  for (int spin = 0; spin < 10000; ++spin) {
    pump_all();
    std::vector<std::string> ids;
    {
      std::lock_guard lock(mu_);
      for (const auto& [id, a] : anchors_) {
        for (const auto& p : a.pending) {
          if (p.status == EntryStatus::PendingOptimistic) {
            ids.push_back(id);
            break;
          }
        }
      }
    }
    if (ids.empty()) return;
    for (const auto& id : ids) (void)reconcile(id);
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
}

std::vector<InvalidationEvent> AnchorService::drain_events() {
  std::lock_guard lock(mu_);
  return std::exchange(events_, {});
}

size_t AnchorService::pending_count() const {
  std::lock_guard lock(mu_);
  size_t n = 0;
  for (const auto& [id, a] : anchors_) {
    for (const auto& p : a.pending) {
      if (p.status == EntryStatus::PendingOptimistic) ++n;
    }
  }
  return n;
}

void AnchorService::worker_loop() {
  auto last_reconcile = std::chrono::steady_clock::now();
  while (true) {
    {
      std::unique_lock lock(mu_);
      work_cv_.wait_for(lock, options_.reconcile_interval,
                        [this] { return stop_ || !outbox_.empty(); });
      if (stop_) return;
    }
    pump_all();
    auto now = std::chrono::steady_clock::now();
    if (now - last_reconcile >= options_.reconcile_interval) {
      last_reconcile = now;
      std::vector<std::string> ids;
      {
        std::lock_guard lock(mu_);
        for (const auto& [id, a] : anchors_) {
          if (!a.pending.empty()) ids.push_back(id);
        }
      }
      for (const auto& id : ids) (void)reconcile(id);
    }
  }
}

}  // namespace dsukit::anchoring
