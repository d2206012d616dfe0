#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dsukit/errors.hpp"
#include "dsukit/ledger.hpp"

// Blockchain Domain Naming System: a trusted configuration table mapping
// hierarchical domain names ("subdomain.rootdomain.topdomain") to service
// endpoints. Resolution walks up the hierarchy, inheriting unset fields
// field-wise from ancestors.
namespace dsukit::bdns {

struct DomainRecord {
  std::string name;
  std::vector<std::string> anchoring_services;
  std::vector<std::string> brick_storages;
  std::vector<std::string> notification_services;
  std::optional<anchoring::BackendSpec> ledger_backend;
};

class BdnsTable {
 public:
  // Parses and validates a JSON object keyed by domain name. Duplicate
  // domain keys and malformed endpoints are config errors. Unknown fields
  // are preserved in the raw document but otherwise ignored.
  static Result<BdnsTable> from_json(std::string_view text);

  Result<DomainRecord> resolve(const std::string& name) const;
  std::vector<std::string> domains() const;
  const std::string& raw_json() const { return raw_; }
  bool empty() const { return records_.empty(); }

 private:
  std::map<std::string, DomainRecord> records_;  // as configured, possibly partial
  std::string raw_;
};

// Holds the active table snapshot for a deployment; readers keep using their
// snapshot while reload() swaps in a new one atomically. reload_if_changed()
// re-reads the file when its mtime moved.
class BdnsRegistry {
 public:
  BdnsRegistry() : table_(std::make_shared<BdnsTable>()) {}
  BdnsRegistry(const BdnsRegistry&) = delete;
  BdnsRegistry& operator=(const BdnsRegistry&) = delete;

  Result<void> open(const std::filesystem::path& config_path);
  std::shared_ptr<const BdnsTable> snapshot() const;
  Result<void> reload();
  Result<bool> reload_if_changed();

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::shared_ptr<const BdnsTable> table_;
  std::filesystem::file_time_type loaded_mtime_{};
};

}  // namespace dsukit::bdns
