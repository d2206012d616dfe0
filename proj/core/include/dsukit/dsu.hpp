#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "dsukit/anchoring.hpp"
#include "dsukit/brickstore.hpp"
#include "dsukit/keyssi.hpp"

// DSU containers: versioned micro key-value filesystems serialized to
// encrypted bricks and anchored per version. A handle mutates in memory
// only; nothing becomes observable to other handles until commit() anchors
// a new brick map.
namespace dsukit::dsu {

inline constexpr size_t kChunkSize = brickstore::kMaxBrickSize - crypto::kAeadOverhead;
inline constexpr int kMaxMountDepth = 64;

// Paths under this prefix carry a second encryption layer keyed to anchor
// rank, so read-rank holders cannot open them.
inline constexpr std::string_view kSecretPrefix = "/secret/";

struct BrickRef {
  std::string hash;  // hex brick key
  Bytes key;         // fresh 32-byte symmetric key for this brick
};

struct FileEntry {
  std::vector<BrickRef> bricks;
  std::uint64_t size = 0;  // length of the bricked byte stream
};

struct Committer {
  Bytes public_key;
  Bytes signature;  // over the canonical map bytes without the committer block
};

// Immutable manifest of one DSU version.
struct BrickMap {
  std::map<std::string, FileEntry> entries;
  std::map<std::string, std::string> mounts;  // mount point -> serialized KeySSI
  std::string previous;                       // predecessor hashlink, "" for the first version
  std::int64_t created_at_ms = 0;
  std::optional<Committer> committer;

  std::string to_canonical_json(bool include_committer = true) const;
  static Result<BrickMap> from_json(std::string_view text);
};

// Leading '/', no empty segments, no '.' or '..' segments, no trailing '/'.
Result<std::string> normalize_path(const std::string& path);

class KeyResolver;

class DsuHandle {
 public:
  DsuHandle(DsuHandle&&) = default;
  DsuHandle& operator=(DsuHandle&&) = default;
  DsuHandle(const DsuHandle&) = delete;
  DsuHandle& operator=(const DsuHandle&) = delete;

  Result<void> write_file(const std::string& path, Bytes content);
  Result<Bytes> read_file(const std::string& path);
  Result<std::vector<std::string>> list(const std::string& prefix = "/");
  Result<void> remove_file(const std::string& path);

  Result<void> mount(const std::string& mount_point, const keyssi::KeySsi& target);
  Result<void> unmount(const std::string& mount_point);

  // Follows mounts. Returns the handle owning `path` together with the
  // remainder path inside it; (this, path) when no mount applies. Detects
  // cycles via the visited-anchor set.
  Result<std::pair<DsuHandle*, std::string>> resolve_mounted(const std::string& path);

  // Serializes staged changes to bricks, anchors the new brick map, returns
  // its hashlink. On Errc::conflict the anchor moved and the caller must
  // reload before retrying.
  Result<std::string> commit(anchoring::ExecMode mode = anchoring::ExecMode::Validated);

  Result<std::vector<anchoring::VersionEntry>> history() const;

  // Personal identity whose signature is embedded in committed brick maps
  // and checked against /control/whitelist when that file exists.
  void set_committer(const keyssi::KeySsi& identity) { committer_identity_ = identity; }

  const keyssi::KeySsi& ssi() const { return ssi_; }
  keyssi::AccessRank rank() const { return ssi_.rank(); }
  const std::string& anchor_id() const { return anchor_id_; }
  const std::optional<std::string>& version() const { return version_; }
  bool has_changes() const { return dirty_; }
  size_t file_count() const { return files_.size(); }
  const std::map<std::string, std::string>& mounts() const { return mounts_; }
  Result<std::uint64_t> file_size(const std::string& path) const;

 private:
  friend class KeyResolver;
  DsuHandle() = default;

  struct FileState {
    std::optional<FileEntry> clean;
    std::optional<Bytes> staged;
  };

  bool content_access() const { return read_key_.has_value(); }
  bool write_access() const {
    return rank() == keyssi::AccessRank::Owner || rank() == keyssi::AccessRank::Anchor;
  }
  Result<Bytes> fetch_entry(const std::string& path, const FileEntry& entry) const;
  Result<Bytes> content_of(const std::string& path, const FileState& fs) const;
  Result<void> check_tree_conflicts(const std::string& path, bool as_mount) const;
  Result<std::pair<DsuHandle*, std::string>> resolve_mounted_impl(const std::string& path,
                                                                  std::set<std::string>& visited,
                                                                  int depth);
  std::optional<std::string> covering_mount(const std::string& path) const;
  Result<void> check_whitelist(const BrickMap& map) const;

  KeyResolver* resolver_ = nullptr;
  keyssi::KeySsi ssi_;
  std::string anchor_id_;
  std::string domain_;
  std::optional<Bytes> read_key_;
  std::map<std::string, FileState> files_;
  std::map<std::string, std::string> mounts_;
  std::optional<std::string> version_;
  bool dirty_ = false;
  std::optional<keyssi::KeySsi> committer_identity_;
  std::map<std::string, std::unique_ptr<DsuHandle>> mount_cache_;
};

// Resolves KeySSIs to DSU handles over a brick store and an anchor service.
// Must outlive the handles it creates.
class KeyResolver {
 public:
  KeyResolver(std::shared_ptr<brickstore::BrickStore> bricks,
              std::shared_ptr<anchoring::AnchorClient> anchors)
      : bricks_(std::move(bricks)), anchors_(std::move(anchors)) {}

  KeyResolver(const KeyResolver&) = delete;
  KeyResolver& operator=(const KeyResolver&) = delete;

  Result<DsuHandle> create_dsu(const keyssi::KeySsi& owner);

  // Pre-populated folder layout: /code, /control (modification whitelist),
  // /public (family public key), /private, /secret (anchor-rank only), and
  // /credentials mounted from `credential`.
  Result<DsuHandle> create_secret_dsu(const keyssi::KeySsi& owner, const keyssi::KeySsi& credential,
                                      const std::optional<keyssi::KeySsi>& committer = {});

  Result<DsuHandle> load_dsu(const keyssi::KeySsi& ssi,
                             const std::optional<std::string>& version = {});

  // const pattern: a human-memorable identifier resolving to a read-only,
  // single-version DSU whose sole payload is a strong identifier.
  Result<std::string> publish_const(const keyssi::KeySsi& const_ssi, const keyssi::KeySsi& strong);
  Result<keyssi::KeySsi> resolve_const(const keyssi::KeySsi& const_ssi);

  Result<std::vector<anchoring::VersionEntry>> history(const keyssi::KeySsi& ssi);

  brickstore::BrickStore& bricks() { return *bricks_; }
  anchoring::AnchorClient& anchors() { return *anchors_; }

 private:
  friend class DsuHandle;
  std::shared_ptr<brickstore::BrickStore> bricks_;
  std::shared_ptr<anchoring::AnchorClient> anchors_;
};

}  // namespace dsukit::dsu
