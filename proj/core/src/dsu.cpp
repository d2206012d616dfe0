#include "dsukit/dsu.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace dsukit::dsu {

namespace {

using nlohmann::json;

bool under_prefix(const std::string& path, const std::string& prefix) {
  if (prefix == "/") return true;
  return path == prefix || (path.size() > prefix.size() && path.starts_with(prefix) &&
                            path[prefix.size()] == '/');
}

bool is_secret_path(const std::string& path) { return path.starts_with(kSecretPrefix); }

std::string first_confirmed_error() { return "const identifier has no published version"; }

}  // namespace

std::string BrickMap::to_canonical_json(bool include_committer) const {
  json j;
  j["created_at_ms"] = created_at_ms;
  json files = json::object();
  for (const auto& [path, entry] : entries) {
    json bricks = json::array();
    for (const auto& b : entry.bricks) {
      bricks.push_back({{"hash", b.hash}, {"key", encoding::b64url_encode(b.key)}});
    }
    files[path] = {{"bricks", std::move(bricks)}, {"size", entry.size}};
  }
  j["entries"] = std::move(files);
  j["mounts"] = mounts;
  j["previous"] = previous;
  if (include_committer && committer) {
    j["committer"] = {{"public_key", encoding::b64url_encode(committer->public_key)},
                      {"signature", encoding::b64url_encode(committer->signature)}};
  }
  return j.dump();
}

Result<BrickMap> BrickMap::from_json(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return make_error(Errc::corruption, "brick map is not valid JSON");
  }
  BrickMap map;
  try {
    map.created_at_ms = j.value("created_at_ms", std::int64_t{0});
    map.previous = j.value("previous", "");
    for (const auto& [path, body] : j.at("entries").items()) {
      FileEntry entry;
      entry.size = body.at("size").get<std::uint64_t>();
      for (const auto& b : body.at("bricks")) {
        auto key = encoding::b64url_decode(b.at("key").get<std::string>());
        if (!key.ok()) return make_error(Errc::corruption, "bad brick key encoding");
        entry.bricks.push_back(BrickRef{b.at("hash").get<std::string>(), std::move(key).value()});
      }
      map.entries.emplace(path, std::move(entry));
    }
    if (j.contains("mounts")) {
      for (const auto& [point, target] : j.at("mounts").items()) {
        map.mounts.emplace(point, target.get<std::string>());
      }
    }
    if (j.contains("committer")) {
      auto pk = encoding::b64url_decode(j.at("committer").at("public_key").get<std::string>());
      auto sg = encoding::b64url_decode(j.at("committer").at("signature").get<std::string>());
      if (!pk.ok() || !sg.ok()) return make_error(Errc::corruption, "bad committer encoding");
      map.committer = Committer{std::move(pk).value(), std::move(sg).value()};
    }
  } catch (const json::exception& ex) {
    return make_error(Errc::corruption, std::string("malformed brick map: ") + ex.what());
  }
  return map;
}

Result<std::string> normalize_path(const std::string& path) {
  if (path.empty() || path[0] != '/') {
    return make_error(Errc::validation, "path must start with '/'", "path");
  }
  std::string out;
  size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    if (i >= path.size()) break;
    size_t j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    std::string_view seg(path.data() + i, j - i);
    if (seg == "." || seg == "..") {
      return make_error(Errc::validation, "'.' and '..' segments are not allowed", "path");
    }
    out.push_back('/');
    out.append(seg);
    i = j;
  }
  if (out.empty()) out = "/";
  return out;
}

// ---------------------------------------------------------------------------
// DsuHandle

Result<Bytes> DsuHandle::fetch_entry(const std::string& path, const FileEntry& entry) const {
  Bytes blob;
  blob.reserve(entry.size);
  for (const auto& brick : entry.bricks) {
    auto ct = resolver_->bricks_->get(domain_, brick.hash);
    if (!ct.ok()) return ct.error();
    auto pt = crypto::aead_decrypt(brick.key, ct.value());
    if (!pt.ok()) return make_error(Errc::corruption, "brick does not decrypt with its map key");
    blob.insert(blob.end(), pt.value().begin(), pt.value().end());
  }
  if (is_secret_path(path)) {
    auto key = keyssi::secret_folder_key(ssi_);
    if (!key.ok()) return make_error(Errc::privilege, "secret folder requires anchor rank");
    auto pt = crypto::aead_decrypt(key.value(), blob);
    if (!pt.ok()) return make_error(Errc::privilege, "secret folder requires anchor rank");
    return pt;
  }
  return blob;
}

Result<Bytes> DsuHandle::content_of(const std::string& path, const FileState& fs) const {
  if (fs.staged) return *fs.staged;
  if (fs.clean) return fetch_entry(path, *fs.clean);
  return make_error(Errc::not_found, "no such file", "path");
}

std::optional<std::string> DsuHandle::covering_mount(const std::string& path) const {
  std::optional<std::string> best;
  for (const auto& [point, target] : mounts_) {
    if (under_prefix(path, point) && (!best || point.size() > best->size())) best = point;
  }
  return best;
}

Result<std::pair<DsuHandle*, std::string>> DsuHandle::resolve_mounted(const std::string& path) {
  auto norm = normalize_path(path);
  if (!norm.ok()) return norm.error();
  std::set<std::string> visited{anchor_id_};
  return resolve_mounted_impl(norm.value(), visited, 0);
}

Result<std::pair<DsuHandle*, std::string>> DsuHandle::resolve_mounted_impl(
    const std::string& path, std::set<std::string>& visited, int depth) {
  if (depth > kMaxMountDepth) {
    return make_error(Errc::cycle, "mount chain exceeds depth limit");
  }
  auto point = covering_mount(path);
  if (!point) return std::pair<DsuHandle*, std::string>{this, path};

  auto it = mount_cache_.find(*point);
  if (it == mount_cache_.end()) {
    auto target_ssi = keyssi::parse(mounts_.at(*point));
    if (!target_ssi.ok()) {
      return make_error(Errc::validation, "mounted identifier does not parse", "mount");
    }
    auto target = resolver_->load_dsu(target_ssi.value());
    if (!target.ok()) return target.error();
    auto owned = std::make_unique<DsuHandle>(std::move(target).value());
    it = mount_cache_.emplace(*point, std::move(owned)).first;
  }
  DsuHandle* target = it->second.get();
  if (!visited.insert(target->anchor_id_).second) {
    return make_error(Errc::cycle, "mount cycle detected at " + *point);
  }
  std::string remainder = path.substr(point->size());
  if (remainder.empty()) remainder = "/";
  return target->resolve_mounted_impl(remainder, visited, depth + 1);
}

Result<void> DsuHandle::check_tree_conflicts(const std::string& path, bool as_mount) const {
  for (const auto& [existing, state] : files_) {
    (void)state;
    if (existing == path) {
      if (as_mount) return make_error(Errc::conflict, "mount point collides with file " + existing);
      continue;  // plain overwrite
    }
    if (under_prefix(existing, path)) {
      return make_error(Errc::conflict, "existing file " + existing + " lies under " + path);
    }
    if (under_prefix(path, existing)) {
      return make_error(Errc::conflict, existing + " is a file, not a directory");
    }
  }
  for (const auto& [point, target] : mounts_) {
    (void)target;
    if (point == path || under_prefix(point, path) || under_prefix(path, point)) {
      return make_error(Errc::conflict, "path overlaps mount point " + point);
    }
  }
  return {};
}

Result<void> DsuHandle::write_file(const std::string& path, Bytes content) {
  auto norm = normalize_path(path);
  if (!norm.ok()) return norm.error();
  if (norm.value() == "/") return make_error(Errc::validation, "cannot write to '/'", "path");

  auto resolved = resolve_mounted(norm.value());
  if (!resolved.ok()) return resolved.error();
  auto [target, rest] = resolved.value();
  if (target != this) return target->write_file(rest, std::move(content));

  if (!write_access()) {
    return make_error(Errc::privilege, std::string("rank '") + keyssi::rank_name(rank()) +
                                           "' cannot write");
  }
  if (auto c = check_tree_conflicts(norm.value(), /*as_mount=*/false); !c.ok()) return c.error();
  auto& fs = files_[norm.value()];
  fs.staged = std::move(content);
  dirty_ = true;
  return {};
}

Result<Bytes> DsuHandle::read_file(const std::string& path) {
  auto norm = normalize_path(path);
  if (!norm.ok()) return norm.error();

  auto resolved = resolve_mounted(norm.value());
  if (!resolved.ok()) return resolved.error();
  auto [target, rest] = resolved.value();
  if (target != this) return target->read_file(rest);

  if (!content_access()) {
    return make_error(Errc::privilege, std::string("rank '") + keyssi::rank_name(rank()) +
                                           "' has no content access");
  }
  auto it = files_.find(norm.value());
  if (it == files_.end()) return make_error(Errc::not_found, "no such file", "path");
  return content_of(norm.value(), it->second);
}

Result<std::vector<std::string>> DsuHandle::list(const std::string& prefix) {
  auto norm = normalize_path(prefix);
  if (!norm.ok()) return norm.error();

  auto resolved = resolve_mounted(norm.value());
  if (!resolved.ok()) return resolved.error();
  auto [target, rest] = resolved.value();
  if (target != this) return target->list(rest);

  if (!content_access()) {
    return make_error(Errc::privilege, std::string("rank '") + keyssi::rank_name(rank()) +
                                           "' has no content access");
  }
  const bool hide_secret = rank() != keyssi::AccessRank::Owner &&
                           rank() != keyssi::AccessRank::Anchor;
  std::vector<std::string> out;
  for (const auto& [path, state] : files_) {
    (void)state;
    if (!under_prefix(path, norm.value())) continue;
    if (hide_secret && is_secret_path(path)) continue;
    out.push_back(path);
  }
  for (const auto& [point, t] : mounts_) {
    (void)t;
    if (under_prefix(point, norm.value())) out.push_back(point);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Result<void> DsuHandle::remove_file(const std::string& path) {
  auto norm = normalize_path(path);
  if (!norm.ok()) return norm.error();

  auto resolved = resolve_mounted(norm.value());
  if (!resolved.ok()) return resolved.error();
  auto [target, rest] = resolved.value();
  if (target != this) return target->remove_file(rest);

  if (!write_access()) {
    return make_error(Errc::privilege, std::string("rank '") + keyssi::rank_name(rank()) +
                                           "' cannot delete");
  }
  if (files_.erase(norm.value()) == 0) {
    return make_error(Errc::not_found, "no such file", "path");
  }
  dirty_ = true;
  return {};
}

Result<void> DsuHandle::mount(const std::string& mount_point, const keyssi::KeySsi& target) {
  if (!write_access()) {
    return make_error(Errc::privilege, std::string("rank '") + keyssi::rank_name(rank()) +
                                           "' cannot mount");
  }
  auto norm = normalize_path(mount_point);
  if (!norm.ok()) return norm.error();
  if (norm.value() == "/") return make_error(Errc::validation, "cannot mount over '/'", "mount");
  if (auto c = check_tree_conflicts(norm.value(), /*as_mount=*/true); !c.ok()) return c.error();
  mounts_[norm.value()] = target.str();
  dirty_ = true;
  return {};
}

Result<void> DsuHandle::unmount(const std::string& mount_point) {
  if (!write_access()) {
    return make_error(Errc::privilege, "insufficient rank to unmount");
  }
  auto norm = normalize_path(mount_point);
  if (!norm.ok()) return norm.error();
  if (mounts_.erase(norm.value()) == 0) {
    return make_error(Errc::not_found, "no such mount point", "mount");
  }
  mount_cache_.erase(norm.value());
  dirty_ = true;
  return {};
}

Result<void> DsuHandle::check_whitelist(const BrickMap& map) const {
  auto it = files_.find("/control/whitelist");
  if (it == files_.end()) return {};

  // The whitelist in force is the one of the version being superseded; only
  // the very first commit may introduce it.
  Bytes content;
  if (version_ && it->second.clean) {
    auto c = fetch_entry("/control/whitelist", *it->second.clean);
    if (!c.ok()) return c.error();
    content = std::move(c).value();
  } else if (it->second.staged) {
    content = *it->second.staged;
  } else {
    return {};
  }

  if (!map.committer) {
    return make_error(Errc::privilege, "this DSU requires a whitelisted committer signature");
  }
  const std::string committer_b64 = encoding::b64url_encode(map.committer->public_key);
  std::string text(content.begin(), content.end());
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    std::string line = text.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
    if (line == committer_b64) return {};
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return make_error(Errc::privilege, "committer public key is not whitelisted");
}

Result<std::string> DsuHandle::commit(anchoring::ExecMode mode) {
  if (!write_access()) {
    return make_error(Errc::privilege, std::string("rank '") + keyssi::rank_name(rank()) +
                                           "' cannot commit");
  }
  if (!dirty_) return make_error(Errc::no_changes, "nothing to commit");

  BrickMap map;
  map.created_at_ms = anchoring::wall_clock_ms();
  map.previous = version_.value_or("");
  map.mounts = mounts_;

  // Brick every staged file; unchanged files re-use their existing bricks.
  std::map<std::string, FileEntry> fresh;
  for (auto& [path, fs] : files_) {
    if (!fs.staged) {
      if (!fs.clean) continue;
      map.entries.emplace(path, *fs.clean);
      continue;
    }
    Bytes stream = *fs.staged;
    if (is_secret_path(path)) {
      auto key = keyssi::secret_folder_key(ssi_);
      if (!key.ok()) return key.error();
      stream = crypto::aead_encrypt(key.value(), stream);
    }
    FileEntry entry;
    entry.size = stream.size();
    // Empty files keep a zero-brick entry.
    for (size_t off = 0; off < stream.size(); off += kChunkSize) {
      size_t n = std::min(kChunkSize, stream.size() - off);
      Bytes chunk_key = crypto::random_bytes(crypto::kSymmetricKeySize);
      Bytes ciphertext =
          crypto::aead_encrypt(chunk_key, std::span(stream.data() + off, n));
      auto hash = resolver_->bricks_->put(domain_, ciphertext);
      if (!hash.ok()) return hash.error();  // anchor untouched
      entry.bricks.push_back(BrickRef{std::move(hash).value(), std::move(chunk_key)});
    }
    fresh.emplace(path, entry);
    map.entries.emplace(path, std::move(entry));
  }

  if (committer_identity_) {
    auto payload = to_bytes(map.to_canonical_json(/*include_committer=*/false));
    auto sig = keyssi::sign(*committer_identity_, payload);
    if (!sig.ok()) return sig.error();
    map.committer = Committer{sig.value().public_key, sig.value().bytes};
  }
  if (auto w = check_whitelist(map); !w.ok()) return w.error();

  if (!read_key_) return make_error(Errc::privilege, "no read key available");
  Bytes map_ct = crypto::aead_encrypt(*read_key_, to_bytes(map.to_canonical_json()));
  auto map_hash = resolver_->bricks_->put(domain_, map_ct);
  if (!map_hash.ok()) return map_hash.error();

  auto link = keyssi::make_hashlink(domain_, map_hash.value());
  if (!link.ok()) return link.error();
  const std::string link_str = link.value().str();
  const std::string expected = version_.value_or("");

  auto payload = to_bytes(anchoring::append_payload(anchor_id_, link_str, expected));
  auto sig = keyssi::sign(ssi_, payload);
  if (!sig.ok()) return sig.error();

  auto receipt = resolver_->anchors_->append_version(anchor_id_, link_str, sig.value(), expected,
                                                     mode);
  if (!receipt.ok()) {
    if (receipt.error().code == Errc::conflict) {
      return make_error(Errc::conflict,
                        "anchor advanced underneath this handle; reload and retry");
    }
    return receipt.error();
  }

  version_ = link_str;
  for (auto& [path, entry] : fresh) {
    auto& fs = files_[path];
    fs.clean = std::move(entry);
    fs.staged.reset();
  }
  dirty_ = false;
  return link_str;
}

Result<std::vector<anchoring::VersionEntry>> DsuHandle::history() const {
  return resolver_->anchors_->get_versions(anchor_id_);
}

Result<std::uint64_t> DsuHandle::file_size(const std::string& path) const {
  auto norm = normalize_path(path);
  if (!norm.ok()) return norm.error();
  auto it = files_.find(norm.value());
  if (it == files_.end()) return make_error(Errc::not_found, "no such file", "path");
  if (it->second.staged) return static_cast<std::uint64_t>(it->second.staged->size());
  return it->second.clean->size;
}

// ---------------------------------------------------------------------------
// KeyResolver

Result<DsuHandle> KeyResolver::create_dsu(const keyssi::KeySsi& owner) {
  keyssi::KeySsi root = owner;
  if (root.type == keyssi::SsiType::Const) {
    auto backing = keyssi::const_backing_owner(root);
    if (!backing.ok()) return backing.error();
    root = std::move(backing).value();
  }
  if (root.rank() != keyssi::AccessRank::Owner) {
    return make_error(Errc::privilege, "creating a DSU requires owner rank");
  }
  auto anchor = keyssi::anchor_id_of(root);
  if (!anchor.ok()) return anchor.error();

  auto created = anchors_->create_anchor(anchor.value().str());
  if (!created.ok()) {
    if (created.error().code == Errc::already_exists) {
      return make_error(Errc::conflict, "a DSU for this identifier already exists");
    }
    return created.error();
  }

  DsuHandle handle;
  handle.resolver_ = this;
  handle.ssi_ = root;
  handle.anchor_id_ = anchor.value().str();
  handle.domain_ = root.domain;
  auto key = keyssi::encryption_key(root);
  if (!key.ok()) return key.error();
  handle.read_key_ = std::move(key).value();
  return handle;
}

Result<DsuHandle> KeyResolver::create_secret_dsu(const keyssi::KeySsi& owner,
                                                 const keyssi::KeySsi& credential,
                                                 const std::optional<keyssi::KeySsi>& committer) {
  if (owner.type != keyssi::SsiType::Secret) {
    return make_error(Errc::validation, "secret DSUs require a secret-family owner identifier");
  }
  auto created = create_dsu(owner);
  if (!created.ok()) return created.error();
  DsuHandle handle = std::move(created).value();

  if (auto r = handle.write_file("/code/dsu-type", to_bytes("secret")); !r.ok()) return r.error();

  auto family_pub = keyssi::signing_public_key(owner);
  if (!family_pub.ok()) return family_pub.error();
  if (auto r = handle.write_file("/public/key", to_bytes(encoding::b64url_encode(family_pub.value())));
      !r.ok()) {
    return r.error();
  }
  if (auto r = handle.write_file("/private/.keep", Bytes{}); !r.ok()) return r.error();

  auto anchor_rank = keyssi::derive_to(owner, keyssi::AccessRank::Anchor);
  if (!anchor_rank.ok()) return anchor_rank.error();
  if (auto r = handle.write_file("/secret/anchor.key", to_bytes(anchor_rank.value().str()));
      !r.ok()) {
    return r.error();
  }

  if (committer) {
    auto pub = keyssi::signing_public_key(*committer);
    if (!pub.ok()) return pub.error();
    std::string whitelist = encoding::b64url_encode(pub.value()) + "\n";
    if (auto r = handle.write_file("/control/whitelist", to_bytes(whitelist)); !r.ok()) {
      return r.error();
    }
    handle.set_committer(*committer);
  }

  if (auto r = handle.mount("/credentials", credential); !r.ok()) return r.error();
  return handle;
}

Result<DsuHandle> KeyResolver::load_dsu(const keyssi::KeySsi& ssi,
                                        const std::optional<std::string>& version) {
  keyssi::KeySsi holder = ssi;
  if (holder.type == keyssi::SsiType::Const) {
    auto backing = keyssi::const_backing_owner(holder);
    if (!backing.ok()) return backing.error();
    holder = std::move(backing).value();
  }
  if (holder.rank() == keyssi::AccessRank::None) {
    return make_error(Errc::validation, "identifier does not resolve to a DSU");
  }
  auto anchor = keyssi::anchor_id_of(holder);
  if (!anchor.ok()) return anchor.error();
  const std::string anchor_id = anchor.value().str();

  auto versions = anchors_->get_versions(anchor_id);
  if (!versions.ok()) return versions.error();
  auto report = anchoring::validate_history(anchor_id, versions.value());
  if (!report.valid) {
    return make_error(Errc::corruption, "anchor history fails validation at index " +
                                            std::to_string(*report.first_bad_index));
  }

  std::optional<std::string> chosen;
  if (version) {
    bool found = false;
    for (const auto& v : versions.value()) {
      if (v.link == *version) {
        found = true;
        break;
      }
    }
    if (!found) return make_error(Errc::not_found, "unknown version", "version");
    chosen = version;
  } else if (!versions.value().empty()) {
    chosen = versions.value().back().link;
  }

  DsuHandle handle;
  handle.resolver_ = this;
  handle.ssi_ = holder;
  handle.anchor_id_ = anchor_id;
  handle.domain_ = holder.domain;
  if (auto key = keyssi::encryption_key(holder); key.ok()) {
    handle.read_key_ = std::move(key).value();
  }
  handle.version_ = chosen;

  if (!chosen || !handle.read_key_) return handle;  // zero-access / public: history only

  auto link = keyssi::parse(*chosen);
  if (!link.ok() || link.value().type != keyssi::SsiType::HashLink) {
    return make_error(Errc::corruption, "anchored version is not a hashlink");
  }
  auto map_ct = bricks_->get(link.value().domain, link.value().type_specific);
  if (!map_ct.ok()) return map_ct.error();
  auto map_pt = crypto::aead_decrypt(*handle.read_key_, map_ct.value());
  if (!map_pt.ok()) {
    return make_error(Errc::auth, "access denied: brick map does not decrypt with this family");
  }
  auto map = BrickMap::from_json(to_string(map_pt.value()));
  if (!map.ok()) return map.error();
  for (auto& [path, entry] : map.value().entries) {
    handle.files_[path].clean = std::move(entry);
  }
  handle.mounts_ = std::move(map.value().mounts);
  return handle;
}

Result<std::string> KeyResolver::publish_const(const keyssi::KeySsi& const_ssi,
                                               const keyssi::KeySsi& strong) {
  auto created = create_dsu(const_ssi);
  if (!created.ok()) {
    if (created.error().code == Errc::conflict) {
      return make_error(Errc::immutable, "const identifier is already published");
    }
    return created.error();
  }
  DsuHandle handle = std::move(created).value();
  if (auto r = handle.write_file("/keyssi", to_bytes(strong.str())); !r.ok()) return r.error();
  return handle.commit(anchoring::ExecMode::Validated);
}

Result<keyssi::KeySsi> KeyResolver::resolve_const(const keyssi::KeySsi& const_ssi) {
  auto backing = keyssi::const_backing_owner(const_ssi);
  if (!backing.ok()) return backing.error();
  auto anchor = keyssi::anchor_id_of(backing.value());
  if (!anchor.ok()) return anchor.error();

  auto versions = anchors_->get_versions(anchor.value().str());
  if (!versions.ok()) return versions.error();
  if (versions.value().empty()) {
    return make_error(Errc::not_found, first_confirmed_error());
  }
  // Immutability: resolution always pins the first anchored version.
  auto handle = load_dsu(backing.value(), versions.value().front().link);
  if (!handle.ok()) return handle.error();
  auto payload = handle.value().read_file("/keyssi");
  if (!payload.ok()) return payload.error();
  auto parsed = keyssi::parse(to_string(payload.value()));
  if (!parsed.ok()) {
    return make_error(Errc::corruption, "const DSU payload is not a parseable identifier");
  }
  return parsed;
}

Result<std::vector<anchoring::VersionEntry>> KeyResolver::history(const keyssi::KeySsi& ssi) {
  auto anchor = keyssi::anchor_id_of(ssi);
  if (!anchor.ok()) return anchor.error();
  return anchors_->get_versions(anchor.value().str());
}

}  // namespace dsukit::dsu
