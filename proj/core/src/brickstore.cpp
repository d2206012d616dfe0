#include "dsukit/brickstore.hpp"

#include <fstream>
#include <system_error>

#include "dsukit/crypto.hpp"
#include "dsukit/keyssi.hpp"

namespace dsukit::brickstore {

namespace fs = std::filesystem;

namespace {

Result<void> validate_put(const std::string& domain, std::span<const std::uint8_t> ciphertext) {
  if (auto d = keyssi::validate_domain(domain); !d.ok()) return d.error();
  if (ciphertext.empty()) return make_error(Errc::validation, "empty brick payload", "body");
  if (ciphertext.size() > kMaxBrickSize) {
    return make_error(Errc::validation, "brick exceeds 1 MiB", "body");
  }
  return {};
}

}  // namespace

bool verify_brick(const std::string& hash_hex, std::span<const std::uint8_t> data) {
  if (!validate_brick_key(hash_hex).ok()) return false;
  return encoding::hex_encode(crypto::sha256(data)) == hash_hex;
}

Result<void> validate_brick_key(const std::string& hash_hex) {
  auto raw = encoding::hex_decode(hash_hex);
  if (!raw.ok() || raw.value().size() != crypto::kHashSize) {
    return make_error(Errc::validation, "brick hash must be 64 lowercase hex characters", "hash");
  }
  return {};
}

Result<std::string> MemoryBrickStore::put(const std::string& domain,
                                          std::span<const std::uint8_t> ciphertext) {
  if (auto v = validate_put(domain, ciphertext); !v.ok()) return v.error();
  std::string key = encoding::hex_encode(crypto::sha256(ciphertext));
  std::lock_guard lock(mu_);
  domains_[domain].emplace(key, Bytes(ciphertext.begin(), ciphertext.end()));
  return key;
}

Result<Bytes> MemoryBrickStore::get(const std::string& domain, const std::string& hash_hex) {
  if (auto v = validate_brick_key(hash_hex); !v.ok()) return v.error();
  std::lock_guard lock(mu_);
  auto d = domains_.find(domain);
  if (d == domains_.end()) return make_error(Errc::not_found, "unknown brick", "hash");
  auto it = d->second.find(hash_hex);
  if (it == d->second.end()) return make_error(Errc::not_found, "unknown brick", "hash");
  return it->second;
}

size_t MemoryBrickStore::count(const std::string& domain) const {
  std::lock_guard lock(mu_);
  auto d = domains_.find(domain);
  return d == domains_.end() ? 0 : d->second.size();
}

FileBrickStore::FileBrickStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
}

fs::path FileBrickStore::brick_path(const std::string& domain, const std::string& hash_hex) const {
  return root_ / domain / hash_hex.substr(0, 2) / hash_hex;
}

Result<std::string> FileBrickStore::put(const std::string& domain,
                                        std::span<const std::uint8_t> ciphertext) {
  if (auto v = validate_put(domain, ciphertext); !v.ok()) return v.error();
  std::string key = encoding::hex_encode(crypto::sha256(ciphertext));
  fs::path target = brick_path(domain, key);

  std::error_code ec;
  if (fs::exists(target, ec)) return key;  // idempotent

  fs::create_directories(target.parent_path(), ec);
  if (ec) return make_error(Errc::io, "cannot create brick directory: " + ec.message());

  // Unique temp name per writer; rename is atomic on the same filesystem.
  fs::path tmp = target;
  tmp += ".tmp." + encoding::hex_encode(crypto::random_bytes(8));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return make_error(Errc::io, "cannot open brick temp file");
    out.write(reinterpret_cast<const char*>(ciphertext.data()),
              static_cast<std::streamsize>(ciphertext.size()));
    if (!out) {
      fs::remove(tmp, ec);
      return make_error(Errc::io, "short write to brick store");
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    return make_error(Errc::io, "brick rename failed: " + ec.message());
  }
  return key;
}

Result<Bytes> FileBrickStore::get(const std::string& domain, const std::string& hash_hex) {
  if (auto v = validate_brick_key(hash_hex); !v.ok()) return v.error();
  fs::path target = brick_path(domain, hash_hex);
  std::ifstream in(target, std::ios::binary);
  if (!in) return make_error(Errc::not_found, "unknown brick", "hash");
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (!verify_brick(hash_hex, data)) {
    return make_error(Errc::corruption, "stored brick does not match its digest", "hash");
  }
  return data;
}

size_t FileBrickStore::count(const std::string& domain) const {
  std::error_code ec;
  size_t n = 0;
  for (auto it = fs::recursive_directory_iterator(root_ / domain, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    if (it->is_regular_file(ec)) ++n;
  }
  return n;
}

}  // namespace dsukit::brickstore
