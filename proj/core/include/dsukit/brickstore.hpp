#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "dsukit/encoding.hpp"
#include "dsukit/errors.hpp"

// Content-addressed storage of opaque, already-encrypted bricks. The store
// never sees plaintext or key material; keys live inside (encrypted) brick
// maps managed by the dsu module.
namespace dsukit::brickstore {

// Largest brick the store accepts, ciphertext included.
inline constexpr size_t kMaxBrickSize = 1024 * 1024;

// true iff sha256(data) equals the hex key.
bool verify_brick(const std::string& hash_hex, std::span<const std::uint8_t> data);

class BrickStore {
 public:
  virtual ~BrickStore() = default;

  // Returns the sha256 hex of `ciphertext`. Idempotent: re-storing identical
  // content is a no-op that yields the same key.
  virtual Result<std::string> put(const std::string& domain,
                                  std::span<const std::uint8_t> ciphertext) = 0;

  // Verifies the digest before returning. A present-but-mismatching brick is
  // Errc::corruption, distinct from Errc::not_found.
  virtual Result<Bytes> get(const std::string& domain, const std::string& hash_hex) = 0;
};

Result<void> validate_brick_key(const std::string& hash_hex);

class MemoryBrickStore final : public BrickStore {
 public:
  Result<std::string> put(const std::string& domain,
                          std::span<const std::uint8_t> ciphertext) override;
  Result<Bytes> get(const std::string& domain, const std::string& hash_hex) override;

  size_t count(const std::string& domain) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::unordered_map<std::string, Bytes>> domains_;
};

// Layout: <root>/<domain>/<first 2 hex chars>/<full hash>. Writes go through
// a temp file plus atomic rename, so racing writers of identical content are
// benign.
class FileBrickStore final : public BrickStore {
 public:
  explicit FileBrickStore(std::filesystem::path root);

  Result<std::string> put(const std::string& domain,
                          std::span<const std::uint8_t> ciphertext) override;
  Result<Bytes> get(const std::string& domain, const std::string& hash_hex) override;

  size_t count(const std::string& domain) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path brick_path(const std::string& domain, const std::string& hash_hex) const;
  std::filesystem::path root_;
};

}  // namespace dsukit::brickstore
