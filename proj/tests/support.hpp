#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "dsukit/anchoring.hpp"
#include "dsukit/brickstore.hpp"
#include "dsukit/dsu.hpp"
#include "dsukit/keyssi.hpp"

namespace testsupport {

using namespace dsukit;

inline Bytes fixed_entropy(uint8_t fill) { return Bytes(32, fill); }

inline Bytes seeded_entropy(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Bytes out(32);
  for (auto& b : out) b = static_cast<uint8_t>(rng());
  return out;
}

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("dsukit-" + tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

// In-process stack over memory backends. background=false keeps the anchor
// service fully manual for deterministic stepping.
struct LocalStack {
  std::shared_ptr<brickstore::MemoryBrickStore> bricks;
  std::shared_ptr<anchoring::MemoryLedger> ledger;
  std::shared_ptr<anchoring::AnchorService> anchors;
  std::unique_ptr<dsu::KeyResolver> resolver;

  explicit LocalStack(bool background = true) {
    bricks = std::make_shared<brickstore::MemoryBrickStore>();
    ledger = std::make_shared<anchoring::MemoryLedger>();
    anchoring::AnchorService::Options opts;
    opts.background = background;
    opts.reconcile_interval = std::chrono::milliseconds(100);
    anchors = std::make_shared<anchoring::AnchorService>(ledger, opts);
    resolver = std::make_unique<dsu::KeyResolver>(bricks, anchors);
  }
};

inline keyssi::KeySsi seed_owner(const std::string& domain, std::uint64_t seed) {
  return keyssi::generate_seed_ssi(domain, seeded_entropy(seed)).value();
}

inline keyssi::KeySsi secret_owner(const std::string& domain, std::uint64_t seed) {
  return keyssi::generate_secret_ssi(domain, seeded_entropy(seed)).value();
}

// Signed append helper: builds the canonical payload, signs with `owner`,
// submits to `service`.
inline Result<anchoring::AppendReceipt> signed_append(anchoring::AnchorClient& service,
                                                      const keyssi::KeySsi& owner,
                                                      const std::string& anchor_id,
                                                      const std::string& link,
                                                      const std::string& expected,
                                                      anchoring::ExecMode mode) {
  auto sig = keyssi::sign(owner, to_bytes(anchoring::append_payload(anchor_id, link, expected)));
  if (!sig.ok()) return sig.error();
  return service.append_version(anchor_id, link, sig.value(), expected, mode);
}

inline std::string test_link(const std::string& domain, const std::string& tag) {
  return keyssi::make_hashlink(domain, encoding::hex_encode(crypto::sha256(tag))).value().str();
}

inline std::string dsukit_binary() {
  if (const char* env = std::getenv("DSUKIT_BIN")) return env;
#ifdef DSUKIT_BIN
  return DSUKIT_BIN;
#else
  return "dsukit";
#endif
}

inline std::string test_data_dir() {
#ifdef DSUKIT_TEST_DATA_DIR
  return DSUKIT_TEST_DATA_DIR;
#else
  return "tests/data";
#endif
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace testsupport
