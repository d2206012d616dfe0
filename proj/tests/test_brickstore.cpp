#include <doctest.h>

#include <fstream>
#include <thread>

#include "dsukit/brickstore.hpp"
#include "dsukit/crypto.hpp"
#include "support.hpp"

using namespace dsukit;
using namespace testsupport;

TEST_SUITE_BEGIN("brickstore");

TEST_CASE("put: key equals the independently computed digest") {
  // 5-byte payload; expected key frozen from the external sha256sum tool.
  brickstore::MemoryBrickStore store;
  auto key = store.put("pharma", to_bytes("hello"));
  REQUIRE(key.ok());
  CHECK(key.value() == "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");
}

TEST_CASE("put: empty payload is a validation error") {
  brickstore::MemoryBrickStore store;
  auto r = store.put("pharma", Bytes{});
  REQUIRE_FALSE(r.ok());
  CHECK(r.error().code == Errc::validation);
}

TEST_CASE("put: oversized payload is rejected") {
  brickstore::MemoryBrickStore store;
  Bytes big(brickstore::kMaxBrickSize + 1, 0x1);
  CHECK_FALSE(store.put("pharma", big).ok());
}

TEST_CASE("put: idempotent, store size unchanged") {
  brickstore::MemoryBrickStore mem;
  TempDir dir("bricks");
  brickstore::FileBrickStore file(dir.path);

  Bytes payload = to_bytes("same content");
  auto k1 = mem.put("pharma", payload).value();
  auto k2 = mem.put("pharma", payload).value();
  CHECK(k1 == k2);
  CHECK(mem.count("pharma") == 1);

  auto k3 = file.put("pharma", payload).value();
  auto k4 = file.put("pharma", payload).value();
  CHECK(k3 == k4);
  CHECK(k3 == k1);
  CHECK(file.count("pharma") == 1);
}

TEST_CASE("get: round trip, not-found, malformed keys") {
  TempDir dir("bricks");
  brickstore::FileBrickStore store(dir.path);
  Bytes payload = crypto::random_bytes(70000);
  auto key = store.put("pharma", payload).value();
  CHECK(store.get("pharma", key).value() == payload);

  auto missing = store.get("pharma", std::string(64, '0'));
  REQUIRE_FALSE(missing.ok());
  CHECK(missing.error().code == Errc::not_found);

  auto malformed = store.get("pharma", "zz");
  REQUIRE_FALSE(malformed.ok());
  CHECK(malformed.error().code == Errc::validation);
  CHECK(malformed.error().field == "hash");

  // domains are separate namespaces
  CHECK_FALSE(store.get("finance", key).ok());
}

TEST_CASE("get: on-disk tampering is corruption, distinct from not-found") {
  TempDir dir("bricks");
  brickstore::FileBrickStore store(dir.path);
  auto key = store.put("pharma", to_bytes("precious bytes")).value();

  // Flip one byte of the stored file.
  auto path = dir.path / "pharma" / key.substr(0, 2) / key;
  REQUIRE(std::filesystem::exists(path));
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(3);
    char c;
    f.seekg(3);
    f.get(c);
    f.seekp(3);
    f.put(static_cast<char>(c ^ 0x01));
  }
  auto r = store.get("pharma", key);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error().code == Errc::corruption);
}

TEST_CASE("filesystem layout fans out by the first two hex chars") {
  TempDir dir("bricks");
  brickstore::FileBrickStore store(dir.path);
  auto key = store.put("pharma", to_bytes("fanout check")).value();
  CHECK(std::filesystem::exists(dir.path / "pharma" / key.substr(0, 2) / key));
}

TEST_CASE("verify_brick: content addressing truth table") {
  brickstore::MemoryBrickStore store;
  Bytes payload = to_bytes("verify me");
  auto key = store.put("pharma", payload).value();
  CHECK(brickstore::verify_brick(key, payload));

  Bytes flipped = payload;
  flipped[0] ^= 0x01;
  CHECK_FALSE(brickstore::verify_brick(key, flipped));

  // 256 random payloads against permuted keys: all mismatches detected.
  std::vector<std::string> keys;
  std::vector<Bytes> payloads;
  for (int i = 0; i < 256; ++i) {
    payloads.push_back(crypto::random_bytes(24));
    keys.push_back(store.put("pharma", payloads.back()).value());
  }
  for (int i = 0; i < 256; ++i) {
    CHECK(brickstore::verify_brick(keys[i], payloads[i]));
    CHECK_FALSE(brickstore::verify_brick(keys[(i + 1) % 256], payloads[i]));
  }
}

TEST_CASE("concurrent puts of identical and distinct content are safe") {
  TempDir dir("bricks");
  brickstore::FileBrickStore store(dir.path);
  Bytes shared = to_bytes("contended content");
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 25; ++i) {
        if (!store.put("pharma", shared).ok()) failures.fetch_add(1);
        Bytes own = to_bytes("thread " + std::to_string(t) + " item " + std::to_string(i));
        auto key = store.put("pharma", own);
        if (!key.ok() || store.get("pharma", key.value()).value() != own) failures.fetch_add(1);
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(failures.load() == 0);
  CHECK(store.count("pharma") == 1 + 4 * 25);
}

TEST_SUITE_END();
