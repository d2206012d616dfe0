#include <benchmark/benchmark.h>

#include "dsukit/anchoring.hpp"
#include "dsukit/brickstore.hpp"
#include "dsukit/dsu.hpp"
#include "dsukit/keyssi.hpp"
#include "dsukit/messaging.hpp"

using namespace dsukit;

namespace {

keyssi::KeySsi fixed_seed() {
  Bytes entropy(32, 0x5a);
  return keyssi::generate_seed_ssi("bench.pharma", entropy).value();
}

void BM_KeySsiParse(benchmark::State& state) {
  const std::string text = fixed_seed().str();
  for (auto _ : state) {
    auto ssi = keyssi::parse(text);
    benchmark::DoNotOptimize(ssi);
  }
}
BENCHMARK(BM_KeySsiParse);

void BM_KeySsiSerialize(benchmark::State& state) {
  const auto ssi = fixed_seed();
  for (auto _ : state) {
    auto s = ssi.str();
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_KeySsiSerialize);

void BM_DeriveChain(benchmark::State& state) {
  const auto seed = fixed_seed();
  for (auto _ : state) {
    auto sread = keyssi::derive(seed).value();
    auto sza = keyssi::derive(sread).value();
    benchmark::DoNotOptimize(sza);
  }
}
BENCHMARK(BM_DeriveChain);

void BM_SignVerify(benchmark::State& state) {
  const auto seed = fixed_seed();
  const auto za = keyssi::derive_to(seed, keyssi::AccessRank::ZeroAccess).value();
  const Bytes payload(256, 0x17);
  for (auto _ : state) {
    auto sig = keyssi::sign(seed, payload).value();
    bool ok = keyssi::verify(za, payload, sig);
    benchmark::DoNotOptimize(ok);
  }
}
BENCHMARK(BM_SignVerify);

void BM_BrickPutGet(benchmark::State& state) {
  brickstore::MemoryBrickStore store;
  Bytes payload(static_cast<size_t>(state.range(0)), 0x42);
  size_t i = 0;
  for (auto _ : state) {
    payload[0] = static_cast<uint8_t>(i++);
    auto key = store.put("bench", payload).value();
    auto back = store.get("bench", key);
    benchmark::DoNotOptimize(back);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * payload.size()));
}
BENCHMARK(BM_BrickPutGet)->Arg(4 * 1024)->Arg(256 * 1024);

void BM_AnchorAppendMemory(benchmark::State& state) {
  auto ledger = std::make_shared<anchoring::MemoryLedger>();
  anchoring::AnchorService::Options opts;
  opts.background = false;
  anchoring::AnchorService service(ledger, opts);

  const auto seed = fixed_seed();
  const auto anchor_id = keyssi::anchor_id_of(seed).value().str();
  service.create_anchor(anchor_id).value();

  std::string expected;
  size_t i = 0;
  for (auto _ : state) {
    auto link = keyssi::make_hashlink(
                    "bench.pharma",
                    encoding::hex_encode(crypto::sha256("bench-" + std::to_string(i++))))
                    .value()
                    .str();
    auto sig =
        keyssi::sign(seed, to_bytes(anchoring::append_payload(anchor_id, link, expected))).value();
    auto receipt = service.append_version(anchor_id, link, sig, expected,
                                          anchoring::ExecMode::Validated);
    benchmark::DoNotOptimize(receipt);
    expected = link;
  }
}
BENCHMARK(BM_AnchorAppendMemory);

void BM_DsuCommit(benchmark::State& state) {
  auto bricks = std::make_shared<brickstore::MemoryBrickStore>();
  auto ledger = std::make_shared<anchoring::MemoryLedger>();
  anchoring::AnchorService::Options opts;
  opts.background = false;
  auto anchors = std::make_shared<anchoring::AnchorService>(ledger, opts);
  dsu::KeyResolver resolver(bricks, anchors);

  auto owner = keyssi::generate_seed_ssi("bench.pharma").value();
  auto handle = resolver.create_dsu(owner).value();
  Bytes payload(static_cast<size_t>(state.range(0)), 0x7e);
  size_t i = 0;
  for (auto _ : state) {
    payload[0] = static_cast<uint8_t>(i++);
    handle.write_file("/data", payload).value();
    auto link = handle.commit(anchoring::ExecMode::Validated);
    benchmark::DoNotOptimize(link);
  }
}
BENCHMARK(BM_DsuCommit)->Arg(16 * 1024);

void BM_EciesRoundTrip(benchmark::State& state) {
  const auto seed = fixed_seed();
  Bytes payload(static_cast<size_t>(state.range(0)), 0x33);
  for (auto _ : state) {
    auto ct = messaging::ecies_encrypt(seed, payload).value();
    auto pt = messaging::ecies_decrypt(seed, ct);
    benchmark::DoNotOptimize(pt);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * payload.size()));
}
BENCHMARK(BM_EciesRoundTrip)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
