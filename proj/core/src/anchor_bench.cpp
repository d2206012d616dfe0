#include "dsukit/anchor_bench.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "dsukit/crypto.hpp"

namespace dsukit::bench {

namespace {

struct Op {
  std::string link;
  std::string expected;
  keyssi::Signature sig;
};

struct WriterPlan {
  keyssi::KeySsi owner;
  std::string anchor_id;
  std::vector<Op> ops;
};

double percentile(std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  const size_t idx = std::min(sorted.size() - 1,
                              static_cast<size_t>(q * static_cast<double>(sorted.size())));
  return sorted[idx];
}

}  // namespace

std::string BenchReport::to_json() const {
  nlohmann::json j;
  j["total_calls"] = total_calls;
  j["acknowledged"] = acknowledged;
  j["confirmed"] = confirmed;
  j["invalidated"] = invalidated;
  j["elapsed_s"] = elapsed_s;
  j["confirm_window_s"] = confirm_window_s;
  j["ack_rate_per_s"] = ack_rate_per_s;
  j["confirmed_tps"] = confirmed_tps;
  j["latency_ms"] = {{"p50", p50_ms}, {"p95", p95_ms}, {"max", max_ms}};
  return j.dump(2);
}

std::string BenchReport::to_table() const {
  std::ostringstream out;
  out << "  calls acknowledged : " << acknowledged << " / " << total_calls << "\n"
      << "  confirmed          : " << confirmed << "\n"
      << "  invalidated        : " << invalidated << "\n"
      << "  elapsed            : " << elapsed_s << " s\n"
      << "  ack rate           : " << ack_rate_per_s << " /s\n"
      << "  confirmed tps      : " << confirmed_tps << " /s\n"
      << "  ack latency p50    : " << p50_ms << " ms\n"
      << "  ack latency p95    : " << p95_ms << " ms\n"
      << "  ack latency max    : " << max_ms << " ms\n";
  return out.str();
}

Result<BenchReport> run_anchoring_bench(const BenchParams& params) {
  if (params.calls <= 0 || params.writers <= 0) {
    return make_error(Errc::validation, "calls and writers must be positive");
  }
  if (params.latency_ms < 0 || params.cap_tps <= 0) {
    return make_error(Errc::validation, "latency_ms must be >= 0 and cap_tps > 0");
  }

  auto ledger = std::make_shared<anchoring::SimulatedChainLedger>(
      std::make_shared<anchoring::MemoryLedger>(), params.latency_ms, params.cap_tps);
  anchoring::AnchorService::Options opts;
  opts.reconcile_interval = std::chrono::milliseconds(200);
  anchoring::AnchorService service(ledger, opts);

  // Deterministic workload: families, anchors, and the link schedule all
  // derive from the seed. Signing happens up front so the timed section
  // measures the anchoring call alone.
  std::mt19937_64 rng(params.seed);
  std::vector<WriterPlan> plans(static_cast<size_t>(params.writers));
  for (int w = 0; w < params.writers; ++w) {
    Bytes entropy(32);
    for (auto& b : entropy) b = static_cast<uint8_t>(rng());
    auto owner = keyssi::generate_seed_ssi(params.domain, entropy);
    if (!owner.ok()) return owner.error();
    auto anchor = keyssi::anchor_id_of(owner.value());
    if (!anchor.ok()) return anchor.error();

    WriterPlan& plan = plans[static_cast<size_t>(w)];
    plan.owner = owner.value();
    plan.anchor_id = anchor.value().str();
    plan.ops.reserve(static_cast<size_t>(params.calls));
    std::string expected;
    for (int i = 0; i < params.calls; ++i) {
      std::string tag = "w" + std::to_string(w) + "-seq" + std::to_string(i) + "-" +
                        std::to_string(params.seed);
      auto link = keyssi::make_hashlink(params.domain,
                                        encoding::hex_encode(crypto::sha256(tag)));
      if (!link.ok()) return link.error();
      Op op;
      op.link = link.value().str();
      op.expected = expected;
      auto sig = keyssi::sign(plan.owner,
                              to_bytes(anchoring::append_payload(plan.anchor_id, op.link, expected)));
      if (!sig.ok()) return sig.error();
      op.sig = std::move(sig).value();
      expected = op.link;
      plan.ops.push_back(std::move(op));
    }
    if (auto c = service.create_anchor(plan.anchor_id); !c.ok()) return c.error();
  }

  const auto start = std::chrono::steady_clock::now();
  std::atomic<long> slot{0};
  std::atomic<long> acknowledged{0};
  std::atomic<bool> failed{false};
  std::vector<std::vector<double>> latencies(plans.size());
  std::vector<std::thread> threads;
  threads.reserve(plans.size());

  for (size_t w = 0; w < plans.size(); ++w) {
    threads.emplace_back([&, w] {
      auto& mine = latencies[w];
      mine.reserve(plans[w].ops.size());
      for (const Op& op : plans[w].ops) {
        if (params.offered_tps > 0) {
          const long my_slot = slot.fetch_add(1);
          auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                 std::chrono::duration<double>(static_cast<double>(my_slot) /
                                                               params.offered_tps));
          std::this_thread::sleep_until(due);
        }
        const auto t0 = std::chrono::steady_clock::now();
        auto receipt = service.append_version(plans[w].anchor_id, op.link, op.sig, op.expected,
                                              params.mode);
        const auto t1 = std::chrono::steady_clock::now();
        if (!receipt.ok()) {
          failed.store(true);
          return;
        }
        mine.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        acknowledged.fetch_add(1);
      }
    });
  }
  for (auto& t : threads) t.join();
  const auto ack_end = std::chrono::steady_clock::now();

  if (failed.load()) {
    return make_error(Errc::internal, "a writer failed; see anchor service state");
  }

  BenchReport report;
  report.total_calls = static_cast<long>(params.calls) * params.writers;
  report.acknowledged = acknowledged.load();
  report.elapsed_s = std::chrono::duration<double>(ack_end - start).count();
  report.ack_rate_per_s = report.elapsed_s > 0 ? report.acknowledged / report.elapsed_s : 0;

  // Confirmation accounting: with drain the service quiesces first; without
  // it the snapshot at window end gives the sustained confirmation rate.
  if (params.mode == anchoring::ExecMode::Optimistic && params.drain) {
    service.quiesce();
  }
  long confirmed = 0;
  for (const auto& plan : plans) {
    auto versions = service.get_versions(plan.anchor_id);
    if (versions.ok()) confirmed += static_cast<long>(versions.value().size());
  }
  report.confirmed = confirmed;
  report.invalidated = static_cast<long>(service.drain_events().size());
  report.confirm_window_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                                .count();
  report.confirmed_tps =
      report.confirm_window_s > 0 ? confirmed / report.confirm_window_s : 0;

  std::vector<double> all;
  for (auto& v : latencies) all.insert(all.end(), v.begin(), v.end());
  std::sort(all.begin(), all.end());
  report.p50_ms = percentile(all, 0.50);
  report.p95_ms = percentile(all, 0.95);
  report.max_ms = all.empty() ? 0 : all.back();
  return report;
}

}  // namespace dsukit::bench
