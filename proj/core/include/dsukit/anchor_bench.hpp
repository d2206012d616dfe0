#pragma once

#include <cstdint>
#include <string>

#include "dsukit/anchoring.hpp"

// Anchoring benchmark: W single-anchor writers each drive N sequential
// anchored appends against a simulated chain, in either execution mode.
// Reports client-perceived acknowledgment latency, confirmed throughput, and
// invalidations. The workload schedule is deterministic for a given seed.
namespace dsukit::bench {

struct BenchParams {
  int calls = 3;          // appends per writer
  double latency_ms = 0;  // simulated per-transaction confirmation delay
  double cap_tps = 1e6;   // simulated sustained confirmation cap
  anchoring::ExecMode mode = anchoring::ExecMode::Validated;
  int writers = 1;
  std::uint64_t seed = 42;
  double offered_tps = 0;  // >0 paces the offered load across all writers
  std::string domain = "bench";
  bool drain = true;  // wait for pending optimistic entries before reporting
};

struct BenchReport {
  long total_calls = 0;
  long acknowledged = 0;
  long confirmed = 0;
  long invalidated = 0;
  double elapsed_s = 0;          // offered-load window (first submit to last ack)
  double confirm_window_s = 0;   // first submit to last observed confirmation
  double ack_rate_per_s = 0;     // acknowledged / elapsed
  double confirmed_tps = 0;      // confirmed / confirm window
  double p50_ms = 0;
  double p95_ms = 0;
  double max_ms = 0;

  std::string to_json() const;
  std::string to_table() const;
};

Result<BenchReport> run_anchoring_bench(const BenchParams& params);

}  // namespace dsukit::bench
