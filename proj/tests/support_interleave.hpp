#pragma once

// Exhaustive interleaving harness for optimistic vs validated execution.
//
// Two writers submit fixed, pre-signed append chains through two anchor
// service nodes sharing one in-memory ledger. A schedule is a sequence of
// lane steps:
//   W1/W2 — the writer executes its next append on its node
//   P1/P2 — the node submits its oldest queued optimistic entry
// All interleavings that respect per-lane order are enumerated. After each
// schedule the harness quiesces (pump + reconcile on both nodes) and reports
// the final confirmed state.

#include <map>
#include <string>
#include <vector>

#include "support.hpp"

namespace testsupport::interleave {

enum class Lane { W1, W2, P1, P2 };

struct Scenario {
  int appends_per_writer = 2;
  bool same_anchor = true;   // writers share one anchor (conflicting)
  bool same_node = false;    // both writers talk to node 1
  std::uint64_t seed = 99;
  std::string domain = "weave.test";
};

struct Outcome {
  // periods confirmed per anchor, in ledger order
  std::map<std::string, std::vector<std::string>> confirmed;
  int immediate_conflicts = 0;  // optimistic acks rejected at the node
  int invalidations = 0;        // reconciliation events
  int acknowledged = 0;
  bool nodes_agree = true;  // both nodes see identical confirmed histories
};

struct Fixture {
  keyssi::KeySsi owner1, owner2;
  std::string anchor1, anchor2;  // equal when same_anchor

  struct Op {
    std::string anchor_id;
    std::string link;
    std::string expected;
    keyssi::Signature sig;
  };
  std::vector<Op> w1_ops, w2_ops;

  explicit Fixture(const Scenario& s) {
    owner1 = seed_owner(s.domain, s.seed);
    owner2 = s.same_anchor ? owner1 : seed_owner(s.domain, s.seed + 1);
    anchor1 = keyssi::anchor_id_of(owner1).value().str();
    anchor2 = keyssi::anchor_id_of(owner2).value().str();

    auto build = [&](int writer, const keyssi::KeySsi& owner, const std::string& anchor_id) {
      std::vector<Op> ops;
      std::string expected;
      for (int i = 0; i < s.appends_per_writer; ++i) {
        Op op;
        op.anchor_id = anchor_id;
        op.link = test_link(s.domain, "w" + std::to_string(writer) + "-" + std::to_string(i) +
                                          "-" + std::to_string(s.seed));
        op.expected = expected;
        op.sig = keyssi::sign(owner, to_bytes(anchoring::append_payload(anchor_id, op.link,
                                                                        expected)))
                     .value();
        expected = op.link;
        ops.push_back(std::move(op));
      }
      return ops;
    };
    w1_ops = build(1, owner1, anchor1);
    w2_ops = build(2, owner2, anchor2);
  }
};

// All distinct sequences over the lane multiset, preserving per-lane order.
inline void enumerate_schedules(std::vector<std::vector<Lane>>& out, std::vector<Lane>& cur,
                                std::map<Lane, int>& remaining) {
  bool done = true;
  for (auto& [lane, count] : remaining) {
    if (count == 0) continue;
    done = false;
    --count;
    cur.push_back(lane);
    enumerate_schedules(out, cur, remaining);
    cur.pop_back();
    ++count;
  }
  if (done) out.push_back(cur);
}

inline std::vector<std::vector<Lane>> schedules_for(const Scenario& s) {
  std::map<Lane, int> lanes;
  lanes[Lane::W1] = s.appends_per_writer;
  lanes[Lane::W2] = s.appends_per_writer;
  if (s.same_node) {
    lanes[Lane::P1] = 2 * s.appends_per_writer;
  } else {
    lanes[Lane::P1] = s.appends_per_writer;
    lanes[Lane::P2] = s.appends_per_writer;
  }
  std::vector<std::vector<Lane>> out;
  std::vector<Lane> cur;
  enumerate_schedules(out, cur, lanes);
  return out;
}

inline Outcome run_optimistic(const Scenario& s, const Fixture& fx,
                              const std::vector<Lane>& schedule) {
  auto ledger = std::make_shared<anchoring::MemoryLedger>();
  anchoring::AnchorService::Options opts;
  opts.background = false;
  anchoring::AnchorService node1(ledger, opts);
  anchoring::AnchorService node2(ledger, opts);

  node1.create_anchor(fx.anchor1).value();
  if (fx.anchor2 != fx.anchor1) node1.create_anchor(fx.anchor2).value();

  anchoring::AnchorService* writer_node[2] = {&node1, s.same_node ? &node1 : &node2};

  Outcome out;
  size_t next_op[2] = {0, 0};
  for (Lane lane : schedule) {
    switch (lane) {
      case Lane::W1:
      case Lane::W2: {
        const int w = lane == Lane::W1 ? 0 : 1;
        const auto& ops = w == 0 ? fx.w1_ops : fx.w2_ops;
        if (next_op[w] >= ops.size()) break;
        const auto& op = ops[next_op[w]++];
        auto receipt = writer_node[w]->append_version(op.anchor_id, op.link, op.sig, op.expected,
                                                      anchoring::ExecMode::Optimistic);
        if (receipt.ok()) {
          ++out.acknowledged;
        } else {
          ++out.immediate_conflicts;
        }
        break;
      }
      case Lane::P1:
        (void)node1.pump_one();
        break;
      case Lane::P2:
        (void)node2.pump_one();
        break;
    }
  }

  node1.quiesce();
  node2.quiesce();
  for (const auto& anchor : {fx.anchor1, fx.anchor2}) {
    (void)node1.reconcile(anchor);
    (void)node2.reconcile(anchor);
  }
  out.invalidations = static_cast<int>(node1.drain_events().size() + node2.drain_events().size());

  for (const auto& anchor : {fx.anchor1, fx.anchor2}) {
    auto v1 = node1.get_versions(anchor).value();
    auto v2 = node2.get_versions(anchor).value();
    std::vector<std::string> links1, links2;
    for (const auto& e : v1) links1.push_back(e.link);
    for (const auto& e : v2) links2.push_back(e.link);
    if (links1 != links2) out.nodes_agree = false;
    out.confirmed[anchor] = links1;
  }
  return out;
}

// Validated twin: the same append intents in the same relative writer order;
// pump steps are no-ops in this mode.
inline Outcome run_validated(const Scenario& s, const Fixture& fx,
                             const std::vector<Lane>& schedule) {
  auto ledger = std::make_shared<anchoring::MemoryLedger>();
  anchoring::AnchorService::Options opts;
  opts.background = false;
  anchoring::AnchorService node1(ledger, opts);
  anchoring::AnchorService node2(ledger, opts);

  node1.create_anchor(fx.anchor1).value();
  if (fx.anchor2 != fx.anchor1) node1.create_anchor(fx.anchor2).value();

  anchoring::AnchorService* writer_node[2] = {&node1, s.same_node ? &node1 : &node2};

  Outcome out;
  size_t next_op[2] = {0, 0};
  for (Lane lane : schedule) {
    if (lane != Lane::W1 && lane != Lane::W2) continue;
    const int w = lane == Lane::W1 ? 0 : 1;
    const auto& ops = w == 0 ? fx.w1_ops : fx.w2_ops;
    if (next_op[w] >= ops.size()) continue;
    const auto& op = ops[next_op[w]++];
    auto receipt = writer_node[w]->append_version(op.anchor_id, op.link, op.sig, op.expected,
                                                  anchoring::ExecMode::Validated);
    if (receipt.ok()) {
      ++out.acknowledged;
    } else {
      ++out.immediate_conflicts;
    }
  }

  for (const auto& anchor : {fx.anchor1, fx.anchor2}) {
    auto v = node1.get_versions(anchor).value();
    std::vector<std::string> links;
    for (const auto& e : v) links.push_back(e.link);
    out.confirmed[anchor] = links;
  }
  return out;
}

}  // namespace testsupport::interleave
