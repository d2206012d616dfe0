#pragma once

#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "dsukit/anchoring.hpp"
#include "dsukit/keyssi.hpp"

// Wallet messaging: ECIES between identities, enc-type wrappers so KeySSIs
// can transit unencrypted channels, per-anchor message queues (everyone may
// write, only the owner may take), and anchor-update notification streams.
namespace dsukit::messaging {

inline constexpr size_t kDefaultQueueDepth = 10000;
inline constexpr auto kNonceLifetime = std::chrono::seconds(60);

// X25519 + HKDF-SHA-256 + AES-256-GCM. Ciphertext layout:
// ephemeral_pub(32) || nonce(12) || body || tag(16). Fresh ephemeral key per
// call, so two encryptions of one plaintext differ.
Result<Bytes> ecies_encrypt(const keyssi::KeySsi& recipient, std::span<const std::uint8_t> plaintext);
Result<Bytes> ecies_decrypt(const keyssi::KeySsi& owner, std::span<const std::uint8_t> ciphertext);

// enc-type identifier: control carries the ephemeral public key, the
// type-specific field the remaining ciphertext.
Result<keyssi::KeySsi> wrap_enc_ssi(const keyssi::KeySsi& to_share, const keyssi::KeySsi& recipient);
Result<keyssi::KeySsi> unwrap_enc_ssi(const keyssi::KeySsi& owner, const keyssi::KeySsi& enc);

struct MqMessage {
  std::string id;
  Bytes payload;
  std::int64_t enqueued_at_ms = 0;
};

// Queues, take-nonces, and notification polling for the channels of one
// node. Channels are AnchorIDs; the anchor must exist.
class MessageHub {
 public:
  explicit MessageHub(std::shared_ptr<anchoring::AnchorClient> anchors,
                      size_t depth_cap = kDefaultQueueDepth);

  // Unauthenticated FIFO enqueue. A full queue rejects the new message.
  Result<std::string> put(const std::string& channel, Bytes payload);

  // Single-use 16-byte challenge with a 60 s lifetime.
  Result<std::string> issue_nonce(const std::string& channel);

  // Removes and returns the oldest message after verifying `sig` over the
  // nonce string against the channel's committed public key. Empty optional
  // when the queue is empty. Each message is delivered at most once.
  Result<std::optional<MqMessage>> take(const std::string& channel, const std::string& nonce,
                                        const keyssi::Signature& sig);

  size_t depth(const std::string& channel) const;

  // Long-poll: blocks until the confirmed history of `anchor_id` extends past
  // `after` (or from the beginning when absent), or until the timeout. Returns
  // the new hashlinks in history order.
  Result<std::vector<std::string>> wait_new_links(const std::string& anchor_id,
                                                  const std::optional<std::string>& after,
                                                  std::chrono::milliseconds timeout);

 private:
  Result<void> channel_exists(const std::string& channel);

  struct Nonce {
    std::string channel;
    std::chrono::steady_clock::time_point issued_at;
  };

  std::shared_ptr<anchoring::AnchorClient> anchors_;
  size_t depth_cap_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::deque<MqMessage>> queues_;
  std::unordered_map<std::string, Nonce> nonces_;
  std::uint64_t next_id_ = 1;
};

}  // namespace dsukit::messaging
