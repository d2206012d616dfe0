#include "dsukit/messaging.hpp"

#include <thread>

namespace dsukit::messaging {

namespace {

constexpr std::string_view kEciesInfo = "dsukit-ecies-v0";

Bytes derive_session_key(std::span<const std::uint8_t> shared,
                         std::span<const std::uint8_t> ephemeral_pub,
                         std::span<const std::uint8_t> recipient_pub) {
  Bytes ikm;
  ikm.reserve(shared.size() + ephemeral_pub.size() + recipient_pub.size());
  ikm.insert(ikm.end(), shared.begin(), shared.end());
  ikm.insert(ikm.end(), ephemeral_pub.begin(), ephemeral_pub.end());
  ikm.insert(ikm.end(), recipient_pub.begin(), recipient_pub.end());
  return crypto::hkdf_sha256(ikm, kEciesInfo);
}

}  // namespace

Result<Bytes> ecies_encrypt(const keyssi::KeySsi& recipient,
                            std::span<const std::uint8_t> plaintext) {
  auto recipient_pub = keyssi::ecies_public_key(recipient);
  if (!recipient_pub.ok()) return recipient_pub.error();
  if (recipient_pub.value().size() != crypto::kX25519KeySize) {
    return make_error(Errc::validation, "recipient public key has wrong size");
  }

  auto ephemeral = crypto::x25519_from_private(crypto::random_bytes(crypto::kX25519KeySize));
  auto shared = crypto::x25519_shared_secret(ephemeral.private_key, recipient_pub.value());
  if (!shared.ok()) return shared.error();
  Bytes key = derive_session_key(shared.value(), ephemeral.public_key, recipient_pub.value());

  Bytes body = crypto::aead_encrypt(key, plaintext);
  Bytes out;
  out.reserve(ephemeral.public_key.size() + body.size());
  out.insert(out.end(), ephemeral.public_key.begin(), ephemeral.public_key.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Result<Bytes> ecies_decrypt(const keyssi::KeySsi& owner, std::span<const std::uint8_t> ciphertext) {
  if (ciphertext.size() < crypto::kX25519KeySize + crypto::kAeadOverhead) {
    return make_error(Errc::auth, "ciphertext too short");
  }
  auto priv = keyssi::ecies_private_key(owner);
  if (!priv.ok()) return priv.error();
  auto our_pub = keyssi::ecies_public_key(owner);
  if (!our_pub.ok()) return our_pub.error();

  auto ephemeral_pub = ciphertext.first(crypto::kX25519KeySize);
  auto shared = crypto::x25519_shared_secret(priv.value(), ephemeral_pub);
  if (!shared.ok()) return shared.error();
  Bytes key = derive_session_key(shared.value(), ephemeral_pub, our_pub.value());
  return crypto::aead_decrypt(key, ciphertext.subspan(crypto::kX25519KeySize));
}

Result<keyssi::KeySsi> wrap_enc_ssi(const keyssi::KeySsi& to_share,
                                    const keyssi::KeySsi& recipient) {
  auto ct = ecies_encrypt(recipient, to_bytes(to_share.str()));
  if (!ct.ok()) return ct.error();
  std::span<const std::uint8_t> blob = ct.value();

  keyssi::KeySsi out;
  out.type = keyssi::SsiType::Enc;
  out.domain = recipient.domain;
  out.control = encoding::b64url_encode(blob.first(crypto::kX25519KeySize));
  out.type_specific = encoding::b64url_encode(blob.subspan(crypto::kX25519KeySize));
  return out;
}

Result<keyssi::KeySsi> unwrap_enc_ssi(const keyssi::KeySsi& owner, const keyssi::KeySsi& enc) {
  if (enc.type != keyssi::SsiType::Enc) {
    return make_error(Errc::validation, "not an enc-type identifier");
  }
  auto ephemeral = encoding::b64url_decode(enc.control);
  auto body = encoding::b64url_decode(enc.type_specific);
  if (!ephemeral.ok() || !body.ok()) {
    return make_error(Errc::parse_error, "undecodable enc identifier fields");
  }
  Bytes blob = std::move(ephemeral).value();
  blob.insert(blob.end(), body.value().begin(), body.value().end());
  auto plain = ecies_decrypt(owner, blob);
  if (!plain.ok()) return plain.error();
  return keyssi::parse(to_string(plain.value()));
}

// ---------------------------------------------------------------------------

MessageHub::MessageHub(std::shared_ptr<anchoring::AnchorClient> anchors, size_t depth_cap)
    : anchors_(std::move(anchors)), depth_cap_(depth_cap) {}

Result<void> MessageHub::channel_exists(const std::string& channel) {
  auto versions = anchors_->get_versions(channel);
  if (!versions.ok()) return versions.error();
  return {};
}

Result<std::string> MessageHub::put(const std::string& channel, Bytes payload) {
  if (auto c = channel_exists(channel); !c.ok()) return c.error();
  std::lock_guard lock(mu_);
  auto& q = queues_[channel];
  if (q.size() >= depth_cap_) {
    return make_error(Errc::backpressure, "queue is full", "channel");
  }
  MqMessage msg;
  msg.id = "m" + std::to_string(next_id_++);
  msg.payload = std::move(payload);
  msg.enqueued_at_ms = anchoring::wall_clock_ms();
  q.push_back(msg);
  return msg.id;
}

Result<std::string> MessageHub::issue_nonce(const std::string& channel) {
  if (auto c = channel_exists(channel); !c.ok()) return c.error();
  std::string nonce = encoding::b64url_encode(crypto::random_bytes(16));
  std::lock_guard lock(mu_);
  nonces_[nonce] = Nonce{channel, std::chrono::steady_clock::now()};
  return nonce;
}

Result<std::optional<MqMessage>> MessageHub::take(const std::string& channel,
                                                  const std::string& nonce,
                                                  const keyssi::Signature& sig) {
  auto channel_ssi = keyssi::parse(channel);
  if (!channel_ssi.ok()) {
    return make_error(Errc::validation, "channel is not a parseable identifier", "channel");
  }
  std::lock_guard lock(mu_);
  auto it = nonces_.find(nonce);
  if (it == nonces_.end() || it->second.channel != channel) {
    return make_error(Errc::auth, "unknown or replayed nonce", "nonce");
  }
  const bool expired = std::chrono::steady_clock::now() - it->second.issued_at > kNonceLifetime;
  nonces_.erase(it);  // single use, also on failure
  if (expired) return make_error(Errc::auth, "nonce expired", "nonce");

  if (!keyssi::verify(channel_ssi.value(), to_bytes(nonce), sig)) {
    return make_error(Errc::auth, "signature does not prove channel ownership", "signature");
  }
  auto q = queues_.find(channel);
  if (q == queues_.end() || q->second.empty()) return std::optional<MqMessage>{};
  MqMessage msg = std::move(q->second.front());
  q->second.pop_front();
  return std::optional<MqMessage>{std::move(msg)};
}

size_t MessageHub::depth(const std::string& channel) const {
  std::lock_guard lock(mu_);
  auto it = queues_.find(channel);
  return it == queues_.end() ? 0 : it->second.size();
}

Result<std::vector<std::string>> MessageHub::wait_new_links(
    const std::string& anchor_id, const std::optional<std::string>& after,
    std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    auto versions = anchors_->get_versions(anchor_id);
    if (!versions.ok()) return versions.error();

    std::vector<std::string> links;
    links.reserve(versions.value().size());
    for (const auto& v : versions.value()) links.push_back(v.link);

    size_t start = 0;
    if (after) {
      for (size_t i = 0; i < links.size(); ++i) {
        if (links[i] == *after) {
          start = i + 1;
          break;
        }
      }
    }
    if (start < links.size()) {
      return std::vector<std::string>(links.begin() + static_cast<std::ptrdiff_t>(start),
                                      links.end());
    }
    if (std::chrono::steady_clock::now() >= deadline) return std::vector<std::string>{};
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace dsukit::messaging
