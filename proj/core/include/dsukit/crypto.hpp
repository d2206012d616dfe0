#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "dsukit/encoding.hpp"
#include "dsukit/errors.hpp"

// Thin wrappers over OpenSSL's EVP interface. Every primitive the toolkit
// relies on lives here: SHA-256, HKDF-SHA-256, AES-256-GCM, Ed25519, X25519.
namespace dsukit::crypto {

inline constexpr size_t kHashSize = 32;
inline constexpr size_t kSymmetricKeySize = 32;
inline constexpr size_t kAeadNonceSize = 12;
inline constexpr size_t kAeadTagSize = 16;
inline constexpr size_t kAeadOverhead = kAeadNonceSize + kAeadTagSize;
inline constexpr size_t kEd25519SeedSize = 32;
inline constexpr size_t kEd25519PublicKeySize = 32;
inline constexpr size_t kEd25519SignatureSize = 64;
inline constexpr size_t kX25519KeySize = 32;

Bytes sha256(std::span<const std::uint8_t> data);
Bytes sha256(std::string_view data);

// HKDF with empty salt; `info` provides domain separation between key uses.
Bytes hkdf_sha256(std::span<const std::uint8_t> ikm, std::string_view info,
                  size_t length = kSymmetricKeySize);

Bytes random_bytes(size_t n);

struct Ed25519KeyPair {
  Bytes seed;        // 32-byte private seed
  Bytes public_key;  // 32 bytes
};

Ed25519KeyPair ed25519_from_seed(std::span<const std::uint8_t> seed);
Bytes ed25519_sign(std::span<const std::uint8_t> seed, std::span<const std::uint8_t> message);
bool ed25519_verify(std::span<const std::uint8_t> public_key,
                    std::span<const std::uint8_t> message,
                    std::span<const std::uint8_t> signature);

struct X25519KeyPair {
  Bytes private_key;  // 32 bytes
  Bytes public_key;   // 32 bytes
};

X25519KeyPair x25519_from_private(std::span<const std::uint8_t> private_key);
Result<Bytes> x25519_shared_secret(std::span<const std::uint8_t> private_key,
                                   std::span<const std::uint8_t> peer_public_key);

// AES-256-GCM. Output layout: nonce(12) || ciphertext || tag(16). Decryption
// failure (wrong key or tampered blob) is an expected condition and comes
// back as Errc::auth.
Bytes aead_encrypt(std::span<const std::uint8_t> key, std::span<const std::uint8_t> plaintext,
                   std::span<const std::uint8_t> aad = {});
Result<Bytes> aead_decrypt(std::span<const std::uint8_t> key, std::span<const std::uint8_t> blob,
                           std::span<const std::uint8_t> aad = {});

}  // namespace dsukit::crypto
