#include "dsukit/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/rand.h>

#include <cassert>
#include <memory>
#include <stdexcept>

namespace dsukit::crypto {

namespace {

// Primitive-level failures (bad parameters, OOM inside OpenSSL) are
// programming errors, not domain errors.
[[noreturn]] void fail(const char* what) {
  throw std::runtime_error(std::string("crypto: ") + what);
}

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

PkeyPtr raw_private(int type, std::span<const std::uint8_t> key) {
  EVP_PKEY* p = EVP_PKEY_new_raw_private_key(type, nullptr, key.data(), key.size());
  if (!p) fail("raw private key");
  return PkeyPtr(p);
}

PkeyPtr raw_public(int type, std::span<const std::uint8_t> key) {
  EVP_PKEY* p = EVP_PKEY_new_raw_public_key(type, nullptr, key.data(), key.size());
  if (!p) fail("raw public key");
  return PkeyPtr(p);
}

Bytes raw_public_of(EVP_PKEY* pkey) {
  size_t len = 0;
  if (EVP_PKEY_get_raw_public_key(pkey, nullptr, &len) != 1) fail("public key length");
  Bytes out(len);
  if (EVP_PKEY_get_raw_public_key(pkey, out.data(), &len) != 1) fail("public key export");
  out.resize(len);
  return out;
}

}  // namespace

Bytes sha256(std::span<const std::uint8_t> data) {
  Bytes out(kHashSize);
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != kHashSize) {
    fail("sha256");
  }
  return out;
}

Bytes sha256(std::string_view data) {
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Bytes hkdf_sha256(std::span<const std::uint8_t> ikm, std::string_view info, size_t length) {
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
  if (!ctx) fail("hkdf ctx");
  if (EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) != 1 ||
      EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ikm.data(), static_cast<int>(ikm.size())) != 1 ||
      EVP_PKEY_CTX_add1_hkdf_info(ctx.get(),
                                  reinterpret_cast<const unsigned char*>(info.data()),
                                  static_cast<int>(info.size())) != 1) {
    fail("hkdf init");
  }
  Bytes out(length);
  size_t outlen = length;
  if (EVP_PKEY_derive(ctx.get(), out.data(), &outlen) != 1 || outlen != length) fail("hkdf derive");
  return out;
}

Bytes random_bytes(size_t n) {
  Bytes out(n);
  if (n > 0 && RAND_bytes(out.data(), static_cast<int>(n)) != 1) fail("rng");
  return out;
}

Ed25519KeyPair ed25519_from_seed(std::span<const std::uint8_t> seed) {
  if (seed.size() != kEd25519SeedSize) fail("ed25519 seed size");
  auto pkey = raw_private(EVP_PKEY_ED25519, seed);
  return Ed25519KeyPair{Bytes(seed.begin(), seed.end()), raw_public_of(pkey.get())};
}

Bytes ed25519_sign(std::span<const std::uint8_t> seed, std::span<const std::uint8_t> message) {
  auto pkey = raw_private(EVP_PKEY_ED25519, seed);
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx) fail("sign ctx");
  if (EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1) fail("sign init");
  size_t siglen = kEd25519SignatureSize;
  Bytes sig(siglen);
  if (EVP_DigestSign(ctx.get(), sig.data(), &siglen, message.data(), message.size()) != 1) {
    fail("sign");
  }
  sig.resize(siglen);
  return sig;
}

bool ed25519_verify(std::span<const std::uint8_t> public_key,
                    std::span<const std::uint8_t> message,
                    std::span<const std::uint8_t> signature) {
  if (public_key.size() != kEd25519PublicKeySize || signature.size() != kEd25519SignatureSize) {
    return false;
  }
  EVP_PKEY* p = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(),
                                            public_key.size());
  if (!p) return false;
  PkeyPtr pkey(p);
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx) return false;
  if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1) return false;
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                          message.size()) == 1;
}

X25519KeyPair x25519_from_private(std::span<const std::uint8_t> private_key) {
  if (private_key.size() != kX25519KeySize) fail("x25519 key size");
  auto pkey = raw_private(EVP_PKEY_X25519, private_key);
  return X25519KeyPair{Bytes(private_key.begin(), private_key.end()), raw_public_of(pkey.get())};
}

Result<Bytes> x25519_shared_secret(std::span<const std::uint8_t> private_key,
                                   std::span<const std::uint8_t> peer_public_key) {
  if (private_key.size() != kX25519KeySize || peer_public_key.size() != kX25519KeySize) {
    return make_error(Errc::validation, "x25519 keys must be 32 bytes");
  }
  auto pkey = raw_private(EVP_PKEY_X25519, private_key);
  auto peer = raw_public(EVP_PKEY_X25519, peer_public_key);
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new(pkey.get(), nullptr));
  if (!ctx) fail("derive ctx");
  size_t outlen = kX25519KeySize;
  Bytes out(outlen);
  if (EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
      EVP_PKEY_derive(ctx.get(), out.data(), &outlen) != 1) {
    // All-zero peer points are rejected by OpenSSL; surface as auth failure.
    return make_error(Errc::auth, "x25519 agreement failed");
  }
  out.resize(outlen);
  return out;
}

Bytes aead_encrypt(std::span<const std::uint8_t> key, std::span<const std::uint8_t> plaintext,
                   std::span<const std::uint8_t> aad) {
  if (key.size() != kSymmetricKeySize) fail("aead key size");
  Bytes nonce = random_bytes(kAeadNonceSize);

  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  if (!ctx) fail("cipher ctx");
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1) {
    fail("gcm init");
  }
  int len = 0;
  if (!aad.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    fail("gcm aad");
  }
  Bytes out(kAeadNonceSize + plaintext.size() + kAeadTagSize);
  std::copy(nonce.begin(), nonce.end(), out.begin());
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(ctx.get(), out.data() + kAeadNonceSize, &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    fail("gcm encrypt");
  }
  int fin = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kAeadNonceSize + plaintext.size(), &fin) != 1) {
    fail("gcm final");
  }
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kAeadTagSize,
                          out.data() + kAeadNonceSize + plaintext.size()) != 1) {
    fail("gcm tag");
  }
  return out;
}

Result<Bytes> aead_decrypt(std::span<const std::uint8_t> key, std::span<const std::uint8_t> blob,
                           std::span<const std::uint8_t> aad) {
  if (key.size() != kSymmetricKeySize) fail("aead key size");
  if (blob.size() < kAeadOverhead) {
    return make_error(Errc::auth, "ciphertext too short");
  }
  const auto* nonce = blob.data();
  const auto* ct = blob.data() + kAeadNonceSize;
  const size_t ct_len = blob.size() - kAeadOverhead;
  const auto* tag = blob.data() + kAeadNonceSize + ct_len;

  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  if (!ctx) fail("cipher ctx");
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce) != 1) {
    fail("gcm init");
  }
  int len = 0;
  if (!aad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    fail("gcm aad");
  }
  Bytes out(ct_len);
  if (ct_len > 0 &&
      EVP_DecryptUpdate(ctx.get(), out.data(), &len, ct, static_cast<int>(ct_len)) != 1) {
    return make_error(Errc::auth, "authenticated decryption failed");
  }
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kAeadTagSize,
                          const_cast<unsigned char*>(tag)) != 1) {
    fail("gcm set tag");
  }
  int fin = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + ct_len, &fin) != 1) {
    return make_error(Errc::auth, "authenticated decryption failed");
  }
  return out;
}

}  // namespace dsukit::crypto
