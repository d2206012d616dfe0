#include <doctest.h>

#include "dsukit/crypto.hpp"
#include "dsukit/encoding.hpp"
#include "support.hpp"

using namespace dsukit;

namespace {

Bytes hex(const std::string& s) { return encoding::hex_decode(s).value(); }

}  // namespace

TEST_SUITE_BEGIN("crypto");

// Published known-answer vectors pin the primitives before anything is built
// on top of them.

TEST_CASE("sha256 known answers") {
  // NIST FIPS 180-2 examples plus a 5-byte value frozen from sha256sum.
  CHECK(encoding::hex_encode(crypto::sha256(std::string_view("abc"))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(encoding::hex_encode(crypto::sha256(std::string_view(""))) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(encoding::hex_encode(crypto::sha256(std::string_view("hello"))) ==
        "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");
}

TEST_CASE("hkdf-sha256 rfc 5869 case 3") {
  Bytes ikm(22, 0x0b);
  auto okm = crypto::hkdf_sha256(ikm, "", 42);
  CHECK(encoding::hex_encode(okm) ==
        "8da4e775a563c18f715f802a063c5a31b8a11f5c5ee1879ec3454e5f3c738d2d"
        "9d201395faa4b61a96c8");
}

TEST_CASE("ed25519 rfc 8032 vectors") {
  SUBCASE("test 1: empty message") {
    auto seed = hex("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60");
    auto pair = crypto::ed25519_from_seed(seed);
    CHECK(encoding::hex_encode(pair.public_key) ==
          "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a");
    auto sig = crypto::ed25519_sign(seed, Bytes{});
    CHECK(encoding::hex_encode(sig) ==
          "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
          "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b");
    CHECK(crypto::ed25519_verify(pair.public_key, Bytes{}, sig));
  }
  SUBCASE("test 2: one byte") {
    auto seed = hex("4ccd089b28ff96da9db6c346ec114e0f5b8a319f35aba624da8cf6ed4fb8a6fb");
    auto pair = crypto::ed25519_from_seed(seed);
    CHECK(encoding::hex_encode(pair.public_key) ==
          "3d4017c3e843895a92b70aa74d1b7ebc9c982ccf2ec4968cc0cd55f12af4660c");
    Bytes msg = hex("72");
    auto sig = crypto::ed25519_sign(seed, msg);
    CHECK(encoding::hex_encode(sig) ==
          "92a009a9f0d4cab8720e820b5f642540a2b27b5416503f8fb3762223ebdb69da"
          "085ac1e43e15996e458f3613d0f11d8c387b2eaeb4302aeeb00d291612bb0c00");
    // Tamper rejection
    Bytes bad = sig;
    bad[0] ^= 1;
    CHECK_FALSE(crypto::ed25519_verify(pair.public_key, msg, bad));
    CHECK_FALSE(crypto::ed25519_verify(pair.public_key, hex("73"), sig));
  }
}

TEST_CASE("x25519 rfc 7748 diffie-hellman") {
  auto a = hex("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a");
  auto b = hex("5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb");
  auto pa = crypto::x25519_from_private(a);
  auto pb = crypto::x25519_from_private(b);
  CHECK(encoding::hex_encode(pa.public_key) ==
        "8520f0098930a754748b7ddcb43ef75a0dbf3a0d26381af4eba4a98eaa9b4e6a");
  CHECK(encoding::hex_encode(pb.public_key) ==
        "de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f");
  auto s1 = crypto::x25519_shared_secret(a, pb.public_key).value();
  auto s2 = crypto::x25519_shared_secret(b, pa.public_key).value();
  CHECK(encoding::hex_encode(s1) ==
        "4a5d9d5ba4ce2de1728e3bf480350f25e07e21c947d19e3376f09b3c1e161742");
  CHECK(s1 == s2);
}

TEST_CASE("aes-256-gcm nist decrypt vector and round trip") {
  // McGrew/Viega GCM test case 16 (AES-256), fed through the nonce||ct||tag
  // blob layout this module uses.
  auto key = hex("feffe9928665731c6d6a8f9467308308feffe9928665731c6d6a8f9467308308");
  auto iv = hex("cafebabefacedbaddecaf888");
  auto pt = hex(
      "d9313225f88406e5a55909c5aff5269a86a7a9531534f7da2e4c303d8a318a72"
      "1c3c0c95956809532fcf0e2449a6b525b16aedf5aa0de657ba637b39");
  auto aad = hex("feedfacedeadbeeffeedfacedeadbeefabaddad2");
  auto ct = hex(
      "522dc1f099567d07f47f37a32a84427d643a8cdcbfe5c0c97598a2bd2555d1aa"
      "8cb08e48590dbb3da7b08b1056828838c5f61e6393ba7a0abcc9f662");
  auto tag = hex("76fc6ece0f4e1768cddf8853bb2d551b");

  Bytes blob;
  blob.insert(blob.end(), iv.begin(), iv.end());
  blob.insert(blob.end(), ct.begin(), ct.end());
  blob.insert(blob.end(), tag.begin(), tag.end());
  auto out = crypto::aead_decrypt(key, blob, aad);
  REQUIRE(out.ok());
  CHECK(out.value() == pt);

  SUBCASE("tampered blob fails authentication") {
    Bytes bad = blob;
    bad[crypto::kAeadNonceSize + 3] ^= 0xff;
    CHECK_FALSE(crypto::aead_decrypt(key, bad, aad).ok());
  }
  SUBCASE("round trip with fresh nonce, empty and large payloads") {
    Bytes k = crypto::random_bytes(32);
    for (size_t n : {size_t{0}, size_t{1}, size_t{1024 * 1024}}) {
      Bytes msg = crypto::random_bytes(n);
      Bytes sealed = crypto::aead_encrypt(k, msg);
      CHECK(sealed.size() == n + crypto::kAeadOverhead);
      auto open = crypto::aead_decrypt(k, sealed);
      REQUIRE(open.ok());
      CHECK(open.value() == msg);
    }
  }
  SUBCASE("wrong key is an auth error not an exception") {
    Bytes k1 = crypto::random_bytes(32);
    Bytes k2 = crypto::random_bytes(32);
    Bytes sealed = crypto::aead_encrypt(k1, to_bytes("payload"));
    auto r = crypto::aead_decrypt(k2, sealed);
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().code == Errc::auth);
  }
}

TEST_CASE("base64url strict round trip") {
  // Property: decode(encode(x)) == x, and decoding rejects anything that is
  // not the canonical encoding of some byte string.
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    size_t n = rng() % 67;
    Bytes data(n);
    for (auto& b : data) b = static_cast<uint8_t>(rng());
    auto text = encoding::b64url_encode(data);
    CHECK(text.find('=') == std::string::npos);
    CHECK(text.find('+') == std::string::npos);
    CHECK(text.find('/') == std::string::npos);
    auto back = encoding::b64url_decode(text);
    REQUIRE(back.ok());
    CHECK(back.value() == data);
  }
  CHECK_FALSE(encoding::b64url_decode("abc!").ok());
  CHECK_FALSE(encoding::b64url_decode("a").ok());        // impossible length
  CHECK_FALSE(encoding::b64url_decode("ab=").ok());      // padding rejected
  CHECK(encoding::b64url_decode("AA").ok());             // 1 byte, zero trailing bits
  CHECK_FALSE(encoding::b64url_decode("AB").ok());       // non-zero trailing bits
}

TEST_CASE("hex strict") {
  CHECK(encoding::hex_encode(hex("00ff10")) == "00ff10");
  CHECK_FALSE(encoding::hex_decode("0").ok());
  CHECK_FALSE(encoding::hex_decode("0G").ok());
  CHECK_FALSE(encoding::hex_decode("AB").ok());  // uppercase is non-canonical
}

TEST_CASE("random bytes are fresh") {
  auto a = crypto::random_bytes(32);
  auto b = crypto::random_bytes(32);
  CHECK(a != b);
  CHECK(a.size() == 32);
}

TEST_SUITE_END();
