#include <doctest.h>

#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "dsukit/keyssi.hpp"
#include "support.hpp"

using namespace dsukit;
using namespace testsupport;
using keyssi::AccessRank;
using keyssi::KeySsi;
using keyssi::SsiType;

TEST_SUITE_BEGIN("keyssi");

TEST_CASE("grammar: canonical example strings parse to documented fields") {
  auto seed = keyssi::parse("ssi:seed:ePI.pharma:RANDOMSEEDKEY:HASHRANDOMKEY");
  REQUIRE(seed.ok());
  CHECK(seed.value().type == SsiType::Seed);
  CHECK(seed.value().domain == "ePI.pharma");
  CHECK(seed.value().type_specific == "RANDOMSEEDKEY");
  CHECK(seed.value().control == "HASHRANDOMKEY");
  CHECK(seed.value().version == "v0");  // vn optional, defaults to v0
  CHECK_FALSE(seed.value().hint.has_value());

  auto za = keyssi::parse("ssi:za:ePI.pharma:HASHSERIALISATION:HASHPUBLICKEY");
  REQUIRE(za.ok());
  CHECK(za.value().type == SsiType::Za);
  CHECK(za.value().domain == "ePI.pharma");
  CHECK(za.value().type_specific == "HASHSERIALISATION");
  CHECK(za.value().control == "HASHPUBLICKEY");

  // Canonical serialization always emits the version explicitly.
  CHECK(seed.value().str() == "ssi:seed:ePI.pharma:RANDOMSEEDKEY:HASHRANDOMKEY:v0");
  CHECK(za.value().str() == "ssi:za:ePI.pharma:HASHSERIALISATION:HASHPUBLICKEY:v0");
}

TEST_CASE("grammar: parse errors identify the offending field") {
  auto bad_schema = keyssi::parse("did:example:123");
  REQUIRE_FALSE(bad_schema.ok());
  CHECK(bad_schema.error().field == "schema");

  auto bad_type = keyssi::parse("ssi:frob:ePI.pharma:TS:CTRL");
  REQUIRE_FALSE(bad_type.ok());
  CHECK(bad_type.error().field == "type");

  auto bad_count = keyssi::parse("ssi:seed:ePI.pharma");
  REQUIRE_FALSE(bad_count.ok());
  CHECK(bad_count.error().field == "field-count");

  auto bad_domain = keyssi::parse("ssi:seed:bad domain!:TS:CTRL");
  REQUIRE_FALSE(bad_domain.ok());
  CHECK(bad_domain.error().field == "domain");

  auto empty_domain = keyssi::parse("ssi:seed::TS:CTRL");
  REQUIRE_FALSE(empty_domain.ok());
  CHECK(empty_domain.error().field == "domain");

  auto bad_version = keyssi::parse("ssi:seed:ePI.pharma:TS:CTRL:banana");
  REQUIRE_FALSE(bad_version.ok());
  CHECK(bad_version.error().field == "version");

  auto empty_ts = keyssi::parse("ssi:seed:ePI.pharma::CTRL");
  REQUIRE_FALSE(empty_ts.ok());
  CHECK(empty_ts.error().field == "type_specific");
}

TEST_CASE("grammar: hint is preserved verbatim, colons included") {
  auto with_hint = keyssi::parse("ssi:seed:d:TS:CTRL:v0:server1");
  REQUIRE(with_hint.ok());
  CHECK(with_hint.value().hint == "server1");
  CHECK(with_hint.value().str() == "ssi:seed:d:TS:CTRL:v0:server1");

  auto colon_hint = keyssi::parse("ssi:seed:d:TS:CTRL:v0:endpoint:8080/x");
  REQUIRE(colon_hint.ok());
  CHECK(colon_hint.value().hint == "endpoint:8080/x");
  CHECK(keyssi::parse(colon_hint.value().str()).value() == colon_hint.value());
}

TEST_CASE("grammar: 10k fuzz round-trip reaches canonical fixpoint") {
  std::mt19937_64 rng(20240811);
  const char* types[] = {"seed", "sread", "sza", "secret", "anchor", "read",
                         "public", "za", "const", "enc", "hashlink"};
  auto token = [&](size_t max_len) {
    size_t n = 1 + rng() % max_len;
    Bytes raw(n);
    for (auto& b : raw) b = static_cast<uint8_t>(rng());
    return encoding::b64url_encode(raw);
  };

  for (int i = 0; i < 10000; ++i) {
    std::string s = "ssi:";
    s += types[rng() % 11];
    s += ":";
    int labels = 1 + static_cast<int>(rng() % 3);
    for (int l = 0; l < labels; ++l) {
      if (l) s += ".";
      s += token(6);
    }
    s += ":" + token(48);
    s += ":";
    if (rng() % 2) s += token(44);  // control may be empty
    const bool with_version = rng() % 2;
    if (with_version) s += ":v" + std::to_string(rng() % 10);
    if (with_version && rng() % 3 == 0) {
      s += ":hint-" + token(8);
      if (rng() % 2) s += ":extra";  // colon inside hint
    }

    auto parsed = keyssi::parse(s);
    REQUIRE_MESSAGE(parsed.ok(), "failed on: " << s);
    const std::string canonical = parsed.value().str();
    auto reparsed = keyssi::parse(canonical);
    REQUIRE(reparsed.ok());
    CHECK(reparsed.value() == parsed.value());
    CHECK(reparsed.value().str() == canonical);  // fixpoint after one pass
  }
}

TEST_CASE("generation: deterministic given entropy, distinct across entropies") {
  auto entropy = fixed_entropy(0x42);
  auto a = keyssi::generate_seed_ssi("ePI.pharma", entropy).value();
  auto b = keyssi::generate_seed_ssi("ePI.pharma", entropy).value();
  CHECK(a == b);
  CHECK(a.str().starts_with("ssi:seed:ePI.pharma:"));

  std::set<std::string> type_specifics;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    type_specifics.insert(seed_owner("ePI.pharma", i).type_specific);
  }
  CHECK(type_specifics.size() == 1000);

  CHECK_FALSE(keyssi::generate_seed_ssi("ePI.pharma", Bytes(16, 1)).ok());
  CHECK_FALSE(keyssi::generate_seed_ssi("bad domain", entropy).ok());
}

TEST_CASE("derive: deterministic chains, strictly decreasing rank, terminal errors") {
  auto seed = seed_owner("ePI.pharma", 7);
  auto sread = keyssi::derive(seed).value();
  auto sza = keyssi::derive(sread).value();
  CHECK(sread.type == SsiType::SRead);
  CHECK(sza.type == SsiType::Sza);
  CHECK(static_cast<int>(sread.rank()) > static_cast<int>(seed.rank()));
  CHECK(static_cast<int>(sza.rank()) > static_cast<int>(sread.rank()));

  // derive(derive(seed)) equals deriving twice from the same start
  CHECK(keyssi::derive(keyssi::derive(seed).value()).value() == sza);

  auto terminal = keyssi::derive(sza);
  REQUIRE_FALSE(terminal.ok());
  CHECK(terminal.error().code == Errc::validation);

  auto secret = secret_owner("ePI.pharma", 7);
  auto anchor = keyssi::derive(secret).value();
  auto read = keyssi::derive(anchor).value();
  auto pub = keyssi::derive(read).value();
  auto za = keyssi::derive(pub).value();
  CHECK(anchor.type == SsiType::Anchor);
  CHECK(read.type == SsiType::Read);
  CHECK(pub.type == SsiType::Public);
  CHECK(za.type == SsiType::Za);
  CHECK_FALSE(keyssi::derive(za).ok());

  // Mid-chain derivation works without owner material.
  CHECK(keyssi::derive(keyssi::derive(anchor).value()).value() == pub);
}

TEST_CASE("derive: 100 random seeds yield 300 distinct identifiers") {
  std::set<std::string> all;
  for (std::uint64_t i = 0; i < 100; ++i) {
    auto seed = seed_owner("ePI.pharma", 1000 + i);
    auto sread = keyssi::derive(seed).value();
    auto sza = keyssi::derive(sread).value();
    all.insert(seed.str());
    all.insert(sread.str());
    all.insert(sza.str());
  }
  CHECK(all.size() == 300);
}

TEST_CASE("derive: one-wayness proxy — no derived field repeats the parent secret") {
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto seed = seed_owner("ePI.pharma", 50 + i);
    auto sread = keyssi::derive(seed).value();
    CHECK(sread.type_specific != seed.type_specific);
    CHECK(sread.control != seed.type_specific);
    auto secret = secret_owner("ePI.pharma", 50 + i);
    for (auto cur = keyssi::derive(secret); cur.ok(); cur = keyssi::derive(cur.value())) {
      CHECK(cur.value().type_specific != secret.type_specific);
      CHECK(cur.value().control != secret.type_specific);
    }
  }
}

TEST_CASE("sign/verify: four-way family truth table") {
  const Bytes payload = to_bytes("anchification payload");
  for (bool use_secret : {false, true}) {
    auto owner_a = use_secret ? secret_owner("ePI.pharma", 11) : seed_owner("ePI.pharma", 11);
    auto owner_b = use_secret ? secret_owner("ePI.pharma", 12) : seed_owner("ePI.pharma", 12);
    auto za_a = keyssi::derive_to(owner_a, AccessRank::ZeroAccess).value();
    auto za_b = keyssi::derive_to(owner_b, AccessRank::ZeroAccess).value();

    auto sig_a = keyssi::sign(owner_a, payload).value();
    auto sig_b = keyssi::sign(owner_b, payload).value();

    CHECK(keyssi::verify(za_a, payload, sig_a));
    CHECK(keyssi::verify(za_b, payload, sig_b));
    CHECK_FALSE(keyssi::verify(za_b, payload, sig_a));
    CHECK_FALSE(keyssi::verify(za_a, payload, sig_b));
  }
}

TEST_CASE("sign: anchor rank signs in the secret family; read-level ranks cannot") {
  const Bytes payload = to_bytes("p");
  auto secret = secret_owner("ePI.pharma", 21);
  auto anchor = keyssi::derive(secret).value();
  auto za = keyssi::derive_to(secret, AccessRank::ZeroAccess).value();
  auto sig = keyssi::sign(anchor, payload).value();
  CHECK(keyssi::verify(za, payload, sig));

  auto seed = seed_owner("ePI.pharma", 21);
  auto sread = keyssi::derive(seed).value();
  auto denied = keyssi::sign(sread, payload);
  REQUIRE_FALSE(denied.ok());
  CHECK(denied.error().code == Errc::privilege);

  auto read = keyssi::derive(anchor).value();
  CHECK_FALSE(keyssi::sign(read, payload).ok());
}

TEST_CASE("verify: malformed signatures return false, never throw") {
  auto seed = seed_owner("ePI.pharma", 31);
  auto za = keyssi::derive_to(seed, AccessRank::ZeroAccess).value();
  const Bytes payload = to_bytes("x");
  auto good = keyssi::sign(seed, payload).value();

  keyssi::Signature bad = good;
  bad.bytes.resize(10);
  CHECK_FALSE(keyssi::verify(za, payload, bad));
  bad = good;
  bad.public_key.clear();
  CHECK_FALSE(keyssi::verify(za, payload, bad));
  bad = good;
  bad.algorithm = "rsa";
  CHECK_FALSE(keyssi::verify(za, payload, bad));
  bad = good;
  bad.public_key[4] ^= 0xff;  // pk no longer matches the control commitment
  CHECK_FALSE(keyssi::verify(za, payload, bad));
}

TEST_CASE("encryption_key: shared at rank >= read, denied below, distinct per family") {
  auto seed = seed_owner("ePI.pharma", 41);
  auto sread = keyssi::derive(seed).value();
  auto sza = keyssi::derive(sread).value();
  CHECK(keyssi::encryption_key(seed).value() == keyssi::encryption_key(sread).value());
  auto denied = keyssi::encryption_key(sza);
  REQUIRE_FALSE(denied.ok());
  CHECK(denied.error().code == Errc::privilege);

  auto secret = secret_owner("ePI.pharma", 41);
  auto anchor = keyssi::derive(secret).value();
  auto read = keyssi::derive(anchor).value();
  auto pub = keyssi::derive(read).value();
  CHECK(keyssi::encryption_key(secret).value() == keyssi::encryption_key(read).value());
  CHECK(keyssi::encryption_key(anchor).value() == keyssi::encryption_key(read).value());
  CHECK_FALSE(keyssi::encryption_key(pub).ok());
  CHECK_FALSE(keyssi::encryption_key(keyssi::derive(pub).value()).ok());

  std::set<Bytes> keys;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    keys.insert(keyssi::encryption_key(seed_owner("ePI.pharma", 2000 + i)).value());
  }
  CHECK(keys.size() == 1000);
}

TEST_CASE("const identifiers: deterministic, name-sensitive, ':' rejected") {
  auto a = keyssi::create_const_ssi("pharma", "product-gtin-0001").value();
  auto b = keyssi::create_const_ssi("pharma", "product-gtin-0001").value();
  CHECK(a == b);
  CHECK(a.str() == "ssi:const:pharma:product-gtin-0001::v0");

  auto c = keyssi::create_const_ssi("pharma", "product-gtin-0002").value();
  CHECK(a.str() != c.str());
  CHECK(keyssi::const_backing_owner(a).value() != keyssi::const_backing_owner(c).value());

  CHECK_FALSE(keyssi::create_const_ssi("pharma", "a:b").ok());
  CHECK_FALSE(keyssi::create_const_ssi("pharma", "").ok());

  // backing family is derivable from the public name alone and stable
  auto backing1 = keyssi::const_backing_owner(a).value();
  auto backing2 = keyssi::const_backing_owner(b).value();
  CHECK(backing1 == backing2);
  CHECK(backing1.type == SsiType::Seed);
}

TEST_CASE("golden vectors: frozen file matches regeneration and a raw-crypto oracle") {
  auto text = slurp(std::filesystem::path(test_data_dir()) / "keyssi_vectors.json");
  REQUIRE_FALSE(text.empty());
  auto doc = nlohmann::json::parse(text);
  const std::string payload = doc.at("payload").get<std::string>();

  for (const auto& vec : doc.at("vectors")) {
    const std::string domain = vec.at("domain").get<std::string>();
    Bytes entropy = encoding::hex_decode(vec.at("entropy_hex").get<std::string>()).value();

    // Implementation path
    auto seed = keyssi::generate_seed_ssi(domain, entropy).value();
    auto sread = keyssi::derive(seed).value();
    auto sza = keyssi::derive(sread).value();
    CHECK(seed.str() == vec.at("seed_family").at("seed").get<std::string>());
    CHECK(sread.str() == vec.at("seed_family").at("sread").get<std::string>());
    CHECK(sza.str() == vec.at("seed_family").at("sza").get<std::string>());

    auto secret = keyssi::generate_secret_ssi(domain, entropy).value();
    auto anchor = keyssi::derive(secret).value();
    auto read = keyssi::derive(anchor).value();
    auto pub = keyssi::derive(read).value();
    auto za = keyssi::derive(pub).value();
    CHECK(secret.str() == vec.at("secret_family").at("secret").get<std::string>());
    CHECK(anchor.str() == vec.at("secret_family").at("anchor").get<std::string>());
    CHECK(read.str() == vec.at("secret_family").at("read").get<std::string>());
    CHECK(pub.str() == vec.at("secret_family").at("public").get<std::string>());
    CHECK(za.str() == vec.at("secret_family").at("za").get<std::string>());

    CHECK(encoding::hex_encode(keyssi::signing_public_key(seed).value()) ==
          vec.at("seed_signing_pub_hex").get<std::string>());
    CHECK(encoding::hex_encode(keyssi::encryption_key(seed).value()) ==
          vec.at("seed_symmetric_key_hex").get<std::string>());
    CHECK(encoding::hex_encode(keyssi::sign(seed, to_bytes(payload)).value().bytes) ==
          vec.at("seed_signature_hex").get<std::string>());
    CHECK(encoding::hex_encode(keyssi::signing_public_key(secret).value()) ==
          vec.at("secret_signing_pub_hex").get<std::string>());
    CHECK(encoding::hex_encode(keyssi::encryption_key(secret).value()) ==
          vec.at("secret_symmetric_key_hex").get<std::string>());
    CHECK(encoding::hex_encode(keyssi::sign(secret, to_bytes(payload)).value().bytes) ==
          vec.at("secret_signature_hex").get<std::string>());

    // Independent oracle: re-derive the seed-family chain with raw crypto
    // primitives following the documented rules, bypassing the keyssi module.
    Bytes sread_bytes = crypto::sha256(entropy);
    CHECK(encoding::b64url_encode(sread_bytes) == sread.type_specific);
    Bytes state = to_bytes("dsukit:state-root:");
    state.insert(state.end(), sread_bytes.begin(), sread_bytes.end());
    CHECK(encoding::b64url_encode(crypto::sha256(state)) == sza.type_specific);
    auto pair = crypto::ed25519_from_seed(entropy);
    CHECK(encoding::b64url_encode(crypto::sha256(pair.public_key)) == seed.control);
    CHECK(crypto::hkdf_sha256(sread_bytes, "dsu-read") ==
          keyssi::encryption_key(sread).value());

    // Secret family oracle: anchor = sha256(root || ":anchor"),
    // read = sha256(anchor || ":read").
    Bytes anchor_in = entropy;
    const std::string anchor_label = ":anchor";
    anchor_in.insert(anchor_in.end(), anchor_label.begin(), anchor_label.end());
    Bytes anchor_bytes = crypto::sha256(anchor_in);
    CHECK(encoding::b64url_encode(anchor_bytes) == anchor.type_specific);
    Bytes read_in = anchor_bytes;
    const std::string read_label = ":read";
    read_in.insert(read_in.end(), read_label.begin(), read_label.end());
    CHECK(encoding::b64url_encode(crypto::sha256(read_in)) == read.type_specific);
  }
}

TEST_SUITE_END();
