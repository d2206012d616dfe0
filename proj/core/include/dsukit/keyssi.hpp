#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "dsukit/crypto.hpp"
#include "dsukit/encoding.hpp"
#include "dsukit/errors.hpp"

// KeySSI identifiers: typed, domain-scoped strings that double as key
// material. Grammar: ssi:<type>:<domain>:<type-specific>:<control>[:<vn>[:<hint>]]
//
// Two derivation families are executable here. Deriving always yields the
// next lower access rank and is one-way:
//   seed   -> sread  -> sza                         (Seed family)
//   secret -> anchor -> read -> public -> za        (Secret family)
namespace dsukit::keyssi {

enum class SsiType {
  Seed,
  SRead,
  Sza,
  Secret,
  Anchor,
  Read,
  Public,
  Za,
  Const,
  Enc,
  HashLink,
};

// Lower numeric value = more privilege.
enum class AccessRank {
  Owner = 0,
  Anchor = 1,
  Read = 2,
  Public = 3,
  ZeroAccess = 4,
  None = 5,
};

enum class Family { Seed, Secret, Const, Other };

const char* type_token(SsiType t);
const char* rank_name(AccessRank r);
std::optional<SsiType> type_from_token(std::string_view token);

struct KeySsi {
  SsiType type = SsiType::Seed;
  std::string domain;
  std::string type_specific;  // token text: base64url, hex, or a const name
  std::string control;        // token text, may be empty
  std::string version = "v0";
  std::optional<std::string> hint;

  std::string str() const;  // canonical serialization (always emits version)
  AccessRank rank() const;
  Family family() const;

  bool operator==(const KeySsi&) const = default;
};

Result<KeySsi> parse(std::string_view text);

Result<void> validate_domain(std::string_view domain);

// Generation. Entropy must be exactly 32 bytes; the one-argument overloads
// draw from the system RNG.
Result<KeySsi> generate_seed_ssi(const std::string& domain, std::span<const std::uint8_t> entropy);
Result<KeySsi> generate_seed_ssi(const std::string& domain);
Result<KeySsi> generate_secret_ssi(const std::string& domain, std::span<const std::uint8_t> entropy);
Result<KeySsi> generate_secret_ssi(const std::string& domain);

// Next lower rank in the same family. Errors with Errc::validation on
// terminal (zero-access) and non-derivable types.
Result<KeySsi> derive(const KeySsi& ssi);

// Walks derive() until `target` is reached. Errors if the rank is above the
// starting point or not present in the family.
Result<KeySsi> derive_to(const KeySsi& ssi, AccessRank target);

struct Signature {
  std::string algorithm;   // "ed25519"
  Bytes bytes;             // 64-byte signature
  Bytes public_key;        // carried so verifiers can match hash(pk) == control
  std::string signer_control;
};

// Owner rank signs in every family; Anchor rank additionally signs in the
// Secret family. All other ranks get Errc::privilege.
Result<Signature> sign(const KeySsi& ssi, std::span<const std::uint8_t> payload);

// True iff sig verifies over payload AND sha256(sig.public_key) matches the
// family control committed by `ssi`. Malformed input yields false, never an
// exception.
bool verify(const KeySsi& ssi, std::span<const std::uint8_t> payload, const Signature& sig);

// 32-byte symmetric key shared by every rank >= Read in one family.
Result<Bytes> encryption_key(const KeySsi& ssi);

// Human-memorable const identifier; the dsu module gives it resolution
// semantics. The name is kept verbatim in the type-specific field.
Result<KeySsi> create_const_ssi(const std::string& domain, const std::string& human_name);

// Owner-rank identifier of the deterministic family backing a const name.
// Anyone holding the const identifier can compute it; immutability comes
// from pinning resolution to the first anchored version.
Result<KeySsi> const_backing_owner(const KeySsi& const_ssi);

// Key-material accessors used by the dsu, anchoring, and messaging modules.
Result<Bytes> signing_public_key(const KeySsi& ssi);   // any rank (recomputed downward)
Result<Bytes> ecies_public_key(const KeySsi& ssi);     // rank >= Public (Secret), >= Read (Seed)
Result<Bytes> ecies_private_key(const KeySsi& ssi);    // rank >= Read
Result<Bytes> secret_folder_key(const KeySsi& ssi);    // rank >= Anchor
Result<KeySsi> anchor_id_of(const KeySsi& ssi);        // zero-access identifier of the family

// hashlink-type identifier wrapping a hex brick-map hash.
Result<KeySsi> make_hashlink(const std::string& domain, const std::string& hash_hex);

// Signature <-> JSON-ish token helpers used by wire formats and the ledger.
std::string signature_to_json(const Signature& sig);
Result<Signature> signature_from_json(std::string_view json_text);

}  // namespace dsukit::keyssi
