#include "dsukit/keyssi.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <nlohmann/json.hpp>

namespace dsukit::keyssi {

namespace {

using nlohmann::json;

constexpr std::string_view kSchema = "ssi";

// Derivation labels. Each step hashes the parent's private material with the
// child rank's label; the terminal zero-access value commits to a canonical
// state-root string so it can be anchored without exposing anything above it.
constexpr std::string_view kAnchorLabel = ":anchor";
constexpr std::string_view kReadLabel = ":read";
constexpr std::string_view kStateRootPrefix = "dsukit:state-root:";
constexpr std::string_view kConstPrefix = "dsukit:const:";
constexpr std::string_view kEciesInfo = "dsu-ecies";
constexpr std::string_view kReadKeyInfo = "dsu-read";
constexpr std::string_view kSecretFolderInfo = "dsu-secret";

struct TypeInfo {
  SsiType type;
  std::string_view token;
  AccessRank rank;
  Family family;
};

constexpr std::array<TypeInfo, 11> kTypes{{
    {SsiType::Seed, "seed", AccessRank::Owner, Family::Seed},
    {SsiType::SRead, "sread", AccessRank::Read, Family::Seed},
    {SsiType::Sza, "sza", AccessRank::ZeroAccess, Family::Seed},
    {SsiType::Secret, "secret", AccessRank::Owner, Family::Secret},
    {SsiType::Anchor, "anchor", AccessRank::Anchor, Family::Secret},
    {SsiType::Read, "read", AccessRank::Read, Family::Secret},
    {SsiType::Public, "public", AccessRank::Public, Family::Secret},
    {SsiType::Za, "za", AccessRank::ZeroAccess, Family::Secret},
    {SsiType::Const, "const", AccessRank::Owner, Family::Const},
    {SsiType::Enc, "enc", AccessRank::None, Family::Other},
    {SsiType::HashLink, "hashlink", AccessRank::None, Family::Other},
}};

const TypeInfo& info_of(SsiType t) {
  for (const auto& i : kTypes) {
    if (i.type == t) return i;
  }
  return kTypes[0];  // unreachable
}

bool printable_token(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return c >= 0x20 && c <= 0x7e && c != ':'; });
}

bool valid_version(std::string_view v) {
  if (v.size() < 2 || v[0] != 'v') return false;
  return std::all_of(v.begin() + 1, v.end(), [](unsigned char c) { return std::isdigit(c); });
}

Bytes concat(std::span<const std::uint8_t> a, std::string_view b) {
  Bytes out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Bytes concat(std::string_view a, std::span<const std::uint8_t> b) {
  Bytes out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::string control_for(std::span<const std::uint8_t> signing_seed) {
  auto pub = crypto::ed25519_from_seed(signing_seed).public_key;
  return encoding::b64url_encode(crypto::sha256(pub));
}

// All key material derivable from one identifier's own rank.
struct Material {
  Family family = Family::Other;
  std::optional<Bytes> root;
  std::optional<Bytes> anchor_bytes;  // Secret family signing level
  std::optional<Bytes> read_bytes;
  std::optional<Bytes> public_bytes;  // family X25519 public key
  std::optional<Bytes> za_bytes;
  std::optional<Bytes> signing_seed;
};

Bytes state_root_hash(std::span<const std::uint8_t> parent) {
  return crypto::sha256(concat(kStateRootPrefix, parent));
}

Bytes ecies_pub_of(std::span<const std::uint8_t> read_bytes) {
  auto priv = crypto::hkdf_sha256(read_bytes, kEciesInfo, crypto::kX25519KeySize);
  return crypto::x25519_from_private(priv).public_key;
}

Result<Bytes> decode_field(const std::string& token, const char* field) {
  auto r = encoding::b64url_decode(token);
  if (!r.ok()) return make_error(Errc::validation, "undecodable key material", field);
  return r;
}

Bytes const_root(const std::string& domain, const std::string& name) {
  std::string s;
  s.reserve(kConstPrefix.size() + domain.size() + 1 + name.size());
  s.append(kConstPrefix).append(domain).push_back(':');
  s.append(name);
  return crypto::sha256(s);
}

Result<Material> family_material(const KeySsi& ssi) {
  Material m;
  m.family = ssi.family();
  switch (ssi.type) {
    case SsiType::Seed:
    case SsiType::Const: {
      Bytes root;
      if (ssi.type == SsiType::Const) {
        root = const_root(ssi.domain, ssi.type_specific);
      } else {
        auto r = decode_field(ssi.type_specific, "type_specific");
        if (!r.ok()) return r.error();
        root = std::move(r).value();
      }
      if (root.size() != 32) return make_error(Errc::validation, "seed material must be 32 bytes");
      m.family = Family::Seed;
      m.signing_seed = root;
      m.read_bytes = crypto::sha256(root);
      m.public_bytes = ecies_pub_of(*m.read_bytes);
      m.za_bytes = state_root_hash(*m.read_bytes);
      m.root = std::move(root);
      return m;
    }
    case SsiType::SRead: {
      auto r = decode_field(ssi.type_specific, "type_specific");
      if (!r.ok()) return r.error();
      m.read_bytes = std::move(r).value();
      m.public_bytes = ecies_pub_of(*m.read_bytes);
      m.za_bytes = state_root_hash(*m.read_bytes);
      return m;
    }
    case SsiType::Sza: {
      auto r = decode_field(ssi.type_specific, "type_specific");
      if (!r.ok()) return r.error();
      m.za_bytes = std::move(r).value();
      return m;
    }
    case SsiType::Secret: {
      auto r = decode_field(ssi.type_specific, "type_specific");
      if (!r.ok()) return r.error();
      m.root = std::move(r).value();
      if (m.root->size() != 32) return make_error(Errc::validation, "seed material must be 32 bytes");
      m.anchor_bytes = crypto::sha256(concat(*m.root, kAnchorLabel));
      m.signing_seed = m.anchor_bytes;
      m.read_bytes = crypto::sha256(concat(*m.anchor_bytes, kReadLabel));
      m.public_bytes = ecies_pub_of(*m.read_bytes);
      m.za_bytes = state_root_hash(*m.public_bytes);
      return m;
    }
    case SsiType::Anchor: {
      auto r = decode_field(ssi.type_specific, "type_specific");
      if (!r.ok()) return r.error();
      m.anchor_bytes = std::move(r).value();
      m.signing_seed = m.anchor_bytes;
      m.read_bytes = crypto::sha256(concat(*m.anchor_bytes, kReadLabel));
      m.public_bytes = ecies_pub_of(*m.read_bytes);
      m.za_bytes = state_root_hash(*m.public_bytes);
      return m;
    }
    case SsiType::Read: {
      auto r = decode_field(ssi.type_specific, "type_specific");
      if (!r.ok()) return r.error();
      m.read_bytes = std::move(r).value();
      m.public_bytes = ecies_pub_of(*m.read_bytes);
      m.za_bytes = state_root_hash(*m.public_bytes);
      return m;
    }
    case SsiType::Public: {
      auto r = decode_field(ssi.type_specific, "type_specific");
      if (!r.ok()) return r.error();
      m.public_bytes = std::move(r).value();
      m.za_bytes = state_root_hash(*m.public_bytes);
      return m;
    }
    case SsiType::Za: {
      auto r = decode_field(ssi.type_specific, "type_specific");
      if (!r.ok()) return r.error();
      m.za_bytes = std::move(r).value();
      return m;
    }
    case SsiType::Enc:
    case SsiType::HashLink:
      return make_error(Errc::validation, "identifier carries no family key material");
  }
  return make_error(Errc::internal, "unhandled type");
}

KeySsi sibling(const KeySsi& parent, SsiType type, std::string type_specific,
               std::string control) {
  KeySsi out;
  out.type = type;
  out.domain = parent.domain;
  out.type_specific = std::move(type_specific);
  out.control = std::move(control);
  out.version = "v0";
  return out;
}

}  // namespace

const char* type_token(SsiType t) { return info_of(t).token.data(); }

const char* rank_name(AccessRank r) {
  switch (r) {
    case AccessRank::Owner: return "owner";
    case AccessRank::Anchor: return "anchor";
    case AccessRank::Read: return "read";
    case AccessRank::Public: return "public";
    case AccessRank::ZeroAccess: return "zero-access";
    case AccessRank::None: return "none";
  }
  return "unknown";
}

std::optional<SsiType> type_from_token(std::string_view token) {
  for (const auto& i : kTypes) {
    if (i.token == token) return i.type;
  }
  return std::nullopt;
}

std::string KeySsi::str() const {
  std::string out;
  out.reserve(8 + domain.size() + type_specific.size() + control.size() + version.size() +
              (hint ? hint->size() + 1 : 0));
  out.append(kSchema).push_back(':');
  out.append(type_token(type)).push_back(':');
  out.append(domain).push_back(':');
  out.append(type_specific).push_back(':');
  out.append(control).push_back(':');
  out.append(version);
  if (hint) {
    out.push_back(':');
    out.append(*hint);
  }
  return out;
}

AccessRank KeySsi::rank() const { return info_of(type).rank; }
Family KeySsi::family() const { return info_of(type).family; }

Result<void> validate_domain(std::string_view domain) {
  if (domain.empty()) return make_error(Errc::parse_error, "domain is empty", "domain");
  size_t label_len = 0;
  for (char c : domain) {
    if (c == '.') {
      if (label_len == 0) return make_error(Errc::parse_error, "empty domain label", "domain");
      label_len = 0;
      continue;
    }
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    if (!ok) return make_error(Errc::parse_error, "illegal character in domain", "domain");
    ++label_len;
  }
  if (label_len == 0) return make_error(Errc::parse_error, "empty domain label", "domain");
  return {};
}

Result<KeySsi> parse(std::string_view text) {
  // Split into at most 7 logical fields; every ':' past the sixth separator
  // belongs to the hint, which is preserved verbatim.
  constexpr size_t npos = std::string_view::npos;
  std::array<std::string_view, 7> fields;
  size_t n = 0;
  size_t start = 0;
  while (n < 6) {
    size_t pos = text.find(':', start);
    if (pos == npos) {
      fields[n++] = text.substr(start);
      start = npos;
      break;
    }
    fields[n++] = text.substr(start, pos - start);
    start = pos + 1;
  }
  if (start != npos && n == 6) fields[n++] = text.substr(start);

  if (n < 5) {
    return make_error(Errc::parse_error, "expected 5 to 7 ':'-separated fields", "field-count");
  }

  if (fields[0] != kSchema) {
    return make_error(Errc::parse_error, "schema tag must be 'ssi'", "schema");
  }
  auto type = type_from_token(fields[1]);
  if (!type) {
    return make_error(Errc::parse_error, "unknown type token '" + std::string(fields[1]) + "'",
                      "type");
  }
  if (auto d = validate_domain(fields[2]); !d.ok()) return d.error();
  if (fields[3].empty() || !printable_token(fields[3])) {
    return make_error(Errc::parse_error, "type-specific field empty or non-printable",
                      "type_specific");
  }
  if (!printable_token(fields[4])) {
    return make_error(Errc::parse_error, "control field non-printable", "control");
  }

  KeySsi out;
  out.type = *type;
  out.domain = std::string(fields[2]);
  out.type_specific = std::string(fields[3]);
  out.control = std::string(fields[4]);
  if (n >= 6) {
    if (!valid_version(fields[5])) {
      return make_error(Errc::parse_error, "version must match v<digits>", "version");
    }
    out.version = std::string(fields[5]);
  }
  if (n == 7) out.hint = std::string(fields[6]);
  return out;
}

Result<KeySsi> generate_seed_ssi(const std::string& domain,
                                 std::span<const std::uint8_t> entropy) {
  if (auto d = validate_domain(domain); !d.ok()) return d.error();
  if (entropy.size() != 32) return make_error(Errc::validation, "entropy must be 32 bytes");
  KeySsi out;
  out.type = SsiType::Seed;
  out.domain = domain;
  out.type_specific = encoding::b64url_encode(entropy);
  out.control = control_for(entropy);
  return out;
}

Result<KeySsi> generate_seed_ssi(const std::string& domain) {
  return generate_seed_ssi(domain, crypto::random_bytes(32));
}

Result<KeySsi> generate_secret_ssi(const std::string& domain,
                                   std::span<const std::uint8_t> entropy) {
  if (auto d = validate_domain(domain); !d.ok()) return d.error();
  if (entropy.size() != 32) return make_error(Errc::validation, "entropy must be 32 bytes");
  Bytes anchor = crypto::sha256(concat(entropy, kAnchorLabel));
  KeySsi out;
  out.type = SsiType::Secret;
  out.domain = domain;
  out.type_specific = encoding::b64url_encode(entropy);
  out.control = control_for(anchor);
  return out;
}

Result<KeySsi> generate_secret_ssi(const std::string& domain) {
  return generate_secret_ssi(domain, crypto::random_bytes(32));
}

Result<KeySsi> derive(const KeySsi& ssi) {
  auto mat = family_material(ssi);
  if (!mat.ok()) return mat.error();
  const Material& m = mat.value();
  switch (ssi.type) {
    case SsiType::Seed:
      return sibling(ssi, SsiType::SRead, encoding::b64url_encode(*m.read_bytes),
                     control_for(*m.signing_seed));
    case SsiType::SRead:
      return sibling(ssi, SsiType::Sza, encoding::b64url_encode(*m.za_bytes), ssi.control);
    case SsiType::Secret:
      return sibling(ssi, SsiType::Anchor, encoding::b64url_encode(*m.anchor_bytes),
                     control_for(*m.signing_seed));
    case SsiType::Anchor:
      return sibling(ssi, SsiType::Read, encoding::b64url_encode(*m.read_bytes),
                     control_for(*m.signing_seed));
    case SsiType::Read:
      return sibling(ssi, SsiType::Public, encoding::b64url_encode(*m.public_bytes), ssi.control);
    case SsiType::Public:
      return sibling(ssi, SsiType::Za, encoding::b64url_encode(*m.za_bytes), ssi.control);
    case SsiType::Sza:
    case SsiType::Za:
      return make_error(Errc::validation, "terminal rank: no lower access level exists");
    case SsiType::Const:
    case SsiType::Enc:
    case SsiType::HashLink:
      return make_error(Errc::validation, "type does not participate in rank derivation");
  }
  return make_error(Errc::internal, "unhandled type");
}

Result<KeySsi> derive_to(const KeySsi& ssi, AccessRank target) {
  if (target == AccessRank::None) return make_error(Errc::validation, "target rank not derivable");
  KeySsi cur = ssi;
  // Const identifiers delegate to their deterministic backing family.
  if (cur.type == SsiType::Const) {
    auto backing = const_backing_owner(cur);
    if (!backing.ok()) return backing.error();
    cur = std::move(backing).value();
  }
  for (int steps = 0; steps < 8; ++steps) {
    if (cur.rank() == target) return cur;
    auto next = derive(cur);
    if (!next.ok()) {
      return make_error(Errc::validation, std::string("rank '") + rank_name(target) +
                                              "' not reachable from this identifier");
    }
    cur = std::move(next).value();
  }
  return make_error(Errc::internal, "derivation chain too deep");
}

Result<Signature> sign(const KeySsi& ssi, std::span<const std::uint8_t> payload) {
  KeySsi signer = ssi;
  if (signer.type == SsiType::Const) {
    auto backing = const_backing_owner(signer);
    if (!backing.ok()) return backing.error();
    signer = std::move(backing).value();
  }
  auto mat = family_material(signer);
  if (!mat.ok()) return mat.error();
  const Material& m = mat.value();
  if (!m.signing_seed) {
    return make_error(Errc::privilege,
                      std::string("rank '") + rank_name(signer.rank()) + "' cannot sign");
  }
  Signature sig;
  sig.algorithm = "ed25519";
  sig.public_key = crypto::ed25519_from_seed(*m.signing_seed).public_key;
  sig.bytes = crypto::ed25519_sign(*m.signing_seed, payload);
  sig.signer_control = encoding::b64url_encode(crypto::sha256(sig.public_key));
  return sig;
}

bool verify(const KeySsi& ssi, std::span<const std::uint8_t> payload, const Signature& sig) {
  if (sig.algorithm != "ed25519") return false;
  if (sig.public_key.size() != crypto::kEd25519PublicKeySize) return false;

  std::string expected_control = ssi.control;
  if (expected_control.empty() && ssi.type == SsiType::Const) {
    auto backing = const_backing_owner(ssi);
    if (!backing.ok()) return false;
    expected_control = backing.value().control;
  }
  if (expected_control.empty()) return false;
  if (encoding::b64url_encode(crypto::sha256(sig.public_key)) != expected_control) return false;
  return crypto::ed25519_verify(sig.public_key, payload, sig.bytes);
}

Result<Bytes> encryption_key(const KeySsi& ssi) {
  KeySsi holder = ssi;
  if (holder.type == SsiType::Const) {
    auto backing = const_backing_owner(holder);
    if (!backing.ok()) return backing.error();
    holder = std::move(backing).value();
  }
  auto mat = family_material(holder);
  if (!mat.ok()) return mat.error();
  if (!mat.value().read_bytes) {
    return make_error(Errc::privilege, std::string("rank '") + rank_name(holder.rank()) +
                                           "' holds no read-level material");
  }
  return crypto::hkdf_sha256(*mat.value().read_bytes, kReadKeyInfo);
}

Result<KeySsi> create_const_ssi(const std::string& domain, const std::string& human_name) {
  if (auto d = validate_domain(domain); !d.ok()) return d.error();
  if (human_name.empty()) return make_error(Errc::validation, "name is empty", "name");
  if (!printable_token(human_name)) {
    return make_error(Errc::validation, "name must be printable and contain no ':'", "name");
  }
  KeySsi out;
  out.type = SsiType::Const;
  out.domain = domain;
  out.type_specific = human_name;
  return out;
}

Result<KeySsi> const_backing_owner(const KeySsi& const_ssi) {
  if (const_ssi.type != SsiType::Const) {
    return make_error(Errc::validation, "not a const identifier");
  }
  Bytes root = const_root(const_ssi.domain, const_ssi.type_specific);
  return generate_seed_ssi(const_ssi.domain, root);
}

Result<Bytes> signing_public_key(const KeySsi& ssi) {
  KeySsi holder = ssi;
  if (holder.type == SsiType::Const) {
    auto backing = const_backing_owner(holder);
    if (!backing.ok()) return backing.error();
    holder = std::move(backing).value();
  }
  auto mat = family_material(holder);
  if (!mat.ok()) return mat.error();
  if (!mat.value().signing_seed) {
    return make_error(Errc::privilege, "rank holds no signing material");
  }
  return crypto::ed25519_from_seed(*mat.value().signing_seed).public_key;
}

Result<Bytes> ecies_public_key(const KeySsi& ssi) {
  auto mat = family_material(ssi);
  if (!mat.ok()) return mat.error();
  if (!mat.value().public_bytes) {
    return make_error(Errc::privilege, "rank exposes no encryption public key");
  }
  return *mat.value().public_bytes;
}

Result<Bytes> ecies_private_key(const KeySsi& ssi) {
  KeySsi holder = ssi;
  if (holder.type == SsiType::Const) {
    auto backing = const_backing_owner(holder);
    if (!backing.ok()) return backing.error();
    holder = std::move(backing).value();
  }
  auto mat = family_material(holder);
  if (!mat.ok()) return mat.error();
  if (!mat.value().read_bytes) {
    return make_error(Errc::privilege, "rank below read level cannot decrypt");
  }
  return crypto::hkdf_sha256(*mat.value().read_bytes, kEciesInfo, crypto::kX25519KeySize);
}

Result<Bytes> secret_folder_key(const KeySsi& ssi) {
  auto mat = family_material(ssi);
  if (!mat.ok()) return mat.error();
  const Material& m = mat.value();
  // Seed-family owners use the root; Secret-family owners and anchors share
  // the anchor-level material.
  if (m.anchor_bytes) return crypto::hkdf_sha256(*m.anchor_bytes, kSecretFolderInfo);
  if (m.root) return crypto::hkdf_sha256(*m.root, kSecretFolderInfo);
  return make_error(Errc::privilege, "secret folder requires anchor rank or above");
}

Result<KeySsi> anchor_id_of(const KeySsi& ssi) {
  if (ssi.rank() == AccessRank::ZeroAccess) return ssi;
  return derive_to(ssi, AccessRank::ZeroAccess);
}

Result<KeySsi> make_hashlink(const std::string& domain, const std::string& hash_hex) {
  if (auto d = validate_domain(domain); !d.ok()) return d.error();
  auto raw = encoding::hex_decode(hash_hex);
  if (!raw.ok() || raw.value().size() != crypto::kHashSize) {
    return make_error(Errc::validation, "hash must be 64 lowercase hex characters", "hash");
  }
  KeySsi out;
  out.type = SsiType::HashLink;
  out.domain = domain;
  out.type_specific = hash_hex;
  return out;
}

std::string signature_to_json(const Signature& sig) {
  json j;
  j["algorithm"] = sig.algorithm;
  j["public_key"] = encoding::b64url_encode(sig.public_key);
  j["signature"] = encoding::b64url_encode(sig.bytes);
  j["signer_control"] = sig.signer_control;
  return j.dump();
}

Result<Signature> signature_from_json(std::string_view json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return make_error(Errc::parse_error, "malformed signature object", "signature");
  }
  Signature sig;
  try {
    sig.algorithm = j.at("algorithm").get<std::string>();
    auto pk = encoding::b64url_decode(j.at("public_key").get<std::string>());
    auto sb = encoding::b64url_decode(j.at("signature").get<std::string>());
    if (!pk.ok() || !sb.ok()) {
      return make_error(Errc::parse_error, "undecodable signature fields", "signature");
    }
    sig.public_key = std::move(pk).value();
    sig.bytes = std::move(sb).value();
    sig.signer_control = j.value("signer_control", "");
  } catch (const json::exception&) {
    return make_error(Errc::parse_error, "missing signature fields", "signature");
  }
  return sig;
}

}  // namespace dsukit::keyssi
