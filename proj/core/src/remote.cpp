#include "dsukit/remote.hpp"

#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace dsukit::remote {

namespace {

using nlohmann::json;

Errc errc_from_name(const std::string& name) {
  for (int c = 0; c <= static_cast<int>(Errc::internal); ++c) {
    if (name == errc_name(static_cast<Errc>(c))) return static_cast<Errc>(c);
  }
  return Errc::internal;
}

Error decode_failure(const httplib::Result& result) {
  if (!result) {
    return Error{Errc::retryable, "hub unreachable: " + httplib::to_string(result.error())};
  }
  json j = json::parse(result->body, nullptr, false);
  if (!j.is_discarded() && j.is_object() && j.contains("code")) {
    return Error{errc_from_name(j.value("code", "internal")), j.value("message", ""),
                 j.value("field", "")};
  }
  return Error{Errc::internal, "hub returned status " + std::to_string(result->status)};
}

Result<std::string> domain_of(const std::string& anchor_id) {
  auto ssi = keyssi::parse(anchor_id);
  if (!ssi.ok()) {
    return make_error(Errc::validation, "anchor id is not a parseable identifier", "anchor_id");
  }
  return ssi.value().domain;
}

struct HttpClient {
  explicit HttpClient(const std::string& base_url) : client(base_url) {
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(120, 0);
    client.set_write_timeout(30, 0);
    client.set_keep_alive(true);
  }

  // httplib clients are not safe for concurrent calls.
  std::mutex mu;
  httplib::Client client;
};

}  // namespace

// ---------------------------------------------------------------------------

struct RemoteBrickStore::Impl : HttpClient {
  using HttpClient::HttpClient;
};

RemoteBrickStore::RemoteBrickStore(std::string base_url)
    : impl_(std::make_unique<Impl>(base_url)) {}

RemoteBrickStore::~RemoteBrickStore() = default;

Result<std::string> RemoteBrickStore::put(const std::string& domain,
                                          std::span<const std::uint8_t> ciphertext) {
  std::lock_guard lock(impl_->mu);
  auto result = impl_->client.Put("/bricking/" + domain + "/put",
                                  std::string(ciphertext.begin(), ciphertext.end()),
                                  "application/octet-stream");
  if (!result || result->status != 200) return decode_failure(result);
  json j = json::parse(result->body, nullptr, false);
  if (j.is_discarded() || !j.contains("hash")) {
    return make_error(Errc::internal, "malformed put response");
  }
  return j.at("hash").get<std::string>();
}

Result<Bytes> RemoteBrickStore::get(const std::string& domain, const std::string& hash_hex) {
  std::lock_guard lock(impl_->mu);
  auto result = impl_->client.Get("/bricking/" + domain + "/get/" + hash_hex);
  if (!result || result->status != 200) return decode_failure(result);
  return to_bytes(result->body);
}

// ---------------------------------------------------------------------------

struct RemoteAnchorClient::Impl : HttpClient {
  using HttpClient::HttpClient;
};

RemoteAnchorClient::RemoteAnchorClient(std::string base_url)
    : impl_(std::make_unique<Impl>(base_url)) {}

RemoteAnchorClient::~RemoteAnchorClient() = default;

Result<void> RemoteAnchorClient::create_anchor(const std::string& anchor_id) {
  auto domain = domain_of(anchor_id);
  if (!domain.ok()) return domain.error();
  std::lock_guard lock(impl_->mu);
  auto result = impl_->client.Put("/anchor/" + domain.value() + "/create/" + anchor_id, "",
                                  "application/json");
  if (!result || result->status != 200) return decode_failure(result);
  return {};
}

Result<anchoring::AppendReceipt> RemoteAnchorClient::append_version(
    const std::string& anchor_id, const std::string& new_link, const keyssi::Signature& sig,
    const std::string& expected_last, anchoring::ExecMode mode) {
  auto domain = domain_of(anchor_id);
  if (!domain.ok()) return domain.error();
  json body;
  body["new_link"] = new_link;
  body["expected_last"] = expected_last;
  body["mode"] = anchoring::exec_mode_token(mode);
  body["signature"] = json::parse(keyssi::signature_to_json(sig));

  std::lock_guard lock(impl_->mu);
  auto result = impl_->client.Put("/anchor/" + domain.value() + "/append/" + anchor_id,
                                  body.dump(), "application/json");
  if (!result || result->status != 200) return decode_failure(result);
  return anchoring::receipt_from_json(result->body);
}

Result<std::vector<anchoring::VersionEntry>> RemoteAnchorClient::get_versions(
    const std::string& anchor_id, bool include_pending) {
  auto domain = domain_of(anchor_id);
  if (!domain.ok()) return domain.error();
  std::string path = "/anchor/" + domain.value() + "/versions/" + anchor_id;
  if (include_pending) path += "?include_pending=true";
  std::lock_guard lock(impl_->mu);
  auto result = impl_->client.Get(path);
  if (!result || result->status != 200) return decode_failure(result);
  return anchoring::versions_from_json(result->body);
}

}  // namespace dsukit::remote
