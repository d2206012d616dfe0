#pragma once

#include <map>
#include <memory>
#include <string>

#include "dsukit/anchoring.hpp"
#include "dsukit/errors.hpp"

// The backend service: bricking, anchoring, BDNS, message queues, and
// notifications under one hierarchical path scheme,
//   /{component}/{blockchainDomain}/{action}/{parameters...}
// One process may serve several domains; isolated use cases run separate
// processes with their own configs. Requests are handled by a worker pool;
// per-anchor serialization lives in the anchoring module.
namespace dsukit::apihub {

struct DomainBinding {
  std::string brick_root;  // filesystem brick store root; empty = in-memory
  anchoring::BackendSpec ledger;
  anchoring::ExecMode default_mode = anchoring::ExecMode::Validated;
};

struct HubConfig {
  std::string listen_address = "127.0.0.1";
  int port = 8080;  // 0 picks an ephemeral port
  std::string instance_label = "apihub";
  std::string bdns_path;  // optional BDNS table served at GET /bdns
  std::map<std::string, DomainBinding> domains;
  int request_timeout_s = 30;
  size_t max_body_bytes = 2 * 1024 * 1024;
  bool tls = false;  // terminated by the deployment in front of the hub
  bool log_requests = true;

  static Result<HubConfig> from_json(std::string_view text);
  // Reads the file and applies DSUKIT_LISTEN / DSUKIT_PORT / DSUKIT_BDNS
  // environment overrides.
  static Result<HubConfig> from_file(const std::string& path);
};

class ApiHub {
 public:
  explicit ApiHub(HubConfig config);
  ~ApiHub();

  ApiHub(const ApiHub&) = delete;
  ApiHub& operator=(const ApiHub&) = delete;

  // Binds and serves on a background thread. Errors on unbindable ports or
  // invalid config.
  Result<void> start();

  // Graceful: stops accepting, drains in-flight requests, joins the server.
  void stop();

  int port() const;
  const HubConfig& config() const;

  // In-process access to a domain's anchor service (tests, embedded use).
  std::shared_ptr<anchoring::AnchorService> anchor_service(const std::string& domain) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dsukit::apihub
