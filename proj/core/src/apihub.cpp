#include "dsukit/apihub.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dsukit/bdns.hpp"
#include "dsukit/brickstore.hpp"
#include "dsukit/messaging.hpp"

namespace dsukit::apihub {

namespace {

using nlohmann::json;

int status_of(Errc code) {
  switch (code) {
    case Errc::parse_error:
    case Errc::validation:
    case Errc::no_changes:
      return 400;
    case Errc::auth: return 401;
    case Errc::privilege: return 403;
    case Errc::not_found:
    case Errc::incomplete_domain:
      return 404;
    case Errc::conflict:
    case Errc::already_exists:
    case Errc::immutable:
    case Errc::corruption:
    case Errc::cycle:
      return 409;
    case Errc::backpressure: return 429;
    case Errc::retryable: return 503;
    case Errc::config:
    case Errc::io:
    case Errc::internal:
      return 500;
  }
  return 500;
}

void fail(httplib::Response& res, const Error& e) {
  json j;
  j["code"] = errc_name(e.code);
  j["message"] = e.message;
  if (!e.field.empty()) j["field"] = e.field;
  res.status = status_of(e.code);
  res.set_content(j.dump(), "application/json");
}

void fail(httplib::Response& res, Errc code, std::string message, std::string field = {}) {
  fail(res, Error{code, std::move(message), std::move(field)});
}

void reply_json(httplib::Response& res, std::string body) {
  res.status = 200;
  res.set_content(std::move(body), "application/json");
}

thread_local std::chrono::steady_clock::time_point t_request_start;

Result<anchoring::ExecMode> mode_from_body(const json& body, anchoring::ExecMode fallback) {
  if (!body.contains("mode") || body.at("mode").is_null()) return fallback;
  if (!body.at("mode").is_string()) {
    return make_error(Errc::validation, "mode must be a string", "mode");
  }
  auto mode = anchoring::exec_mode_from_token(body.at("mode").get<std::string>());
  if (!mode) return make_error(Errc::validation, "mode must be optimistic|validated", "mode");
  return *mode;
}

}  // namespace

// ---------------------------------------------------------------------------
// HubConfig

Result<HubConfig> HubConfig::from_json(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    return make_error(Errc::config, "hub config must be a JSON object");
  }
  HubConfig cfg;
  try {
    cfg.listen_address = doc.value("listen", cfg.listen_address);
    cfg.port = doc.value("port", cfg.port);
    cfg.instance_label = doc.value("instance", cfg.instance_label);
    cfg.bdns_path = doc.value("bdns", "");
    cfg.request_timeout_s = doc.value("request_timeout_s", cfg.request_timeout_s);
    cfg.max_body_bytes = doc.value("max_body_bytes", cfg.max_body_bytes);
    cfg.tls = doc.value("tls", false);
    cfg.log_requests = doc.value("log_requests", true);

    auto default_mode = anchoring::ExecMode::Validated;
    if (doc.contains("default_mode")) {
      auto m = anchoring::exec_mode_from_token(doc.at("default_mode").get<std::string>());
      if (!m) return make_error(Errc::config, "default_mode must be optimistic|validated",
                                "default_mode");
      default_mode = *m;
    }

    if (!doc.contains("domains") || !doc.at("domains").is_object() || doc.at("domains").empty()) {
      return make_error(Errc::config, "config must bind at least one domain", "domains");
    }
    for (const auto& [name, body] : doc.at("domains").items()) {
      if (auto d = keyssi::validate_domain(name); !d.ok()) {
        return make_error(Errc::config, "invalid domain name", name);
      }
      DomainBinding binding;
      binding.default_mode = default_mode;
      binding.brick_root = body.value("brick_root", "");
      if (body.contains("default_mode")) {
        auto m = anchoring::exec_mode_from_token(body.at("default_mode").get<std::string>());
        if (!m) return make_error(Errc::config, "default_mode must be optimistic|validated", name);
        binding.default_mode = *m;
      }
      if (body.contains("ledger")) {
        const auto& l = body.at("ledger");
        binding.ledger.kind = l.value("kind", "memory");
        binding.ledger.latency_ms = l.value("latency_ms", 0.0);
        binding.ledger.cap_tps = l.value("cap_tps", 1e9);
        binding.ledger.log_path = l.value("log_path", "");
        binding.ledger.policy = l.value("policy", "light") == "heavy"
                                    ? anchoring::AnchorPolicy::Heavy
                                    : anchoring::AnchorPolicy::Light;
      }
      cfg.domains.emplace(name, std::move(binding));
    }
  } catch (const json::exception& ex) {
    return make_error(Errc::config, std::string("malformed hub config: ") + ex.what());
  }
  return cfg;
}

Result<HubConfig> HubConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return make_error(Errc::config, "cannot open hub config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto cfg = from_json(text);
  if (!cfg.ok()) return cfg;

  if (const char* listen = std::getenv("DSUKIT_LISTEN")) cfg.value().listen_address = listen;
  if (const char* port = std::getenv("DSUKIT_PORT")) cfg.value().port = std::atoi(port);
  if (const char* bdns = std::getenv("DSUKIT_BDNS")) cfg.value().bdns_path = bdns;
  return cfg;
}

// ---------------------------------------------------------------------------
// ApiHub

struct DomainStack {
  std::shared_ptr<brickstore::BrickStore> bricks;
  std::shared_ptr<anchoring::AnchorService> anchors;
  std::unique_ptr<messaging::MessageHub> mq;
  anchoring::ExecMode default_mode = anchoring::ExecMode::Validated;
};

struct ApiHub::Impl {
  HubConfig config;
  httplib::Server server;
  std::thread server_thread;
  std::map<std::string, DomainStack> stacks;
  std::unique_ptr<bdns::BdnsRegistry> bdns_registry;
  int actual_port = 0;
  bool started = false;

  DomainStack* stack_for(const std::string& domain, httplib::Response& res) {
    auto it = stacks.find(domain);
    if (it == stacks.end()) {
      fail(res, Errc::not_found, "domain '" + domain + "' is not served by this instance",
           "domain");
      return nullptr;
    }
    return &it->second;
  }

  void install_routes();
};

void ApiHub::Impl::install_routes() {
  server.Get("/ready", [this](const httplib::Request&, httplib::Response& res) {
    json j;
    j["instance"] = config.instance_label;
    j["domains"] = json::array();
    for (const auto& [name, s] : stacks) j["domains"].push_back(name);
    j["port"] = actual_port;
    reply_json(res, j.dump());
  });

  server.Put(R"(/bricking/([^/]+)/put)", [this](const httplib::Request& req,
                                                httplib::Response& res) {
    auto* stack = stack_for(req.matches[1], res);
    if (!stack) return;
    auto hash = stack->bricks->put(req.matches[1], to_bytes(req.body));
    if (!hash.ok()) return fail(res, hash.error());
    json j;
    j["hash"] = hash.value();
    reply_json(res, j.dump());
  });

  server.Get(R"(/bricking/([^/]+)/get/([^/]+))", [this](const httplib::Request& req,
                                                        httplib::Response& res) {
    auto* stack = stack_for(req.matches[1], res);
    if (!stack) return;
    auto data = stack->bricks->get(req.matches[1], req.matches[2]);
    if (!data.ok()) return fail(res, data.error());
    res.status = 200;
    res.set_content(to_string(data.value()), "application/octet-stream");
  });

  server.Put(R"(/anchor/([^/]+)/create/(.+))", [this](const httplib::Request& req,
                                                      httplib::Response& res) {
    auto* stack = stack_for(req.matches[1], res);
    if (!stack) return;
    const std::string anchor_id = req.matches[2];
    auto created = stack->anchors->create_anchor(anchor_id);
    if (!created.ok()) return fail(res, created.error());
    json j;
    j["anchor_id"] = anchor_id;
    reply_json(res, j.dump());
  });

  server.Put(R"(/anchor/([^/]+)/append/(.+))", [this](const httplib::Request& req,
                                                      httplib::Response& res) {
    auto* stack = stack_for(req.matches[1], res);
    if (!stack) return;
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      return fail(res, Errc::parse_error, "append body must be a JSON object", "body");
    }
    if (!body.contains("new_link") || !body.at("new_link").is_string()) {
      return fail(res, Errc::validation, "new_link is required", "new_link");
    }
    std::string expected;
    if (body.contains("expected_last") && !body.at("expected_last").is_null()) {
      if (!body.at("expected_last").is_string()) {
        return fail(res, Errc::validation, "expected_last must be a string or null",
                    "expected_last");
      }
      expected = body.at("expected_last").get<std::string>();
    }
    auto mode = mode_from_body(body, stack->default_mode);
    if (!mode.ok()) return fail(res, mode.error());
    if (!body.contains("signature")) {
      return fail(res, Errc::validation, "signature is required", "signature");
    }
    auto sig = keyssi::signature_from_json(body.at("signature").dump());
    if (!sig.ok()) return fail(res, sig.error());

    auto receipt = stack->anchors->append_version(req.matches[2], body.at("new_link"), sig.value(),
                                                  expected, mode.value());
    if (!receipt.ok()) return fail(res, receipt.error());
    reply_json(res, anchoring::receipt_to_json(receipt.value()));
  });

  server.Get(R"(/anchor/([^/]+)/versions/(.+))", [this](const httplib::Request& req,
                                                        httplib::Response& res) {
    auto* stack = stack_for(req.matches[1], res);
    if (!stack) return;
    const std::string anchor_id = req.matches[2];
    const std::string flag = req.get_param_value("include_pending");
    const bool include_pending = flag == "true" || flag == "1";
    auto versions = stack->anchors->get_versions(anchor_id, include_pending);
    if (!versions.ok()) return fail(res, versions.error());
    reply_json(res, anchoring::versions_to_json(anchor_id, versions.value()));
  });

  server.Get("/bdns", [this](const httplib::Request&, httplib::Response& res) {
    if (!bdns_registry) {
      return fail(res, Errc::not_found, "no BDNS table configured on this instance");
    }
    (void)bdns_registry->reload_if_changed();
    res.status = 200;
    res.set_content(bdns_registry->snapshot()->raw_json(), "application/json");
  });

  server.Put(R"(/mq/([^/]+)/put/(.+))", [this](const httplib::Request& req,
                                               httplib::Response& res) {
    auto* stack = stack_for(req.matches[1], res);
    if (!stack) return;
    auto id = stack->mq->put(req.matches[2], to_bytes(req.body));
    if (!id.ok()) return fail(res, id.error());
    json j;
    j["id"] = id.value();
    reply_json(res, j.dump());
  });

  server.Get(R"(/mq/([^/]+)/nonce/(.+))", [this](const httplib::Request& req,
                                                 httplib::Response& res) {
    auto* stack = stack_for(req.matches[1], res);
    if (!stack) return;
    auto nonce = stack->mq->issue_nonce(req.matches[2]);
    if (!nonce.ok()) return fail(res, nonce.error());
    json j;
    j["nonce"] = nonce.value();
    reply_json(res, j.dump());
  });

  server.Post(R"(/mq/([^/]+)/take/(.+))", [this](const httplib::Request& req,
                                                 httplib::Response& res) {
    auto* stack = stack_for(req.matches[1], res);
    if (!stack) return;
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("nonce") ||
        !body.contains("signature")) {
      return fail(res, Errc::parse_error, "take body needs nonce and signature", "body");
    }
    auto sig = keyssi::signature_from_json(body.at("signature").dump());
    if (!sig.ok()) return fail(res, sig.error());
    auto taken = stack->mq->take(req.matches[2], body.at("nonce"), sig.value());
    if (!taken.ok()) return fail(res, taken.error());
    if (!taken.value().has_value()) {
      res.status = 204;
      return;
    }
    json j;
    j["id"] = taken.value()->id;
    j["payload"] = encoding::b64url_encode(taken.value()->payload);
    j["enqueued_at_ms"] = taken.value()->enqueued_at_ms;
    reply_json(res, j.dump());
  });

  server.Get(R"(/notifications/([^/]+)/subscribe/(.+))", [this](const httplib::Request& req,
                                                                httplib::Response& res) {
    auto* stack = stack_for(req.matches[1], res);
    if (!stack) return;
    std::optional<std::string> after;
    if (req.has_param("after")) after = req.get_param_value("after");
    int timeout_ms = 30000;
    if (req.has_param("timeout_ms")) {
      timeout_ms = std::clamp(std::atoi(req.get_param_value("timeout_ms").c_str()), 0, 30000);
    }
    auto links = stack->mq->wait_new_links(req.matches[2], after,
                                           std::chrono::milliseconds(timeout_ms));
    if (!links.ok()) return fail(res, links.error());
    json j;
    j["links"] = links.value();
    reply_json(res, j.dump());
  });

  // Unknown component or action.
  auto unknown = [](const httplib::Request& req, httplib::Response& res) {
    fail(res, Errc::not_found, "no such component or action: " + req.path);
  };
  server.Get(".*", unknown);
  server.Put(".*", unknown);
  server.Post(".*", unknown);
  server.Delete(".*", unknown);
}

ApiHub::ApiHub(HubConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
}

ApiHub::~ApiHub() { stop(); }

Result<void> ApiHub::start() {
  HubConfig& cfg = impl_->config;
  if (cfg.tls) {
    return make_error(Errc::config,
                      "TLS termination is delegated to the deployment; set tls=false", "tls");
  }
  if (cfg.domains.empty()) {
    return make_error(Errc::config, "config must bind at least one domain", "domains");
  }

  for (const auto& [name, binding] : cfg.domains) {
    DomainStack stack;
    if (binding.brick_root.empty()) {
      stack.bricks = std::make_shared<brickstore::MemoryBrickStore>();
    } else {
      stack.bricks = std::make_shared<brickstore::FileBrickStore>(binding.brick_root);
    }
    auto ledger = anchoring::make_ledger(binding.ledger);
    if (!ledger.ok()) return ledger.error();
    stack.anchors = std::make_shared<anchoring::AnchorService>(ledger.value());
    stack.mq = std::make_unique<messaging::MessageHub>(stack.anchors);
    stack.default_mode = binding.default_mode;
    impl_->stacks.emplace(name, std::move(stack));
  }

  if (!cfg.bdns_path.empty()) {
    impl_->bdns_registry = std::make_unique<bdns::BdnsRegistry>();
    if (auto r = impl_->bdns_registry->open(cfg.bdns_path); !r.ok()) return r.error();
  }

  impl_->install_routes();
  auto& server = impl_->server;
  server.set_payload_max_length(cfg.max_body_bytes);
  server.set_read_timeout(cfg.request_timeout_s, 0);
  server.set_write_timeout(cfg.request_timeout_s, 0);
  server.set_keep_alive_max_count(64);

  server.set_pre_routing_handler([](const httplib::Request&, httplib::Response&) {
    t_request_start = std::chrono::steady_clock::now();
    return httplib::Server::HandlerResponse::Unhandled;
  });
  if (cfg.log_requests) {
    server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
      auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                    std::chrono::steady_clock::now() - t_request_start)
                    .count();
      json line;
      line["method"] = req.method;
      line["path"] = req.path;
      line["status"] = res.status;
      line["latency_us"] = us;
      std::fprintf(stdout, "%s\n", line.dump().c_str());
      std::fflush(stdout);
    });
  }

  if (cfg.port == 0) {
    impl_->actual_port = server.bind_to_any_port(cfg.listen_address);
    if (impl_->actual_port <= 0) {
      return make_error(Errc::io, "cannot bind " + cfg.listen_address, "listen");
    }
  } else {
    if (!server.bind_to_port(cfg.listen_address, cfg.port)) {
      return make_error(Errc::io, "cannot bind " + cfg.listen_address + ":" +
                                      std::to_string(cfg.port) + " (port in use?)",
                        "port");
    }
    impl_->actual_port = cfg.port;
  }

  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  for (int i = 0; i < 2000 && !impl_->server.is_running(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  if (!impl_->server.is_running()) return make_error(Errc::io, "server failed to start");
  impl_->started = true;
  return {};
}

void ApiHub::stop() {
  if (!impl_) return;
  if (impl_->started) {
    impl_->server.stop();
    impl_->started = false;
  }
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

int ApiHub::port() const { return impl_->actual_port; }

const HubConfig& ApiHub::config() const { return impl_->config; }

std::shared_ptr<anchoring::AnchorService> ApiHub::anchor_service(const std::string& domain) const {
  auto it = impl_->stacks.find(domain);
  return it == impl_->stacks.end() ? nullptr : it->second.anchors;
}

}  // namespace dsukit::apihub
