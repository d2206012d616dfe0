#include "dsukit/bdns.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "dsukit/keyssi.hpp"

namespace dsukit::bdns {

namespace {

using nlohmann::json;

bool valid_endpoint(const std::string& url) {
  const std::string_view http = "http://";
  const std::string_view https = "https://";
  std::string_view v = url;
  if (v.starts_with(http)) v.remove_prefix(http.size());
  else if (v.starts_with(https)) v.remove_prefix(https.size());
  else return false;
  return !v.empty() && v[0] != '/';
}

Result<std::vector<std::string>> read_endpoints(const json& j, const char* key,
                                                const std::string& domain) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  if (!j.at(key).is_array()) {
    return make_error(Errc::config, "'" + std::string(key) + "' must be an array",
                      domain + "." + key);
  }
  for (const auto& e : j.at(key)) {
    if (!e.is_string() || !valid_endpoint(e.get<std::string>())) {
      return make_error(Errc::config, "endpoint must be an http(s) URL", domain + "." + key);
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

Result<anchoring::BackendSpec> read_backend(const json& j, const std::string& domain) {
  anchoring::BackendSpec spec;
  if (!j.is_object()) {
    return make_error(Errc::config, "'ledger_backend' must be an object",
                      domain + ".ledger_backend");
  }
  spec.kind = j.value("kind", "memory");
  spec.latency_ms = j.value("latency_ms", 0.0);
  spec.cap_tps = j.value("cap_tps", 1e9);
  spec.log_path = j.value("log_path", "");
  const std::string policy = j.value("policy", "light");
  if (policy == "heavy") spec.policy = anchoring::AnchorPolicy::Heavy;
  else if (policy == "light") spec.policy = anchoring::AnchorPolicy::Light;
  else return make_error(Errc::config, "policy must be light|heavy", domain + ".ledger_backend");
  if (spec.kind != "memory" && spec.kind != "file-log" && spec.kind != "simulated-chain") {
    return make_error(Errc::config, "unknown ledger kind '" + spec.kind + "'",
                      domain + ".ledger_backend");
  }
  return spec;
}

// nlohmann's map silently keeps the first duplicate; detect duplicates with a
// parse callback instead so bad configs fail loudly.
Result<void> check_duplicate_keys(std::string_view text) {
  std::vector<std::vector<std::string>> key_stack;
  std::string duplicate;
  json::parser_callback_t cb = [&](int depth, json::parse_event_t event, json& parsed) -> bool {
    (void)depth;
    if (event == json::parse_event_t::object_start) {
      key_stack.emplace_back();
    } else if (event == json::parse_event_t::object_end) {
      key_stack.pop_back();
    } else if (event == json::parse_event_t::key) {
      auto key = parsed.get<std::string>();
      auto& keys = key_stack.back();
      if (std::find(keys.begin(), keys.end(), key) != keys.end() && duplicate.empty()) {
        duplicate = key;
      }
      keys.push_back(std::move(key));
    }
    return true;
  };
  json parsed = json::parse(text, cb, false);
  if (parsed.is_discarded()) return make_error(Errc::config, "malformed JSON");
  if (!duplicate.empty()) {
    return make_error(Errc::config, "duplicate key '" + duplicate + "'", duplicate);
  }
  return {};
}

std::vector<std::string> ancestry(const std::string& name) {
  // Least specific first: for a.b.c returns [c, b.c, a.b.c].
  std::vector<std::string> chain{name};
  std::string cur = name;
  while (true) {
    auto dot = cur.find('.');
    if (dot == std::string::npos) break;
    cur = cur.substr(dot + 1);
    chain.push_back(cur);
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

}  // namespace

Result<BdnsTable> BdnsTable::from_json(std::string_view text) {
  if (auto dup = check_duplicate_keys(text); !dup.ok()) return dup.error();
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    return make_error(Errc::config, "BDNS table must be a JSON object");
  }

  BdnsTable table;
  table.raw_ = doc.dump(2);
  for (const auto& [domain, body] : doc.items()) {
    if (auto d = keyssi::validate_domain(domain); !d.ok()) {
      return make_error(Errc::config, "invalid domain name", domain);
    }
    if (!body.is_object()) {
      return make_error(Errc::config, "domain entry must be an object", domain);
    }
    DomainRecord rec;
    rec.name = domain;
    auto anchorings = read_endpoints(body, "anchoring_services", domain);
    if (!anchorings.ok()) return anchorings.error();
    rec.anchoring_services = std::move(anchorings).value();
    auto bricks = read_endpoints(body, "brick_storages", domain);
    if (!bricks.ok()) return bricks.error();
    rec.brick_storages = std::move(bricks).value();
    auto notified = read_endpoints(body, "notification_services", domain);
    if (!notified.ok()) return notified.error();
    rec.notification_services = std::move(notified).value();
    if (body.contains("ledger_backend")) {
      auto backend = read_backend(body.at("ledger_backend"), domain);
      if (!backend.ok()) return backend.error();
      rec.ledger_backend = std::move(backend).value();
    }
    table.records_.emplace(domain, std::move(rec));
  }
  return table;
}

Result<DomainRecord> BdnsTable::resolve(const std::string& name) const {
  if (auto d = keyssi::validate_domain(name); !d.ok()) return d.error();

  DomainRecord out;
  out.name = name;
  bool matched = false;
  for (const auto& candidate : ancestry(name)) {
    auto it = records_.find(candidate);
    if (it == records_.end()) continue;
    matched = true;
    const DomainRecord& rec = it->second;
    // Field-wise override: a more specific entry replaces exactly the fields
    // it sets.
    if (!rec.anchoring_services.empty()) out.anchoring_services = rec.anchoring_services;
    if (!rec.brick_storages.empty()) out.brick_storages = rec.brick_storages;
    if (!rec.notification_services.empty()) out.notification_services = rec.notification_services;
    if (rec.ledger_backend) out.ledger_backend = rec.ledger_backend;
  }
  if (!matched) return make_error(Errc::not_found, "domain not configured", "domain");
  if (out.anchoring_services.empty() || out.brick_storages.empty()) {
    return make_error(Errc::incomplete_domain,
                      "resolved record lacks anchoring or brick endpoints", name);
  }
  return out;
}

std::vector<std::string> BdnsTable::domains() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& [k, v] : records_) out.push_back(k);
  return out;
}

Result<void> BdnsRegistry::open(const std::filesystem::path& config_path) {
  path_ = config_path;
  return reload();
}

std::shared_ptr<const BdnsTable> BdnsRegistry::snapshot() const {
  std::lock_guard lock(mu_);
  return table_;
}

Result<void> BdnsRegistry::reload() {
  std::ifstream in(path_);
  if (!in) return make_error(Errc::config, "cannot open BDNS config: " + path_.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto table = BdnsTable::from_json(text);
  if (!table.ok()) return table.error();
  std::error_code ec;
  auto mtime = std::filesystem::last_write_time(path_, ec);
  std::lock_guard lock(mu_);
  table_ = std::make_shared<const BdnsTable>(std::move(table).value());
  if (!ec) loaded_mtime_ = mtime;
  return {};
}

Result<bool> BdnsRegistry::reload_if_changed() {
  std::error_code ec;
  auto mtime = std::filesystem::last_write_time(path_, ec);
  if (ec) return make_error(Errc::io, "cannot stat BDNS config");
  {
    std::lock_guard lock(mu_);
    if (mtime == loaded_mtime_) return false;
  }
  if (auto r = reload(); !r.ok()) return r.error();
  return true;
}

}  // namespace dsukit::bdns
