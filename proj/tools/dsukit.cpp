// dsukit: operator and developer CLI for the toolkit.
//
//   keyssi gen|derive|inspect     identifier lifecycle
//   wallet import|show            local key management
//   dsu create|write|read|ls|mount|commit|history|load
//                                 container lifecycle against a hub
//   hub serve                     run an APIHub instance
//   bench anchoring               latency/throughput benchmark
//
// Exit codes: 0 ok, 1 domain error, 2 usage error.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dsukit/anchor_bench.hpp"
#include "dsukit/apihub.hpp"
#include "dsukit/dsu.hpp"
#include "dsukit/remote.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dsukit;

namespace {

volatile std::sig_atomic_t g_stop_requested = 0;

void handle_stop(int) { g_stop_requested = 1; }

int fail_domain(const Error& e) {
  std::cerr << "error: " << e.describe() << "\n";
  return 1;
}

fs::path dsukit_home() {
  if (const char* home = std::getenv("DSUKIT_HOME")) return fs::path(home);
  if (const char* home = std::getenv("HOME")) return fs::path(home) / ".dsukit";
  return fs::path(".dsukit");
}

struct Wallet {
  fs::path dir;

  static Wallet at(const std::string& name) { return Wallet{dsukit_home() / name}; }

  fs::path key_path() const { return dir / "owner.ssi"; }
  fs::path staged_path() const { return dir / "cache" / "staged.json"; }

  Result<keyssi::KeySsi> load_key() const {
    std::ifstream in(key_path());
    if (!in) {
      return make_error(Errc::not_found,
                        "wallet has no key; run 'dsukit dsu create' or 'dsukit wallet import'");
    }
    std::string text;
    std::getline(in, text);
    return keyssi::parse(text);
  }

  Result<void> save_key(const keyssi::KeySsi& ssi) const {
    std::error_code ec;
    fs::create_directories(dir / "cache", ec);
    if (ec) return make_error(Errc::io, "cannot create wallet directory " + dir.string());
    std::ofstream out(key_path(), std::ios::trunc);
    if (!out) return make_error(Errc::io, "cannot write " + key_path().string());
    out << ssi.str() << "\n";
    std::cerr << "warning: key stored unencrypted in " << key_path().string() << "\n";
    return {};
  }

  json load_staged() const {
    std::ifstream in(staged_path());
    if (!in) return json{{"writes", json::object()}, {"mounts", json::object()}};
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) return json{{"writes", json::object()}, {"mounts", json::object()}};
    return j;
  }

  Result<void> save_staged(const json& j) const {
    std::error_code ec;
    fs::create_directories(dir / "cache", ec);
    std::ofstream out(staged_path(), std::ios::trunc);
    if (!out) return make_error(Errc::io, "cannot write staged changes");
    out << j.dump(2) << "\n";
    return {};
  }

  void clear_staged() const {
    std::error_code ec;
    fs::remove(staged_path(), ec);
  }
};

struct RemoteStack {
  std::shared_ptr<remote::RemoteBrickStore> bricks;
  std::shared_ptr<remote::RemoteAnchorClient> anchors;
  std::unique_ptr<dsu::KeyResolver> resolver;

  explicit RemoteStack(const std::string& hub_url)
      : bricks(std::make_shared<remote::RemoteBrickStore>(hub_url)),
        anchors(std::make_shared<remote::RemoteAnchorClient>(hub_url)),
        resolver(std::make_unique<dsu::KeyResolver>(bricks, anchors)) {}
};

Result<Bytes> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return make_error(Errc::io, "cannot open " + path);
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

json inspect_json(const keyssi::KeySsi& ssi) {
  json j;
  j["schema"] = "ssi";
  j["type"] = keyssi::type_token(ssi.type);
  j["domain"] = ssi.domain;
  j["type_specific"] = ssi.type_specific;
  j["control"] = ssi.control;
  j["version"] = ssi.version;
  if (ssi.hint) j["hint"] = *ssi.hint;
  j["rank"] = keyssi::rank_name(ssi.rank());
  j["canonical"] = ssi.str();
  return j;
}

// Applies the wallet's staged writes and mounts onto a freshly loaded handle.
Result<dsu::DsuHandle> open_with_staged(RemoteStack& stack, const Wallet& wallet,
                                        const keyssi::KeySsi& key) {
  auto handle = stack.resolver->load_dsu(key);
  if (!handle.ok()) return handle;
  json staged = wallet.load_staged();
  for (const auto& [path, b64] : staged["writes"].items()) {
    auto bytes = encoding::b64url_decode(b64.get<std::string>());
    if (!bytes.ok()) return bytes.error();
    if (auto w = handle.value().write_file(path, std::move(bytes).value()); !w.ok()) {
      return w.error();
    }
  }
  for (const auto& [point, target] : staged["mounts"].items()) {
    auto ssi = keyssi::parse(target.get<std::string>());
    if (!ssi.ok()) return ssi.error();
    if (auto m = handle.value().mount(point, ssi.value()); !m.ok()) return m.error();
  }
  return handle;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-sovereign data sharing toolkit"};
  app.require_subcommand(1);

  std::string hub_url = "http://127.0.0.1:8080";
  std::string wallet_name = "default";
  std::string domain = "default";

  // keyssi ------------------------------------------------------------------
  auto* keyssi_cmd = app.add_subcommand("keyssi", "identifier operations");
  keyssi_cmd->require_subcommand(1);

  std::string gen_family = "seed";
  std::string gen_wallet;
  auto* gen = keyssi_cmd->add_subcommand("gen", "generate a fresh owner identifier");
  gen->add_option("--domain", domain, "BDNS domain")->envname("DSUKIT_DOMAIN")->required();
  gen->add_option("--family", gen_family, "seed|secret")->check(CLI::IsMember({"seed", "secret"}));
  gen->add_option("--wallet", gen_wallet, "also store the key in this wallet")
      ->envname("DSUKIT_WALLET");

  std::string derive_input;
  auto* derive = keyssi_cmd->add_subcommand("derive", "derive the next lower rank");
  derive->add_option("ssi", derive_input, "identifier")->required();

  std::string inspect_input;
  auto* inspect = keyssi_cmd->add_subcommand("inspect", "print parsed fields as JSON");
  inspect->add_option("ssi", inspect_input, "identifier")->required();

  // wallet ------------------------------------------------------------------
  auto* wallet_cmd = app.add_subcommand("wallet", "local key management");
  wallet_cmd->require_subcommand(1);
  std::string import_input;
  auto* wimport = wallet_cmd->add_subcommand("import", "store an identifier in a wallet");
  wimport->add_option("ssi", import_input)->required();
  wimport->add_option("--wallet", wallet_name)->envname("DSUKIT_WALLET");
  auto* wshow = wallet_cmd->add_subcommand("show", "print the wallet identifier");
  wshow->add_option("--wallet", wallet_name)->envname("DSUKIT_WALLET");

  // dsu ---------------------------------------------------------------------
  auto* dsu_cmd = app.add_subcommand("dsu", "container operations against a hub");
  dsu_cmd->require_subcommand(1);
  dsu_cmd->add_option("--hub", hub_url, "hub base URL")->envname("DSUKIT_HUB");
  dsu_cmd->add_option("--wallet", wallet_name, "wallet name")->envname("DSUKIT_WALLET");

  std::string create_family = "seed";
  auto* dcreate = dsu_cmd->add_subcommand("create", "create a DSU with a fresh owner key");
  dcreate->add_option("--domain", domain)->envname("DSUKIT_DOMAIN");
  dcreate->add_option("--family", create_family)->check(CLI::IsMember({"seed", "secret"}));

  std::string write_path, write_src;
  auto* dwrite = dsu_cmd->add_subcommand("write", "stage a file write");
  dwrite->add_option("path", write_path)->required();
  dwrite->add_option("file", write_src, "local file with the content")->required();

  std::string read_path;
  auto* dread = dsu_cmd->add_subcommand("read", "print file content");
  dread->add_option("path", read_path)->required();

  std::string ls_prefix = "/";
  auto* dls = dsu_cmd->add_subcommand("ls", "list paths");
  dls->add_option("prefix", ls_prefix);

  std::string mount_point, mount_target;
  auto* dmount = dsu_cmd->add_subcommand("mount", "stage a mount");
  dmount->add_option("point", mount_point)->required();
  dmount->add_option("ssi", mount_target)->required();

  std::string commit_mode = "validated";
  auto* dcommit = dsu_cmd->add_subcommand("commit", "anchor staged changes as a new version");
  dcommit->add_option("--mode", commit_mode)->check(CLI::IsMember({"optimistic", "validated"}));

  auto* dhistory = dsu_cmd->add_subcommand("history", "print the anchored version list");

  std::string load_version, load_read;
  auto* dload = dsu_cmd->add_subcommand("load", "inspect a specific anchored version");
  dload->add_option("--version", load_version, "hashlink identifier")->required();
  dload->add_option("--read", load_read, "print this path instead of the listing");

  // hub ---------------------------------------------------------------------
  auto* hub_cmd = app.add_subcommand("hub", "APIHub service");
  hub_cmd->require_subcommand(1);
  std::string hub_config;
  auto* hserve = hub_cmd->add_subcommand("serve", "serve the configured domains");
  hserve->add_option("--config", hub_config, "hub config JSON")->required();

  // bench -------------------------------------------------------------------
  auto* bench_cmd = app.add_subcommand("bench", "benchmarks");
  bench_cmd->require_subcommand(1);
  bench::BenchParams bparams;
  std::string bench_mode = "validated";
  bool bench_json = false;
  bool bench_no_drain = false;
  auto* banchor = bench_cmd->add_subcommand("anchoring", "anchored-commit latency/throughput");
  banchor->add_option("--calls", bparams.calls, "appends per writer")->envname("DSUKIT_CALLS");
  banchor->add_option("--latency", bparams.latency_ms, "simulated chain latency (ms)")
      ->envname("DSUKIT_LATENCY");
  banchor->add_option("--cap", bparams.cap_tps, "simulated chain cap (tx/s)")
      ->envname("DSUKIT_CAP");
  banchor->add_option("--mode", bench_mode)->check(CLI::IsMember({"optimistic", "validated"}))
      ->envname("DSUKIT_MODE");
  banchor->add_option("--writers", bparams.writers)->envname("DSUKIT_WRITERS");
  banchor->add_option("--seed", bparams.seed)->envname("DSUKIT_SEED");
  banchor->add_option("--offered-tps", bparams.offered_tps, "pace offered load (0 = unpaced)");
  banchor->add_flag("--no-drain", bench_no_drain, "report without waiting for confirmations");
  banchor->add_flag("--json", bench_json, "machine-readable report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    // keyssi
    if (gen->parsed()) {
      auto ssi = gen_family == "secret" ? keyssi::generate_secret_ssi(domain)
                                        : keyssi::generate_seed_ssi(domain);
      if (!ssi.ok()) return fail_domain(ssi.error());
      if (!gen_wallet.empty()) {
        if (auto s = Wallet::at(gen_wallet).save_key(ssi.value()); !s.ok()) {
          return fail_domain(s.error());
        }
      }
      std::cout << ssi.value().str() << "\n";
      return 0;
    }
    if (derive->parsed()) {
      auto ssi = keyssi::parse(derive_input);
      if (!ssi.ok()) return fail_domain(ssi.error());
      auto lower = keyssi::derive(ssi.value());
      if (!lower.ok()) return fail_domain(lower.error());
      std::cout << lower.value().str() << "\n";
      return 0;
    }
    if (inspect->parsed()) {
      auto ssi = keyssi::parse(inspect_input);
      if (!ssi.ok()) return fail_domain(ssi.error());
      std::cout << inspect_json(ssi.value()).dump(2) << "\n";
      return 0;
    }

    // wallet
    if (wimport->parsed()) {
      auto ssi = keyssi::parse(import_input);
      if (!ssi.ok()) return fail_domain(ssi.error());
      if (auto s = Wallet::at(wallet_name).save_key(ssi.value()); !s.ok()) {
        return fail_domain(s.error());
      }
      std::cout << "imported into wallet '" << wallet_name << "'\n";
      return 0;
    }
    if (wshow->parsed()) {
      auto key = Wallet::at(wallet_name).load_key();
      if (!key.ok()) return fail_domain(key.error());
      std::cout << key.value().str() << "\n";
      return 0;
    }

    // dsu
    if (dsu_cmd->parsed()) {
      Wallet wallet = Wallet::at(wallet_name);
      RemoteStack stack(hub_url);

      if (dcreate->parsed()) {
        auto owner = create_family == "secret" ? keyssi::generate_secret_ssi(domain)
                                               : keyssi::generate_seed_ssi(domain);
        if (!owner.ok()) return fail_domain(owner.error());
        auto handle = stack.resolver->create_dsu(owner.value());
        if (!handle.ok()) return fail_domain(handle.error());
        if (auto s = wallet.save_key(owner.value()); !s.ok()) return fail_domain(s.error());
        std::cout << "owner:  " << owner.value().str() << "\n"
                  << "anchor: " << handle.value().anchor_id() << "\n";
        return 0;
      }

      auto key = wallet.load_key();
      if (!key.ok()) return fail_domain(key.error());

      if (dwrite->parsed()) {
        auto bytes = read_file_bytes(write_src);
        if (!bytes.ok()) return fail_domain(bytes.error());
        auto norm = dsu::normalize_path(write_path);
        if (!norm.ok()) return fail_domain(norm.error());
        json staged = wallet.load_staged();
        staged["writes"][norm.value()] = encoding::b64url_encode(bytes.value());
        if (auto s = wallet.save_staged(staged); !s.ok()) return fail_domain(s.error());
        std::cout << "staged " << norm.value() << " (" << bytes.value().size() << " bytes)\n";
        return 0;
      }
      if (dmount->parsed()) {
        auto target = keyssi::parse(mount_target);
        if (!target.ok()) return fail_domain(target.error());
        auto norm = dsu::normalize_path(mount_point);
        if (!norm.ok()) return fail_domain(norm.error());
        json staged = wallet.load_staged();
        staged["mounts"][norm.value()] = target.value().str();
        if (auto s = wallet.save_staged(staged); !s.ok()) return fail_domain(s.error());
        std::cout << "staged mount " << norm.value() << " -> " << target.value().str() << "\n";
        return 0;
      }
      if (dread->parsed()) {
        auto handle = open_with_staged(stack, wallet, key.value());
        if (!handle.ok()) return fail_domain(handle.error());
        auto bytes = handle.value().read_file(read_path);
        if (!bytes.ok()) return fail_domain(bytes.error());
        std::cout.write(reinterpret_cast<const char*>(bytes.value().data()),
                        static_cast<std::streamsize>(bytes.value().size()));
        return 0;
      }
      if (dls->parsed()) {
        auto handle = open_with_staged(stack, wallet, key.value());
        if (!handle.ok()) return fail_domain(handle.error());
        auto paths = handle.value().list(ls_prefix);
        if (!paths.ok()) return fail_domain(paths.error());
        for (const auto& p : paths.value()) std::cout << p << "\n";
        return 0;
      }
      if (dcommit->parsed()) {
        auto handle = open_with_staged(stack, wallet, key.value());
        if (!handle.ok()) return fail_domain(handle.error());
        auto mode = anchoring::exec_mode_from_token(commit_mode);
        auto link = handle.value().commit(*mode);
        if (!link.ok()) return fail_domain(link.error());
        wallet.clear_staged();
        std::cout << link.value() << "\n";
        return 0;
      }
      if (dhistory->parsed()) {
        auto versions = stack.resolver->history(key.value());
        if (!versions.ok()) return fail_domain(versions.error());
        for (const auto& v : versions.value()) {
          std::cout << anchoring::entry_status_token(v.status) << "  " << v.link << "\n";
        }
        return 0;
      }
      if (dload->parsed()) {
        auto handle = stack.resolver->load_dsu(key.value(), load_version);
        if (!handle.ok()) return fail_domain(handle.error());
        if (!load_read.empty()) {
          auto bytes = handle.value().read_file(load_read);
          if (!bytes.ok()) return fail_domain(bytes.error());
          std::cout.write(reinterpret_cast<const char*>(bytes.value().data()),
                          static_cast<std::streamsize>(bytes.value().size()));
          return 0;
        }
        auto paths = handle.value().list("/");
        if (!paths.ok()) return fail_domain(paths.error());
        json j;
        j["version"] = load_version;
        j["files"] = json::array();
        for (const auto& p : paths.value()) {
          json f;
          f["path"] = p;
          if (auto size = handle.value().file_size(p); size.ok()) f["size"] = size.value();
          j["files"].push_back(std::move(f));
        }
        std::cout << j.dump(2) << "\n";
        return 0;
      }
    }

    // hub
    if (hserve->parsed()) {
      auto cfg = apihub::HubConfig::from_file(hub_config);
      if (!cfg.ok()) return fail_domain(cfg.error());
      apihub::ApiHub hub(std::move(cfg).value());
      if (auto s = hub.start(); !s.ok()) return fail_domain(s.error());
      std::cerr << "listening on " << hub.config().listen_address << ":" << hub.port() << " ("
                << hub.config().instance_label << ")\n";
      std::signal(SIGINT, handle_stop);
      std::signal(SIGTERM, handle_stop);
      while (!g_stop_requested) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
      hub.stop();
      return 0;
    }

    // bench
    if (banchor->parsed()) {
      bparams.mode = *anchoring::exec_mode_from_token(bench_mode);
      bparams.drain = !bench_no_drain;
      auto report = bench::run_anchoring_bench(bparams);
      if (!report.ok()) return fail_domain(report.error());
      if (bench_json) {
        std::cout << report.value().to_json() << "\n";
      } else {
        std::cout << "anchoring bench (" << bench_mode << ", latency " << bparams.latency_ms
                  << " ms, cap " << bparams.cap_tps << " tx/s, " << bparams.writers
                  << " writer(s) x " << bparams.calls << " call(s))\n"
                  << report.value().to_table();
      }
      return 0;
    }
  } catch (const ErrorException& e) {
    return fail_domain(e.error());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
