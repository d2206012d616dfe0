#pragma once

#include <memory>
#include <string>

#include "dsukit/anchoring.hpp"
#include "dsukit/brickstore.hpp"

// HTTP clients for the hub's bricking and anchoring surfaces. A KeyResolver
// built over these talks to a remote hub exactly like over local backends.
namespace dsukit::remote {

class RemoteBrickStore final : public brickstore::BrickStore {
 public:
  explicit RemoteBrickStore(std::string base_url);
  ~RemoteBrickStore() override;

  Result<std::string> put(const std::string& domain,
                          std::span<const std::uint8_t> ciphertext) override;
  Result<Bytes> get(const std::string& domain, const std::string& hash_hex) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class RemoteAnchorClient final : public anchoring::AnchorClient {
 public:
  explicit RemoteAnchorClient(std::string base_url);
  ~RemoteAnchorClient() override;

  Result<void> create_anchor(const std::string& anchor_id) override;
  Result<anchoring::AppendReceipt> append_version(const std::string& anchor_id,
                                                  const std::string& new_link,
                                                  const keyssi::Signature& sig,
                                                  const std::string& expected_last,
                                                  anchoring::ExecMode mode) override;
  Result<std::vector<anchoring::VersionEntry>> get_versions(const std::string& anchor_id,
                                                            bool include_pending = false) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dsukit::remote
