#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "byod/audit_log.hpp"
#include "byod/common.hpp"
#include "byod/net_model.hpp"

namespace byod {

// ---------------------------------------------------------------------------
// Posture

enum class PostureStatus { Unassessed, Blocked, Cleared };
enum class Deficiency { OutdatedAntivirus, DiscontinuedOS, BannedDriver };

std::string_view to_string(PostureStatus status);
std::string_view to_string(Deficiency deficiency);

struct OsId {
  std::string name;
  std::string version;  // empty matches every version

  auto operator<=>(const OsId&) const = default;
};

struct PostureRules {
  int max_av_definition_age_days = 30;
  std::set<OsId> discontinued_os;
  std::set<DriverInfo> banned_drivers;

  void validate() const;
};

void to_json(nlohmann::json& j, const PostureRules& rules);
void from_json(const nlohmann::json& j, PostureRules& rules);

// Windows XP/Vista and Android 2.x retired; 30-day AV definitions.
PostureRules default_posture_rules();

struct PostureResult {
  PostureStatus status = PostureStatus::Unassessed;
  std::vector<Deficiency> deficiencies;

  bool operator==(const PostureResult&) const = default;
};

// Pure: the verdict depends only on the device, the rules and `now`.
PostureResult evaluate_posture(const ClientDevice& device, const PostureRules& rules, Timestamp now);

// ---------------------------------------------------------------------------
// Device records

struct IpSighting {
  std::string address;
  Timestamp first_seen = 0;
  Timestamp last_seen = 0;

  bool operator==(const IpSighting&) const = default;
};

struct DeviceRecord {
  ClientDevice device;
  std::string owner;
  PostureStatus status = PostureStatus::Unassessed;
  std::vector<Deficiency> deficiencies;  // set while Blocked
  Timestamp registered_at = 0;
  std::vector<IpSighting> ip_history;    // ordered by first_seen

  std::string device_id() const { return device.device_id(); }
};

enum class GateDecision { NetworkOnly, FullPipeline };

std::string_view to_string(GateDecision decision);

// Until the NAC clears a device it may only reach DHCP, DNS and the portal.
GateDecision nac_gate(const DeviceRecord& record);

// ---------------------------------------------------------------------------
// Certificates

struct SecretKey {
  std::vector<std::uint8_t> bytes;

  static SecretKey from_string(std::string_view text);
};

struct Certificate {
  std::string device_fingerprint;  // hex SHA-256 over the device identity
  Timestamp issued_at = 0;
  Timestamp expires_at = 0;
  std::string tag;                 // base64 HMAC-SHA256 over the fields above

  bool operator==(const Certificate&) const = default;
};

enum class CertVerdict { Valid, Expired, WrongDevice, Forged, Revoked };

std::string_view to_string(CertVerdict verdict);

std::string device_fingerprint(const MacAddress& mac, std::string_view imei);

// Canonical JSON: sorted keys, no whitespace, tag included.
std::string serialize_certificate(const Certificate& cert);
// Strict: exactly the four known fields with the right types.
std::optional<Certificate> parse_certificate(std::string_view text);

class RevocationList {
 public:
  void revoke(const std::string& fingerprint) { revoked_.insert(fingerprint); }
  bool contains(const std::string& fingerprint) const { return revoked_.contains(fingerprint); }
  std::size_t size() const { return revoked_.size(); }

  nlohmann::json to_json() const;
  static RevocationList from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static RevocationList load(const std::filesystem::path& path);

 private:
  std::set<std::string> revoked_;
};

// Throws NotCleared unless the record's latest assessment cleared it.
Certificate issue_certificate(const DeviceRecord& record, const SecretKey& key, Seconds validity,
                              Timestamp now);

// Checks run in a fixed order: tag, revocation, expiry, device binding.
CertVerdict verify_certificate(const Certificate& cert, const MacAddress& presenting_mac,
                               std::string_view presenting_imei, const SecretKey& key,
                               const RevocationList& revoked, Timestamp now);

// Serialized form; anything that fails to parse counts as Forged.
CertVerdict verify_serialized_certificate(std::string_view text, const MacAddress& presenting_mac,
                                          std::string_view presenting_imei, const SecretKey& key,
                                          const RevocationList& revoked, Timestamp now);

// ---------------------------------------------------------------------------
// Registry

// MDM registry with NAC posture state and certificate revocation. Mutations
// are not synchronised; the owner of the registry serialises them. Every
// state change emits exactly one audit record when a log is attached.
class DeviceRegistry {
 public:
  explicit DeviceRegistry(std::size_t max_devices_per_owner = 3, AuditLog* audit = nullptr);

  void enroll_owner(const std::string& owner);
  bool has_owner(const std::string& owner) const { return owners_.contains(owner); }

  // Re-registering a device to its current owner returns the existing record.
  const DeviceRecord& register_device(const std::string& owner, const ClientDevice& device,
                                      Timestamp now);
  void remove_device(const std::string& owner, const std::string& device_id, Timestamp now);
  // Replaces the stored attributes (same MAC) after remediation. The device
  // drops back to Unassessed until the next posture check.
  const DeviceRecord& update_device(const std::string& owner, const ClientDevice& device, Timestamp now);

  PostureResult assess_posture(const std::string& device_id, const PostureRules& rules,
                               Timestamp now);
  void record_ip(const std::string& device_id, const std::string& address, Timestamp now);

  Certificate issue_certificate(const std::string& device_id, const SecretKey& key,
                                Seconds validity, Timestamp now);
  // Verifies against this registry's revocation list and logs one CertVerify
  // record whose detail is "<fingerprint>" or "<fingerprint>:<verdict>".
  CertVerdict verify_presented(const Certificate& cert, const ClientDevice& presenter,
                               const SecretKey& key, Timestamp now, const std::string& where = {},
                               const std::string& ip = {});

  const DeviceRecord* find(const std::string& device_id) const;
  std::size_t device_count(const std::string& owner) const;
  std::size_t size() const { return records_.size(); }
  std::size_t max_devices_per_owner() const { return max_devices_; }
  const RevocationList& revocations() const { return revoked_; }

  void attach_audit(AuditLog* audit) { audit_ = audit; }

  nlohmann::json snapshot() const;
  static DeviceRegistry from_snapshot(const nlohmann::json& j, AuditLog* audit = nullptr);

 private:
  DeviceRecord& require(const std::string& device_id);
  void emit(const DeviceRecord& record, AuditEvent event, Timestamp now, std::string detail = {},
            std::optional<AccessLevel> level = std::nullopt);

  std::size_t max_devices_;
  AuditLog* audit_;
  std::set<std::string> owners_;
  std::map<std::string, DeviceRecord> records_;
  RevocationList revoked_;
};

}  // namespace byod
