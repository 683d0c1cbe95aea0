#pragma once

// Append-only event log keyed by the five facets of authentication:
//   who    - the user, once known
//   what   - device id, MAC and IP
//   where  - AP id or switch port
//   when   - simulated timestamp
//   what can they do - access level and traffic counters
//
// One JSON object per line on disk. Sequence numbers are assigned under the
// log's lock, so concurrent producers still see a total order, and a record
// is flushed to storage before append() returns.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "byod/common.hpp"

namespace byod {

enum class AuditEvent {
  Connect,
  Disconnect,
  DhcpLease,
  LoginOk,
  LoginFail,
  SessionExpire,
  Logout,
  PostureBlock,
  PostureClear,
  CertReject,
  CertIssue,
  CertVerify,
  DeviceRegister,
  DeviceRemove,
  PolicyDeny,
  Redirect,
};

enum class AccessLevel { NetworkOnly, FullPipeline };

std::string_view to_string(AuditEvent event);
AuditEvent parse_audit_event(std::string_view text);
std::string_view to_string(AccessLevel level);

struct DeviceRef {
  std::string device_id;
  std::string mac;
  std::string ip;

  bool operator==(const DeviceRef&) const = default;
};

struct Traffic {
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;

  bool operator==(const Traffic&) const = default;
};

struct AuditEntry {
  Timestamp when = 0;
  std::optional<std::string> who;
  DeviceRef what;
  std::string where;
  AuditEvent event = AuditEvent::Connect;
  std::optional<AccessLevel> access_level;
  std::optional<Traffic> traffic;
  // Event-specific context: certificate fingerprint, redirect target, reason.
  std::string detail;

  bool operator==(const AuditEntry&) const = default;
};

struct AuditRecord : AuditEntry {
  std::uint64_t seq = 0;

  bool operator==(const AuditRecord&) const = default;
};

nlohmann::json to_json(const AuditRecord& record);
std::string to_json_line(const AuditRecord& record);
AuditRecord parse_audit_line(std::string_view line);
std::vector<AuditRecord> read_audit_file(const std::filesystem::path& path);

class AuditLog {
 public:
  // In-memory only.
  AuditLog() = default;
  // Appends to `path`, continuing the sequence of any records already there.
  explicit AuditLog(const std::filesystem::path& path);
  ~AuditLog();

  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;

  // Throws StorageFailure when the line cannot be written; nothing is
  // recorded in that case.
  AuditRecord append(AuditEntry entry);

  std::vector<AuditRecord> records() const;
  std::size_t size() const;
  std::string to_jsonl() const;

 private:
  mutable std::mutex mutex_;
  std::FILE* file_ = nullptr;
  std::uint64_t last_seq_ = 0;
  std::vector<AuditRecord> records_;
};

struct AuditFilter {
  std::optional<std::string> who;
  std::optional<std::string> device;  // device id, MAC or IP
  std::optional<std::string> where;
  std::optional<Timestamp> from;       // inclusive
  std::optional<Timestamp> to;         // inclusive
  std::set<AuditEvent> events;         // empty = any

  bool matches(const AuditRecord& record) const;
};

std::vector<AuditRecord> query(std::span<const AuditRecord> records, const AuditFilter& filter);
std::vector<AuditRecord> query(const AuditLog& log, const AuditFilter& filter);

enum class SuspicionKind { CertCloneAttempt, LoginFailBurst, UnregisteredMac };

std::string_view to_string(SuspicionKind kind);

struct SuspicionFlag {
  SuspicionKind kind = SuspicionKind::LoginFailBurst;
  std::string subject;
  std::vector<std::uint64_t> evidence;

  bool operator==(const SuspicionFlag&) const = default;
};

nlohmann::json to_json(const SuspicionFlag& flag);

struct SuspicionThresholds {
  Seconds window = 60;
  std::size_t login_failures = 5;
  std::size_t clone_macs = 2;
};

// CertCloneAttempt: CertVerify/CertReject events for one fingerprint from
// at least `clone_macs` distinct MACs inside one window.
// LoginFailBurst: at least `login_failures` LoginFail events for one user
// inside one window.
// UnregisteredMac: a MAC that leased an address on a network where devices
// register, yet never registered itself.
std::vector<SuspicionFlag> detect_suspicion(std::span<const AuditRecord> records,
                                            const SuspicionThresholds& thresholds = {});

}  // namespace byod
