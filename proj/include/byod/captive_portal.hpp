#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "byod/access_control.hpp"
#include "byod/address.hpp"
#include "byod/audit_log.hpp"
#include "byod/policy_engine.hpp"

namespace byod {

enum class RedirectMode { DnsHijack, HttpRedirect, IcmpRedirect };

std::string_view to_string(RedirectMode mode);
RedirectMode parse_redirect_mode(std::string_view text);

struct WhitelistEntry {
  std::optional<Ipv4Address> ip;
  std::string domain;

  auto operator<=>(const WhitelistEntry&) const = default;
};

struct GatewayConfig {
  Ipv4Address portal_ip = Ipv4Address::parse("10.5.0.7");
  std::uint16_t portal_port = 3905;
  std::string portal_domain = "portal.knust.edu.gh";
  RedirectMode redirect_mode = RedirectMode::HttpRedirect;
  std::vector<WhitelistEntry> whitelist;  // in addition to the portal itself
};

enum class SessionState { Active, Expired, LoggedOut };

std::string_view to_string(SessionState state);

struct PortalSession {
  std::uint64_t id = 0;
  std::string user;
  Ipv4Address device_ip;
  MacAddress device_mac;
  Timestamp started_at = 0;
  Timestamp expires_at = 0;
  SessionState state = SessionState::Active;

  bool operator==(const PortalSession&) const = default;
};

nlohmann::json to_json(const PortalSession& session);

struct Credentials {
  std::string student_id;
  std::string password;
  std::optional<std::string> reference;
};

enum class DirectoryCheck { Ok, BadCredentials, Unavailable };

// Student directory consulted by the portal. Availability is a fault
// injection switch for modelling an unreachable directory server.
class Directory {
 public:
  Directory() = default;
  Directory(const Directory& other) : entries_(other.entries_), available_(other.available()) {}
  Directory& operator=(const Directory& other) {
    entries_ = other.entries_;
    available_.store(other.available());
    return *this;
  }

  void add_student(const std::string& student_id, const std::string& password,
                   const std::string& reference = {});
  bool contains(const std::string& student_id) const { return entries_.contains(student_id); }
  std::size_t size() const { return entries_.size(); }

  void set_available(bool up) { available_.store(up); }
  bool available() const { return available_.load(); }

  // The reference number is optional; when supplied it must match.
  DirectoryCheck check(const Credentials& credentials) const;

  // [{"student_id", "password" | "password_sha256", "reference"?}]
  static Directory from_json(const nlohmann::json& j);

 private:
  struct Entry {
    std::string password_digest;
    std::string reference;
  };

  std::map<std::string, Entry> entries_;
  std::atomic<bool> available_{true};
};

std::string password_digest(const std::string& student_id, const std::string& password);

struct InterceptResult {
  enum class Kind { PassThrough, DnsAnswer, HttpRedirect302, Drop };

  Kind kind = Kind::PassThrough;
  std::optional<Ipv4Address> dns_answer;
  std::string location;
  // PassThrough obtained by forging the source address (ICMP mode only).
  bool spoof_bypass = false;

  static InterceptResult pass() { return {}; }
  static InterceptResult drop() { return {Kind::Drop, std::nullopt, {}, false}; }

  bool operator==(const InterceptResult&) const = default;
};

std::string_view to_string(InterceptResult::Kind kind);

struct DeviceBinding {
  Ipv4Address ip;
  MacAddress mac;
  std::string where;  // AP id or switch port
};

enum class LoginOutcome { Success, AuthFailed, DirectoryUnavailable, CertificateRejected };

std::string_view to_string(LoginOutcome outcome);

struct LoginResult {
  LoginOutcome outcome = LoginOutcome::AuthFailed;
  std::optional<PortalSession> session;
};

// Gateway interception plus the portal session state machine. Mutations
// (login, expiry, disconnect) take an exclusive lock and are totally ordered;
// intercept reads under a shared lock. Every session transition emits one
// audit record when a log is attached.
class Gateway {
 public:
  explicit Gateway(GatewayConfig config = {}, AuditLog* audit = nullptr);

  InterceptResult intercept(const AccessRequest& request) const;

  // With nac_enabled, anything but a Valid certificate verdict is rejected
  // before the directory is consulted.
  LoginResult login(const Directory& directory, const Credentials& credentials,
                    const DeviceBinding& device, std::optional<CertVerdict> cert_check,
                    const PolicyConfig& policy, Timestamp now);

  std::vector<PortalSession> expire_sessions(Timestamp now);
  std::optional<PortalSession> on_disconnect(Ipv4Address device_ip, Timestamp now);

  bool is_authorized(Ipv4Address ip) const;
  std::set<Ipv4Address> authorized_ips() const;
  std::set<Ipv4Address> active_session_ips() const;
  std::optional<PortalSession> active_session(Ipv4Address ip) const;
  std::vector<PortalSession> sessions() const;
  nlohmann::json session_table() const;

  bool is_whitelisted(const AccessRequest& request) const;
  std::vector<WhitelistEntry> whitelist() const;
  void add_whitelist(WhitelistEntry entry);

  std::string portal_url() const;
  const GatewayConfig& config() const { return config_; }

 private:
  bool whitelisted_locked(const AccessRequest& request) const;
  void end_session_locked(PortalSession& session, SessionState state, Timestamp now, const std::string& where);
  void emit(const PortalSession& session, AuditEvent event, Timestamp now, const std::string& where,
            std::string detail = {});

  GatewayConfig config_;
  AuditLog* audit_;
  mutable std::shared_mutex mutex_;
  std::set<WhitelistEntry> whitelist_;
  std::set<Ipv4Address> authorized_;
  std::vector<PortalSession> sessions_;
  std::map<Ipv4Address, std::size_t> active_by_ip_;
  std::map<std::uint64_t, std::string> where_by_session_;
  std::uint64_t next_id_ = 1;
};

}  // namespace byod
