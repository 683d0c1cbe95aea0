#include "byod/captive_portal.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <mutex>

namespace byod {

using nlohmann::json;

std::string_view to_string(RedirectMode mode) {
  switch (mode) {
    case RedirectMode::DnsHijack: return "DnsHijack";
    case RedirectMode::HttpRedirect: return "HttpRedirect";
    case RedirectMode::IcmpRedirect: return "IcmpRedirect";
  }
  return "HttpRedirect";
}

RedirectMode parse_redirect_mode(std::string_view text) {
  for (auto m : {RedirectMode::DnsHijack, RedirectMode::HttpRedirect, RedirectMode::IcmpRedirect}) {
    if (text == to_string(m)) return m;
  }
  fail(ErrorCode::ParseError, "unknown redirect mode '" + std::string(text) + "'");
}

std::string_view to_string(SessionState state) {
  switch (state) {
    case SessionState::Active: return "Active";
    case SessionState::Expired: return "Expired";
    case SessionState::LoggedOut: return "LoggedOut";
  }
  return "Active";
}

std::string_view to_string(InterceptResult::Kind kind) {
  switch (kind) {
    case InterceptResult::Kind::PassThrough: return "PassThrough";
    case InterceptResult::Kind::DnsAnswer: return "DnsAnswer";
    case InterceptResult::Kind::HttpRedirect302: return "HttpRedirect302";
    case InterceptResult::Kind::Drop: return "Drop";
  }
  return "Drop";
}

std::string_view to_string(LoginOutcome outcome) {
  switch (outcome) {
    case LoginOutcome::Success: return "Success";
    case LoginOutcome::AuthFailed: return "AuthFailed";
    case LoginOutcome::DirectoryUnavailable: return "DirectoryUnavailable";
    case LoginOutcome::CertificateRejected: return "CertificateRejected";
  }
  return "AuthFailed";
}

json to_json(const PortalSession& s) {
  return {{"id", s.id},
          {"user", s.user},
          {"device_ip", s.device_ip.str()},
          {"device_mac", s.device_mac.str()},
          {"started_at", s.started_at},
          {"expires_at", s.expires_at},
          {"state", to_string(s.state)}};
}

// ---------------------------------------------------------------------------
// Directory

std::string password_digest(const std::string& student_id, const std::string& password) {
  std::string material = "byod-dir-v1";
  material.push_back('\0');
  material += student_id;
  material.push_back('\0');
  material += password;
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(material.data()), material.size(), digest);
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : digest) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0F]);
  }
  return out;
}

void Directory::add_student(const std::string& student_id, const std::string& password,
                            const std::string& reference) {
  if (student_id.empty()) fail(ErrorCode::InvalidConfig, "empty student id");
  if (!entries_.emplace(student_id, Entry{password_digest(student_id, password), reference}).second) {
    fail(ErrorCode::InvalidConfig, "duplicate student id " + student_id);
  }
}

DirectoryCheck Directory::check(const Credentials& credentials) const {
  if (!available()) return DirectoryCheck::Unavailable;
  auto it = entries_.find(credentials.student_id);
  if (it == entries_.end()) return DirectoryCheck::BadCredentials;
  if (it->second.password_digest != password_digest(credentials.student_id, credentials.password)) {
    return DirectoryCheck::BadCredentials;
  }
  if (credentials.reference && !credentials.reference->empty() && *credentials.reference != it->second.reference) {
    return DirectoryCheck::BadCredentials;
  }
  return DirectoryCheck::Ok;
}

Directory Directory::from_json(const json& j) {
  Directory dir;
  try {
    for (const auto& e : j) {
      auto id = e.at("student_id").get<std::string>();
      auto reference = e.value("reference", "");
      if (e.contains("password_sha256")) {
        if (!dir.entries_.emplace(id, Entry{e.at("password_sha256").get<std::string>(), reference}).second) {
          fail(ErrorCode::InvalidConfig, "duplicate student id " + id);
        }
      } else {
        dir.add_student(id, e.at("password").get<std::string>(), reference);
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("directory: ") + e.what());
  }
  return dir;
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(GatewayConfig config, AuditLog* audit) : config_(std::move(config)), audit_(audit) {
  whitelist_.insert({config_.portal_ip, config_.portal_domain});
  for (const auto& e : config_.whitelist) whitelist_.insert(e);
}

std::string Gateway::portal_url() const {
  return "http://" + config_.portal_ip.str() + ":" + std::to_string(config_.portal_port) + "/login";
}

bool Gateway::whitelisted_locked(const AccessRequest& request) const {
  for (const auto& e : whitelist_) {
    if (e.ip && request.dst_ip && *e.ip == *request.dst_ip) return true;
    if (!e.domain.empty() && !request.dst_domain.empty() && domain_matches(e.domain, request.dst_domain)) {
      return true;
    }
  }
  return false;
}

bool Gateway::is_whitelisted(const AccessRequest& request) const {
  std::shared_lock lock(mutex_);
  return whitelisted_locked(request);
}

std::vector<WhitelistEntry> Gateway::whitelist() const {
  std::shared_lock lock(mutex_);
  return {whitelist_.begin(), whitelist_.end()};
}

void Gateway::add_whitelist(WhitelistEntry entry) {
  std::unique_lock lock(mutex_);
  whitelist_.insert(std::move(entry));
}

InterceptResult Gateway::intercept(const AccessRequest& request) const {
  using Kind = InterceptResult::Kind;
  std::shared_lock lock(mutex_);
  if (whitelisted_locked(request) || authorized_.contains(request.src_ip)) return InterceptResult::pass();
  switch (config_.redirect_mode) {
    case RedirectMode::DnsHijack:
      if (request.protocol == Protocol::DNS) return {Kind::DnsAnswer, config_.portal_ip, {}, false};
      return InterceptResult::drop();
    case RedirectMode::HttpRedirect:
      if (request.protocol == Protocol::HTTP) return {Kind::HttpRedirect302, std::nullopt, portal_url(), false};
      return InterceptResult::drop();
    case RedirectMode::IcmpRedirect:
      // Stub: the host is told to route via the portal, which a forged
      // source address sidesteps entirely.
      if (request.spoofed_source) return {Kind::PassThrough, std::nullopt, "", true};
      return InterceptResult::drop();
  }
  return InterceptResult::drop();
}

void Gateway::emit(const PortalSession& session, AuditEvent event, Timestamp now, const std::string& where,
                   std::string detail) {
  if (!audit_) return;
  AuditEntry e;
  e.when = now;
  if (!session.user.empty()) e.who = session.user;
  e.what = {session.device_mac.str(), session.device_mac.str(), session.device_ip.str()};
  e.where = where;
  e.event = event;
  if (event == AuditEvent::LoginOk) e.access_level = AccessLevel::FullPipeline;
  if (event == AuditEvent::SessionExpire || event == AuditEvent::Logout) e.access_level = AccessLevel::NetworkOnly;
  e.detail = std::move(detail);
  audit_->append(std::move(e));
}

void Gateway::end_session_locked(PortalSession& session, SessionState state, Timestamp now,
                                 const std::string& where) {
  session.state = state;
  authorized_.erase(session.device_ip);
  active_by_ip_.erase(session.device_ip);
  emit(session, state == SessionState::Expired ? AuditEvent::SessionExpire : AuditEvent::Logout, now, where);
}

LoginResult Gateway::login(const Directory& directory, const Credentials& credentials,
                           const DeviceBinding& device, std::optional<CertVerdict> cert_check,
                           const PolicyConfig& policy, Timestamp now) {
  if (!policy.session_timeout || *policy.session_timeout <= 0) {
    fail(ErrorCode::InvalidConfig, policy.name + ": login needs a session_timeout");
  }
  std::unique_lock lock(mutex_);
  PortalSession attempt;
  attempt.user = credentials.student_id;
  attempt.device_ip = device.ip;
  attempt.device_mac = device.mac;

  if (policy.nac_enabled && cert_check != CertVerdict::Valid) {
    emit(attempt, AuditEvent::CertReject, now, device.where,
         cert_check ? std::string(to_string(*cert_check)) : std::string("NoCertificate"));
    return {LoginOutcome::CertificateRejected, std::nullopt};
  }
  switch (directory.check(credentials)) {
    case DirectoryCheck::Unavailable:
      emit(attempt, AuditEvent::LoginFail, now, device.where, "DirectoryUnavailable");
      return {LoginOutcome::DirectoryUnavailable, std::nullopt};
    case DirectoryCheck::BadCredentials:
      emit(attempt, AuditEvent::LoginFail, now, device.where, "AuthFailed");
      return {LoginOutcome::AuthFailed, std::nullopt};
    case DirectoryCheck::Ok:
      break;
  }

  if (auto it = active_by_ip_.find(device.ip); it != active_by_ip_.end()) {
    end_session_locked(sessions_[it->second], SessionState::LoggedOut, now, device.where);
  }
  attempt.id = next_id_++;
  attempt.started_at = now;
  attempt.expires_at = now + *policy.session_timeout;
  attempt.state = SessionState::Active;
  sessions_.push_back(attempt);
  active_by_ip_[device.ip] = sessions_.size() - 1;
  where_by_session_[attempt.id] = device.where;
  authorized_.insert(device.ip);
  emit(attempt, AuditEvent::LoginOk, now, device.where);
  return {LoginOutcome::Success, attempt};
}

std::vector<PortalSession> Gateway::expire_sessions(Timestamp now) {
  std::unique_lock lock(mutex_);
  std::vector<std::size_t> due;
  for (const auto& [ip, index] : active_by_ip_) {
    if (sessions_[index].expires_at <= now) due.push_back(index);
  }
  std::sort(due.begin(), due.end());
  std::vector<PortalSession> expired;
  for (auto index : due) {
    auto& s = sessions_[index];
    end_session_locked(s, SessionState::Expired, now, where_by_session_[s.id]);
    expired.push_back(s);
  }
  return expired;
}

std::optional<PortalSession> Gateway::on_disconnect(Ipv4Address device_ip, Timestamp now) {
  std::unique_lock lock(mutex_);
  auto it = active_by_ip_.find(device_ip);
  if (it == active_by_ip_.end()) return std::nullopt;
  auto& s = sessions_[it->second];
  end_session_locked(s, SessionState::LoggedOut, now, where_by_session_[s.id]);
  return s;
}

bool Gateway::is_authorized(Ipv4Address ip) const {
  std::shared_lock lock(mutex_);
  return authorized_.contains(ip);
}

std::set<Ipv4Address> Gateway::authorized_ips() const {
  std::shared_lock lock(mutex_);
  return authorized_;
}

std::set<Ipv4Address> Gateway::active_session_ips() const {
  std::shared_lock lock(mutex_);
  std::set<Ipv4Address> out;
  for (const auto& s : sessions_) {
    if (s.state == SessionState::Active) out.insert(s.device_ip);
  }
  return out;
}

std::optional<PortalSession> Gateway::active_session(Ipv4Address ip) const {
  std::shared_lock lock(mutex_);
  auto it = active_by_ip_.find(ip);
  if (it == active_by_ip_.end()) return std::nullopt;
  return sessions_[it->second];
}

std::vector<PortalSession> Gateway::sessions() const {
  std::shared_lock lock(mutex_);
  return sessions_;
}

json Gateway::session_table() const {
  json out = json::array();
  for (const auto& s : sessions()) out.push_back(to_json(s));
  return out;
}

}  // namespace byod
