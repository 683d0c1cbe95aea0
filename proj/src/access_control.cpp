#include "byod/access_control.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <algorithm>
#include <fstream>

namespace byod {

using nlohmann::json;

namespace {

std::string hex(const unsigned char* data, std::size_t n) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0x0F]);
  }
  return out;
}

std::string base64(const unsigned char* data, std::size_t n) {
  std::string out(4 * ((n + 2) / 3), '\0');
  int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data, static_cast<int>(n));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

// Covers every field except the tag itself.
std::string signed_payload(const Certificate& cert) {
  json j = {{"device_fingerprint", cert.device_fingerprint},
            {"expires_at", cert.expires_at},
            {"issued_at", cert.issued_at}};
  return "byod-cert-v1\n" + j.dump();
}

std::string compute_tag(const Certificate& cert, const SecretKey& key) {
  std::string payload = signed_payload(cert);
  unsigned char mac[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.bytes.data(), static_cast<int>(key.bytes.size()),
       reinterpret_cast<const unsigned char*>(payload.data()), payload.size(), mac, &len);
  return base64(mac, len);
}

bool tag_matches(const Certificate& cert, const SecretKey& key) {
  std::string expected = compute_tag(cert, key);
  return expected.size() == cert.tag.size() &&
         CRYPTO_memcmp(expected.data(), cert.tag.data(), expected.size()) == 0;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

PostureStatus parse_status(const std::string& s) {
  if (s == "Unassessed") return PostureStatus::Unassessed;
  if (s == "Blocked") return PostureStatus::Blocked;
  if (s == "Cleared") return PostureStatus::Cleared;
  fail(ErrorCode::ParseError, "unknown posture status '" + s + "'");
}

Deficiency parse_deficiency(const std::string& s) {
  for (auto d : {Deficiency::OutdatedAntivirus, Deficiency::DiscontinuedOS, Deficiency::BannedDriver}) {
    if (s == to_string(d)) return d;
  }
  fail(ErrorCode::ParseError, "unknown deficiency '" + s + "'");
}

}  // namespace

std::string_view to_string(PostureStatus status) {
  switch (status) {
    case PostureStatus::Unassessed: return "Unassessed";
    case PostureStatus::Blocked: return "Blocked";
    case PostureStatus::Cleared: return "Cleared";
  }
  return "Unassessed";
}

std::string_view to_string(Deficiency deficiency) {
  switch (deficiency) {
    case Deficiency::OutdatedAntivirus: return "OutdatedAntivirus";
    case Deficiency::DiscontinuedOS: return "DiscontinuedOS";
    case Deficiency::BannedDriver: return "BannedDriver";
  }
  return "OutdatedAntivirus";
}

std::string_view to_string(GateDecision decision) {
  return decision == GateDecision::FullPipeline ? "FullPipeline" : "NetworkOnly";
}

std::string_view to_string(CertVerdict verdict) {
  switch (verdict) {
    case CertVerdict::Valid: return "Valid";
    case CertVerdict::Expired: return "Expired";
    case CertVerdict::WrongDevice: return "WrongDevice";
    case CertVerdict::Forged: return "Forged";
    case CertVerdict::Revoked: return "Revoked";
  }
  return "Forged";
}

// ---------------------------------------------------------------------------
// Posture

void PostureRules::validate() const {
  if (max_av_definition_age_days <= 0) {
    fail(ErrorCode::InvalidConfig, "max_av_definition_age must be positive");
  }
}

void to_json(json& j, const PostureRules& rules) {
  json os = json::array();
  for (const auto& o : rules.discontinued_os) os.push_back({{"name", o.name}, {"version", o.version}});
  json drivers = json::array();
  for (const auto& d : rules.banned_drivers) drivers.push_back({{"vendor", d.vendor}, {"version", d.version}});
  j = {{"max_av_definition_age", rules.max_av_definition_age_days},
       {"discontinued_os", os},
       {"banned_drivers", drivers}};
}

void from_json(const json& j, PostureRules& rules) {
  rules.max_av_definition_age_days = j.value("max_av_definition_age", rules.max_av_definition_age_days);
  if (j.contains("discontinued_os")) {
    rules.discontinued_os.clear();
    for (const auto& o : j.at("discontinued_os")) {
      rules.discontinued_os.insert({o.value("name", ""), o.value("version", "")});
    }
  }
  if (j.contains("banned_drivers")) {
    rules.banned_drivers.clear();
    for (const auto& d : j.at("banned_drivers")) {
      rules.banned_drivers.insert({d.value("vendor", ""), d.value("version", "")});
    }
  }
  rules.validate();
}

PostureRules default_posture_rules() {
  PostureRules rules;
  rules.discontinued_os = {{"Windows XP", ""}, {"Windows Vista", ""}, {"Android", "2.3"}};
  rules.banned_drivers = {{"RogueNet", "1.0"}};
  return rules;
}

PostureResult evaluate_posture(const ClientDevice& device, const PostureRules& rules, Timestamp now) {
  rules.validate();
  PostureResult result;
  auto age = (date_of(now) - device.antivirus.definitions_date).count();
  if (device.antivirus.product.empty() || age > rules.max_av_definition_age_days) {
    result.deficiencies.push_back(Deficiency::OutdatedAntivirus);
  }
  bool os_retired = std::any_of(rules.discontinued_os.begin(), rules.discontinued_os.end(), [&](const OsId& os) {
    return iequals(os.name, device.os.name) && (os.version.empty() || os.version == device.os.version);
  });
  if (os_retired) result.deficiencies.push_back(Deficiency::DiscontinuedOS);
  bool bad_driver = std::any_of(device.drivers.begin(), device.drivers.end(),
                                [&](const DriverInfo& d) { return rules.banned_drivers.contains(d); });
  if (bad_driver) result.deficiencies.push_back(Deficiency::BannedDriver);
  result.status = result.deficiencies.empty() ? PostureStatus::Cleared : PostureStatus::Blocked;
  return result;
}

GateDecision nac_gate(const DeviceRecord& record) {
  return record.status == PostureStatus::Cleared ? GateDecision::FullPipeline : GateDecision::NetworkOnly;
}

// ---------------------------------------------------------------------------
// Certificates

SecretKey SecretKey::from_string(std::string_view text) {
  return SecretKey{std::vector<std::uint8_t>(text.begin(), text.end())};
}

std::string device_fingerprint(const MacAddress& mac, std::string_view imei) {
  std::string material = "byod-device-v1";
  material.push_back('\0');
  material += mac.str();
  material.push_back('\0');
  material += imei;
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(material.data()), material.size(), digest);
  return hex(digest, sizeof digest);
}

std::string serialize_certificate(const Certificate& cert) {
  json j = {{"device_fingerprint", cert.device_fingerprint},
            {"expires_at", cert.expires_at},
            {"issued_at", cert.issued_at},
            {"tag", cert.tag}};
  return j.dump();
}

std::optional<Certificate> parse_certificate(std::string_view text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (!j.is_object() || j.size() != 4) return std::nullopt;
  auto has = [&](const char* key, auto check) { return j.contains(key) && check(j.at(key)); };
  if (!has("device_fingerprint", [](const json& v) { return v.is_string(); }) ||
      !has("tag", [](const json& v) { return v.is_string(); }) ||
      !has("issued_at", [](const json& v) { return v.is_number_integer(); }) ||
      !has("expires_at", [](const json& v) { return v.is_number_integer(); })) {
    return std::nullopt;
  }
  return Certificate{j.at("device_fingerprint").get<std::string>(), j.at("issued_at").get<Timestamp>(),
                     j.at("expires_at").get<Timestamp>(), j.at("tag").get<std::string>()};
}

json RevocationList::to_json() const { return json(revoked_); }

RevocationList RevocationList::from_json(const json& j) {
  RevocationList list;
  for (const auto& f : j) list.revoke(f.get<std::string>());
  return list;
}

void RevocationList::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!(out << to_json().dump() << '\n')) fail(ErrorCode::StorageFailure, "cannot write " + path.string());
}

RevocationList RevocationList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::StorageFailure, "cannot open " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

Certificate issue_certificate(const DeviceRecord& record, const SecretKey& key, Seconds validity,
                              Timestamp now) {
  if (record.status != PostureStatus::Cleared) {
    fail(ErrorCode::NotCleared, record.device_id() + " is " + std::string(to_string(record.status)));
  }
  if (validity <= 0) fail(ErrorCode::InvalidConfig, "certificate validity must be positive");
  Certificate cert;
  cert.device_fingerprint = device_fingerprint(record.device.mac, record.device.serial_imei);
  cert.issued_at = now;
  cert.expires_at = now + validity;
  cert.tag = compute_tag(cert, key);
  return cert;
}

CertVerdict verify_certificate(const Certificate& cert, const MacAddress& presenting_mac,
                               std::string_view presenting_imei, const SecretKey& key,
                               const RevocationList& revoked, Timestamp now) {
  if (!tag_matches(cert, key)) return CertVerdict::Forged;
  if (revoked.contains(cert.device_fingerprint)) return CertVerdict::Revoked;
  if (now > cert.expires_at) return CertVerdict::Expired;
  if (device_fingerprint(presenting_mac, presenting_imei) != cert.device_fingerprint) {
    return CertVerdict::WrongDevice;
  }
  return CertVerdict::Valid;
}

CertVerdict verify_serialized_certificate(std::string_view text, const MacAddress& presenting_mac,
                                          std::string_view presenting_imei, const SecretKey& key,
                                          const RevocationList& revoked, Timestamp now) {
  auto cert = parse_certificate(text);
  if (!cert) return CertVerdict::Forged;
  return verify_certificate(*cert, presenting_mac, presenting_imei, key, revoked, now);
}

// ---------------------------------------------------------------------------
// Registry

DeviceRegistry::DeviceRegistry(std::size_t max_devices_per_owner, AuditLog* audit)
    : max_devices_(max_devices_per_owner), audit_(audit) {}

void DeviceRegistry::enroll_owner(const std::string& owner) { owners_.insert(owner); }

std::size_t DeviceRegistry::device_count(const std::string& owner) const {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(),
                                                [&](const auto& kv) { return kv.second.owner == owner; }));
}

const DeviceRecord* DeviceRegistry::find(const std::string& device_id) const {
  auto it = records_.find(device_id);
  return it == records_.end() ? nullptr : &it->second;
}

DeviceRecord& DeviceRegistry::require(const std::string& device_id) {
  auto it = records_.find(device_id);
  if (it == records_.end()) fail(ErrorCode::NotFound, "no device " + device_id);
  return it->second;
}

void DeviceRegistry::emit(const DeviceRecord& record, AuditEvent event, Timestamp now, std::string detail,
                          std::optional<AccessLevel> level) {
  if (!audit_) return;
  AuditEntry e;
  e.when = now;
  e.who = record.owner;
  e.what = {record.device_id(), record.device.mac.str(),
            record.ip_history.empty() ? std::string() : record.ip_history.back().address};
  e.event = event;
  e.access_level = level;
  e.detail = std::move(detail);
  audit_->append(std::move(e));
}

const DeviceRecord& DeviceRegistry::register_device(const std::string& owner, const ClientDevice& device,
                                                    Timestamp now) {
  if (!owners_.contains(owner)) fail(ErrorCode::UnknownOwner, "unknown owner " + owner);
  if (device.wifi_tech.empty()) fail(ErrorCode::InvalidConfig, "device without wifi technology");
  auto id = device.device_id();
  if (auto it = records_.find(id); it != records_.end()) {
    if (it->second.owner != owner) {
      fail(ErrorCode::MacAlreadyRegistered, id + " belongs to another user");
    }
    return it->second;
  }
  if (device_count(owner) >= max_devices_) {
    fail(ErrorCode::DeviceLimitReached, owner + " already has " + std::to_string(max_devices_) + " devices");
  }
  DeviceRecord record;
  record.device = device;
  record.owner = owner;
  record.registered_at = now;
  auto& stored = records_.emplace(id, std::move(record)).first->second;
  emit(stored, AuditEvent::DeviceRegister, now, {}, AccessLevel::NetworkOnly);
  return stored;
}

const DeviceRecord& DeviceRegistry::update_device(const std::string& owner, const ClientDevice& device,
                                                  Timestamp now) {
  auto& record = require(device.device_id());
  if (record.owner != owner) fail(ErrorCode::NotOwner, record.device_id() + " is not owned by " + owner);
  if (device.wifi_tech.empty()) fail(ErrorCode::InvalidConfig, "device without wifi technology");
  record.device = device;
  record.status = PostureStatus::Unassessed;
  record.deficiencies.clear();
  emit(record, AuditEvent::DeviceRegister, now, "update", AccessLevel::NetworkOnly);
  return record;
}

void DeviceRegistry::remove_device(const std::string& owner, const std::string& device_id, Timestamp now) {
  auto& record = require(device_id);
  if (record.owner != owner) fail(ErrorCode::NotOwner, device_id + " is not owned by " + owner);
  auto fingerprint = device_fingerprint(record.device.mac, record.device.serial_imei);
  revoked_.revoke(fingerprint);
  emit(record, AuditEvent::DeviceRemove, now, fingerprint);
  records_.erase(device_id);
}

PostureResult DeviceRegistry::assess_posture(const std::string& device_id, const PostureRules& rules,
                                             Timestamp now) {
  auto& record = require(device_id);
  auto result = evaluate_posture(record.device, rules, now);
  record.status = result.status;
  record.deficiencies = result.deficiencies;
  if (result.status == PostureStatus::Blocked) {
    std::string detail;
    for (auto d : result.deficiencies) {
      if (!detail.empty()) detail += ",";
      detail += to_string(d);
    }
    emit(record, AuditEvent::PostureBlock, now, detail, AccessLevel::NetworkOnly);
  } else {
    emit(record, AuditEvent::PostureClear, now, {}, AccessLevel::FullPipeline);
  }
  return result;
}

void DeviceRegistry::record_ip(const std::string& device_id, const std::string& address, Timestamp now) {
  auto& history = require(device_id).ip_history;
  if (!history.empty() && history.back().address == address) {
    history.back().last_seen = std::max(history.back().last_seen, now);
    return;
  }
  if (!history.empty() && now < history.back().first_seen) {
    fail(ErrorCode::InvalidConfig, "IP sightings must be recorded in time order");
  }
  history.push_back({address, now, now});
}

Certificate DeviceRegistry::issue_certificate(const std::string& device_id, const SecretKey& key,
                                              Seconds validity, Timestamp now) {
  auto& record = require(device_id);
  auto cert = byod::issue_certificate(record, key, validity, now);
  emit(record, AuditEvent::CertIssue, now, cert.device_fingerprint, AccessLevel::FullPipeline);
  return cert;
}

CertVerdict DeviceRegistry::verify_presented(const Certificate& cert, const ClientDevice& presenter,
                                             const SecretKey& key, Timestamp now, const std::string& where,
                                             const std::string& ip) {
  auto verdict = verify_certificate(cert, presenter.mac, presenter.serial_imei, key, revoked_, now);
  if (audit_) {
    AuditEntry e;
    e.when = now;
    if (const auto* record = find(presenter.device_id())) e.who = record->owner;
    e.what = {presenter.device_id(), presenter.mac.str(), ip};
    e.where = where;
    e.event = AuditEvent::CertVerify;
    e.detail = cert.device_fingerprint;
    if (verdict != CertVerdict::Valid) e.detail += ":" + std::string(to_string(verdict));
    audit_->append(std::move(e));
  }
  return verdict;
}

json DeviceRegistry::snapshot() const {
  json devices = json::array();
  for (const auto& [id, r] : records_) {
    json history = json::array();
    for (const auto& s : r.ip_history) {
      history.push_back({{"address", s.address}, {"first_seen", s.first_seen}, {"last_seen", s.last_seen}});
    }
    json deficiencies = json::array();
    for (auto d : r.deficiencies) deficiencies.push_back(to_string(d));
    devices.push_back({{"device", r.device},
                       {"owner", r.owner},
                       {"status", to_string(r.status)},
                       {"deficiencies", deficiencies},
                       {"registered_at", r.registered_at},
                       {"ip_history", history}});
  }
  return {{"max_devices_per_owner", max_devices_},
          {"owners", owners_},
          {"devices", devices},
          {"revoked", revoked_.to_json()}};
}

DeviceRegistry DeviceRegistry::from_snapshot(const json& j, AuditLog* audit) {
  try {
    DeviceRegistry registry(j.value("max_devices_per_owner", std::size_t{3}), audit);
    for (const auto& o : j.value("owners", json::array())) registry.owners_.insert(o.get<std::string>());
    for (const auto& d : j.value("devices", json::array())) {
      DeviceRecord r;
      r.device = d.at("device").get<ClientDevice>();
      r.owner = d.at("owner").get<std::string>();
      r.status = parse_status(d.at("status").get<std::string>());
      for (const auto& def : d.value("deficiencies", json::array())) {
        r.deficiencies.push_back(parse_deficiency(def.get<std::string>()));
      }
      r.registered_at = d.value("registered_at", Timestamp{0});
      for (const auto& s : d.value("ip_history", json::array())) {
        r.ip_history.push_back({s.at("address").get<std::string>(), s.at("first_seen").get<Timestamp>(),
                                s.at("last_seen").get<Timestamp>()});
      }
      registry.records_.emplace(r.device_id(), std::move(r));
    }
    registry.revoked_ = RevocationList::from_json(j.value("revoked", json::array()));
    return registry;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("registry snapshot: ") + e.what());
  }
}

}  // namespace byod
