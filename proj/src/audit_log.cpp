#include "byod/audit_log.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace byod {

using nlohmann::json;

namespace {

constexpr AuditEvent kAllEvents[] = {
    AuditEvent::Connect,        AuditEvent::Disconnect,   AuditEvent::DhcpLease,
    AuditEvent::LoginOk,        AuditEvent::LoginFail,    AuditEvent::SessionExpire,
    AuditEvent::Logout,         AuditEvent::PostureBlock, AuditEvent::PostureClear,
    AuditEvent::CertReject,     AuditEvent::CertIssue,    AuditEvent::CertVerify,
    AuditEvent::DeviceRegister, AuditEvent::DeviceRemove, AuditEvent::PolicyDeny,
    AuditEvent::Redirect,
};

}  // namespace

std::string_view to_string(AuditEvent event) {
  switch (event) {
    case AuditEvent::Connect: return "Connect";
    case AuditEvent::Disconnect: return "Disconnect";
    case AuditEvent::DhcpLease: return "DhcpLease";
    case AuditEvent::LoginOk: return "LoginOk";
    case AuditEvent::LoginFail: return "LoginFail";
    case AuditEvent::SessionExpire: return "SessionExpire";
    case AuditEvent::Logout: return "Logout";
    case AuditEvent::PostureBlock: return "PostureBlock";
    case AuditEvent::PostureClear: return "PostureClear";
    case AuditEvent::CertReject: return "CertReject";
    case AuditEvent::CertIssue: return "CertIssue";
    case AuditEvent::CertVerify: return "CertVerify";
    case AuditEvent::DeviceRegister: return "DeviceRegister";
    case AuditEvent::DeviceRemove: return "DeviceRemove";
    case AuditEvent::PolicyDeny: return "PolicyDeny";
    case AuditEvent::Redirect: return "Redirect";
  }
  return "Connect";
}

AuditEvent parse_audit_event(std::string_view text) {
  for (auto e : kAllEvents) {
    if (text == to_string(e)) return e;
  }
  fail(ErrorCode::ParseError, "unknown audit event '" + std::string(text) + "'");
}

std::string_view to_string(AccessLevel level) {
  return level == AccessLevel::FullPipeline ? "FullPipeline" : "NetworkOnly";
}

json to_json(const AuditRecord& r) {
  json j = {{"seq", r.seq},
            {"when", r.when},
            {"what", {{"device_id", r.what.device_id}, {"mac", r.what.mac}, {"ip", r.what.ip}}},
            {"where", r.where},
            {"event", to_string(r.event)}};
  if (r.who) j["who"] = *r.who;
  if (r.access_level) j["access_level"] = to_string(*r.access_level);
  if (r.traffic) j["traffic"] = {{"bytes_up", r.traffic->bytes_up}, {"bytes_down", r.traffic->bytes_down}};
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

std::string to_json_line(const AuditRecord& record) { return to_json(record).dump(); }

AuditRecord parse_audit_line(std::string_view line) {
  try {
    auto j = json::parse(line);
    AuditRecord r;
    r.seq = j.at("seq").get<std::uint64_t>();
    r.when = j.at("when").get<Timestamp>();
    if (j.contains("who")) r.who = j.at("who").get<std::string>();
    const auto& what = j.at("what");
    r.what = {what.value("device_id", ""), what.value("mac", ""), what.value("ip", "")};
    r.where = j.value("where", "");
    r.event = parse_audit_event(j.at("event").get<std::string>());
    if (j.contains("access_level")) {
      auto level = j.at("access_level").get<std::string>();
      if (level != "NetworkOnly" && level != "FullPipeline") {
        fail(ErrorCode::ParseError, "unknown access level '" + level + "'");
      }
      r.access_level = level == "FullPipeline" ? AccessLevel::FullPipeline : AccessLevel::NetworkOnly;
    }
    if (j.contains("traffic")) {
      r.traffic = Traffic{j.at("traffic").at("bytes_up").get<std::uint64_t>(),
                          j.at("traffic").at("bytes_down").get<std::uint64_t>()};
    }
    r.detail = j.value("detail", "");
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad audit line: ") + e.what());
  }
}

std::vector<AuditRecord> read_audit_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::StorageFailure, "cannot open " + path.string());
  std::vector<AuditRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_audit_line(line));
  }
  return out;
}

AuditLog::AuditLog(const std::filesystem::path& path) {
  if (std::filesystem::is_regular_file(path)) {
    records_ = read_audit_file(path);
    if (!records_.empty()) last_seq_ = records_.back().seq;
  }
  file_ = std::fopen(path.c_str(), "a");
  if (!file_) fail(ErrorCode::StorageFailure, "cannot open " + path.string() + " for append");
}

AuditLog::~AuditLog() {
  if (file_) std::fclose(file_);
}

AuditRecord AuditLog::append(AuditEntry entry) {
  if (entry.event == AuditEvent::LoginOk && (!entry.who || entry.who->empty())) {
    fail(ErrorCode::InvalidConfig, "LoginOk record without a user");
  }
  std::lock_guard lock(mutex_);
  AuditRecord record;
  static_cast<AuditEntry&>(record) = std::move(entry);
  record.seq = last_seq_ + 1;
  if (file_) {
    std::string line = to_json_line(record);
    line.push_back('\n');
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0 ||
        ::fsync(::fileno(file_)) != 0) {
      fail(ErrorCode::StorageFailure, "audit write failed");
    }
  }
  last_seq_ = record.seq;
  records_.push_back(record);
  return record;
}

std::vector<AuditRecord> AuditLog::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t AuditLog::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

std::string AuditLog::to_jsonl() const {
  std::lock_guard lock(mutex_);
  std::string out;
  for (const auto& r : records_) {
    out += to_json_line(r);
    out.push_back('\n');
  }
  return out;
}

bool AuditFilter::matches(const AuditRecord& r) const {
  if (who && r.who != *who) return false;
  if (device && r.what.device_id != *device && r.what.mac != *device && r.what.ip != *device) return false;
  if (where && r.where != *where) return false;
  if (from && r.when < *from) return false;
  if (to && r.when > *to) return false;
  if (!events.empty() && !events.contains(r.event)) return false;
  return true;
}

std::vector<AuditRecord> query(std::span<const AuditRecord> records, const AuditFilter& filter) {
  std::vector<AuditRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const AuditRecord& r) { return filter.matches(r); });
  return out;
}

std::vector<AuditRecord> query(const AuditLog& log, const AuditFilter& filter) {
  auto snapshot = log.records();
  return query(std::span<const AuditRecord>(snapshot), filter);
}

std::string_view to_string(SuspicionKind kind) {
  switch (kind) {
    case SuspicionKind::CertCloneAttempt: return "CertCloneAttempt";
    case SuspicionKind::LoginFailBurst: return "LoginFailBurst";
    case SuspicionKind::UnregisteredMac: return "UnregisteredMac";
  }
  return "LoginFailBurst";
}

json to_json(const SuspicionFlag& flag) {
  return {{"kind", to_string(flag.kind)}, {"subject", flag.subject}, {"evidence", flag.evidence}};
}

namespace {

// First window [t_i, t_i + window] whose records satisfy `enough`; evidence
// is every record in it.
template <typename Enough>
std::optional<std::vector<std::uint64_t>> first_window(const std::vector<const AuditRecord*>& events,
                                                       Seconds window, Enough enough) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    std::vector<const AuditRecord*> in_window;
    for (std::size_t k = i; k < events.size() && events[k]->when - events[i]->when <= window; ++k) {
      in_window.push_back(events[k]);
    }
    if (enough(in_window)) {
      std::vector<std::uint64_t> seqs;
      for (const auto* r : in_window) seqs.push_back(r->seq);
      return seqs;
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<SuspicionFlag> detect_suspicion(std::span<const AuditRecord> records,
                                            const SuspicionThresholds& thresholds) {
  std::map<std::string, std::vector<const AuditRecord*>> by_fingerprint;
  std::map<std::string, std::vector<const AuditRecord*>> fails_by_user;
  std::map<std::string, std::vector<const AuditRecord*>> leases_by_mac;
  std::set<std::string> registered_macs;
  bool registration_in_use = false;

  std::vector<const AuditRecord*> ordered;
  for (const auto& r : records) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const AuditRecord* a, const AuditRecord* b) { return a->when < b->when; });

  for (const auto* r : ordered) {
    switch (r->event) {
      case AuditEvent::CertVerify:
      case AuditEvent::CertReject:
        // detail is "<fingerprint>" or "<fingerprint>:<verdict>"
        if (!r->detail.empty()) by_fingerprint[r->detail.substr(0, r->detail.find(':'))].push_back(r);
        break;
      case AuditEvent::LoginFail:
        if (r->who) fails_by_user[*r->who].push_back(r);
        break;
      case AuditEvent::DhcpLease:
        if (!r->what.mac.empty()) leases_by_mac[r->what.mac].push_back(r);
        break;
      case AuditEvent::DeviceRegister:
        registration_in_use = true;
        registered_macs.insert(r->what.mac);
        break;
      default:
        break;
    }
  }

  std::vector<SuspicionFlag> flags;
  for (const auto& [fingerprint, events] : by_fingerprint) {
    auto evidence = first_window(events, thresholds.window, [&](const auto& in_window) {
      std::set<std::string> macs;
      for (const auto* r : in_window) macs.insert(r->what.mac);
      return macs.size() >= thresholds.clone_macs;
    });
    if (evidence) flags.push_back({SuspicionKind::CertCloneAttempt, fingerprint, *evidence});
  }
  for (const auto& [user, events] : fails_by_user) {
    auto evidence = first_window(events, thresholds.window, [&](const auto& in_window) {
      return in_window.size() >= thresholds.login_failures;
    });
    if (evidence) flags.push_back({SuspicionKind::LoginFailBurst, user, *evidence});
  }
  if (registration_in_use) {
    for (const auto& [mac, events] : leases_by_mac) {
      if (registered_macs.contains(mac)) continue;
      SuspicionFlag flag{SuspicionKind::UnregisteredMac, mac, {}};
      for (const auto* r : events) flag.evidence.push_back(r->seq);
      flags.push_back(std::move(flag));
    }
  }
  return flags;
}

}  // namespace byod
