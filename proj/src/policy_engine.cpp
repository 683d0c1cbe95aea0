#include "byod/policy_engine.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace byod {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  while (!out.empty() && out.back() == '.') out.pop_back();
  return out;
}

std::set<Protocol> all_protocols() { return {std::begin(kAllProtocols), std::end(kAllProtocols)}; }

PolicyConfig open_main(std::string name) {
  PolicyConfig p;
  p.name = std::move(name);
  p.ssid = "WIFI-KNUST";
  p.allowed_protocols = all_protocols();
  return p;
}

PolicyConfig sec_network(std::string name) {
  PolicyConfig p = open_main(std::move(name));
  p.ssid = "KNUST WIFI SEC";
  p.monitored = true;
  return p;
}

}  // namespace

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::HTTP: return "HTTP";
    case Protocol::HTTPS: return "HTTPS";
    case Protocol::FTP: return "FTP";
    case Protocol::P2P: return "P2P";
    case Protocol::DNS: return "DNS";
    case Protocol::ICMP: return "ICMP";
  }
  return "HTTP";
}

Protocol parse_protocol(std::string_view text) {
  for (auto p : kAllProtocols) {
    if (text == to_string(p)) return p;
  }
  fail(ErrorCode::ParseError, "unknown protocol '" + std::string(text) + "'");
}

std::string_view to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::Allow: return "Allow";
    case VerdictKind::Redirect: return "Redirect";
    case VerdictKind::Deny: return "Deny";
  }
  return "Allow";
}

std::string_view to_string(DenyReason reason) {
  switch (reason) {
    case DenyReason::None: return "None";
    case DenyReason::ProtocolBlocked: return "ProtocolBlocked";
    case DenyReason::Isolated: return "Isolated";
  }
  return "None";
}

void PolicyConfig::validate() const {
  if (portal_enabled && (!session_timeout || *session_timeout <= 0)) {
    fail(ErrorCode::InvalidConfig, name + ": portal needs a positive session_timeout");
  }
  if (!domain_blacklist.empty() && redirect_target.empty()) {
    fail(ErrorCode::InvalidConfig, name + ": blacklist without redirect_target");
  }
  if (bandwidth_cap && !(*bandwidth_cap >= 0)) {
    fail(ErrorCode::InvalidConfig, name + ": bandwidth_cap must be non-negative");
  }
}

void to_json(json& j, const PolicyConfig& p) {
  json protocols = json::array();
  for (auto proto : p.allowed_protocols) protocols.push_back(to_string(proto));
  j = {{"name", p.name},
       {"ssid", p.ssid},
       {"security_mode", to_string(p.security_mode)},
       {"domain_blacklist", p.domain_blacklist},
       {"allowed_protocols", protocols},
       {"redirect_target", p.redirect_target},
       {"bandwidth_cap", p.bandwidth_cap ? json(*p.bandwidth_cap) : json(nullptr)},
       {"portal_enabled", p.portal_enabled},
       {"session_timeout", p.session_timeout ? json(*p.session_timeout) : json(nullptr)},
       {"nac_enabled", p.nac_enabled},
       {"isolated", p.isolated},
       {"monitored", p.monitored}};
}

void from_json(const json& j, PolicyConfig& p) {
  p.name = j.value("name", "");
  p.ssid = j.value("ssid", "");
  p.security_mode = parse_security_mode(j.value("security_mode", "Open"));
  p.domain_blacklist.clear();
  for (const auto& d : j.value("domain_blacklist", json::array())) {
    p.domain_blacklist.insert(lower(d.get<std::string>()));
  }
  p.allowed_protocols.clear();
  if (j.contains("allowed_protocols")) {
    for (const auto& proto : j.at("allowed_protocols")) {
      p.allowed_protocols.insert(parse_protocol(proto.get<std::string>()));
    }
  } else {
    p.allowed_protocols = all_protocols();
  }
  p.redirect_target = j.value("redirect_target", "");
  p.bandwidth_cap.reset();
  if (j.contains("bandwidth_cap") && !j.at("bandwidth_cap").is_null()) {
    p.bandwidth_cap = j.at("bandwidth_cap").get<double>();
  }
  p.portal_enabled = j.value("portal_enabled", false);
  p.session_timeout.reset();
  if (j.contains("session_timeout") && !j.at("session_timeout").is_null()) {
    p.session_timeout = j.at("session_timeout").get<Seconds>();
  }
  p.nac_enabled = j.value("nac_enabled", false);
  p.isolated = j.value("isolated", false);
  p.monitored = j.value("monitored", false);
  p.validate();
}

PolicyPreset preset(PolicyVersion version) {
  switch (version) {
    case PolicyVersion::V1:
      return {open_main("v1"), std::nullopt};
    case PolicyVersion::V2: {
      PolicyConfig p = open_main("v2");
      p.domain_blacklist = {"youtube.com"};
      p.allowed_protocols = {Protocol::HTTP, Protocol::HTTPS, Protocol::DNS};
      p.redirect_target = "knust.edu.gh";
      return {p, std::nullopt};
    }
    case PolicyVersion::V3: {
      PolicyConfig sec = sec_network("v3-sec");
      sec.isolated = true;
      return {open_main("v3"), sec};
    }
    case PolicyVersion::V4: {
      PolicyConfig p = open_main("v4");
      p.portal_enabled = true;
      p.session_timeout = 600;
      return {p, std::nullopt};
    }
    case PolicyVersion::V5: {
      PolicyConfig sec = sec_network("v5-sec");
      sec.portal_enabled = true;
      sec.session_timeout = 3600;
      return {open_main("v5"), sec};
    }
  }
  return {open_main("v1"), std::nullopt};
}

PolicyVersion parse_policy_version(std::string_view text) {
  std::string t = lower(text);
  if (t == "v1") return PolicyVersion::V1;
  if (t == "v2") return PolicyVersion::V2;
  if (t == "v3") return PolicyVersion::V3;
  if (t == "v4") return PolicyVersion::V4;
  if (t == "v5") return PolicyVersion::V5;
  fail(ErrorCode::ParseError, "unknown policy version '" + std::string(text) + "'");
}

PolicyConfig proposed_design() {
  PolicyConfig p = open_main("proposed");
  p.ssid = "KNUST-BYOD";
  p.security_mode = SecurityMode::WPA2;
  p.portal_enabled = true;
  p.session_timeout = 3600;
  p.nac_enabled = true;
  p.monitored = true;
  return p;
}

PolicyConfig policy_from_tag(std::string_view tag) {
  std::string t = lower(tag);
  if (t == "proposed") return proposed_design();
  if (t.size() > 4 && t.ends_with("-sec")) {
    auto bundle = preset(parse_policy_version(t.substr(0, t.size() - 4)));
    if (!bundle.companion) fail(ErrorCode::ParseError, "preset " + t.substr(0, 2) + " has no SEC network");
    return *bundle.companion;
  }
  return preset(parse_policy_version(t)).main;
}

void add_category_file(PolicyConfig& policy, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open category file " + path);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    auto end = line.find_last_not_of(" \t\r");
    policy.domain_blacklist.insert(lower(line.substr(begin, end - begin + 1)));
  }
  policy.validate();
}

bool domain_matches(std::string_view pattern, std::string_view domain) {
  std::string p = lower(pattern);
  std::string d = lower(domain);
  if (p.empty()) return false;
  if (d == p) return true;
  return d.size() > p.size() && d.ends_with(p) && d[d.size() - p.size() - 1] == '.';
}

bool is_blacklisted(const PolicyConfig& policy, std::string_view domain) {
  return std::any_of(policy.domain_blacklist.begin(), policy.domain_blacklist.end(),
                     [&](const std::string& pattern) { return domain_matches(pattern, domain); });
}

Verdict evaluate_request(const PolicyConfig& policy, const AccessRequest& request) {
  if (policy.isolated) return {VerdictKind::Deny, "", DenyReason::Isolated};
  if (!policy.allowed_protocols.contains(request.protocol)) {
    return {VerdictKind::Deny, "", DenyReason::ProtocolBlocked};
  }
  if (is_blacklisted(policy, request.dst_domain)) {
    return {VerdictKind::Redirect, policy.redirect_target, DenyReason::None};
  }
  return {};
}

double apply_cap(const PolicyConfig& policy, double computed_mbps) {
  if (computed_mbps < 0) fail(ErrorCode::InvalidConfig, "negative throughput");
  return policy.bandwidth_cap ? std::min(computed_mbps, *policy.bandwidth_cap) : computed_mbps;
}

}  // namespace byod
