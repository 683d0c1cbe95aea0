#include "byod/segmentation.hpp"

#include <algorithm>
#include <set>

namespace byod {

using nlohmann::json;

std::string_view to_string(ZoneName zone) {
  switch (zone) {
    case ZoneName::PublicDMZ: return "PublicDMZ";
    case ZoneName::PrivateDMZ: return "PrivateDMZ";
    case ZoneName::AccessNet: return "AccessNet";
    case ZoneName::Internet: return "Internet";
    case ZoneName::Management: return "Management";
  }
  return "Internet";
}

std::string_view to_string(Service service) {
  switch (service) {
    case Service::HTTP: return "HTTP";
    case Service::HTTPS: return "HTTPS";
    case Service::DNS: return "DNS";
    case Service::SQL: return "SQL";
    case Service::Mail: return "Mail";
    case Service::VoIP: return "VoIP";
    case Service::Mgmt: return "Mgmt";
    case Service::Any: return "Any";
  }
  return "Any";
}

std::string_view to_string(AclAction action) { return action == AclAction::Allow ? "Allow" : "Deny"; }

ZoneName parse_zone(std::string_view text) {
  for (auto z : kAllZones) {
    if (text == to_string(z)) return z;
  }
  fail(ErrorCode::ParseError, "unknown zone '" + std::string(text) + "'");
}

Service parse_service(std::string_view text) {
  if (text == "Any") return Service::Any;
  for (auto s : kConcreteServices) {
    if (text == to_string(s)) return s;
  }
  fail(ErrorCode::ParseError, "unknown service '" + std::string(text) + "'");
}

AclAction parse_action(std::string_view text) {
  if (text == "Allow") return AclAction::Allow;
  if (text == "Deny") return AclAction::Deny;
  fail(ErrorCode::ParseError, "unknown action '" + std::string(text) + "'");
}

bool is_dmz(ZoneName zone) { return zone == ZoneName::PublicDMZ || zone == ZoneName::PrivateDMZ; }

std::string to_string(const Selector& selector) {
  if (std::holds_alternative<AnyEndpoint>(selector)) return "Any";
  if (auto* z = std::get_if<ZoneName>(&selector)) return std::string(to_string(*z));
  return std::get<IpPrefix>(selector).str();
}

Selector parse_selector(std::string_view text) {
  if (text == "Any") return AnyEndpoint{};
  for (auto z : kAllZones) {
    if (text == to_string(z)) return z;
  }
  return IpPrefix::parse(text);
}

bool AclRule::is_catch_all() const {
  return std::holds_alternative<AnyEndpoint>(src) && std::holds_alternative<AnyEndpoint>(dst) &&
         service == Service::Any;
}

Ruleset::Ruleset(std::vector<AclRule> rules) : rules_(std::move(rules)) {
  std::stable_sort(rules_.begin(), rules_.end(), [](const AclRule& a, const AclRule& b) { return a.order < b.order; });
  for (std::size_t i = 1; i < rules_.size(); ++i) {
    if (rules_[i].order == rules_[i - 1].order) {
      fail(ErrorCode::InvalidConfig, "duplicate rule order " + std::to_string(rules_[i].order));
    }
  }
}

bool Ruleset::has_default_rule() const { return !rules_.empty() && rules_.back().is_catch_all(); }

bool selector_matches(const Selector& selector, const Endpoint& endpoint) {
  if (std::holds_alternative<AnyEndpoint>(selector)) return true;
  if (auto* z = std::get_if<ZoneName>(&selector)) return *z == endpoint.zone;
  return std::get<IpPrefix>(selector).contains(endpoint.address);
}

bool rule_matches(const AclRule& rule, const Endpoint& src, const Endpoint& dst, Service service) {
  return (rule.service == Service::Any || rule.service == service) && selector_matches(rule.src, src) &&
         selector_matches(rule.dst, dst);
}

AclAction permits(const Ruleset& rules, const Endpoint& src, const Endpoint& dst, Service service) {
  if (!rules.has_default_rule()) fail(ErrorCode::NoDefaultRule, "ruleset lacks a terminal catch-all rule");
  for (const auto& rule : rules.rules()) {
    if (rule_matches(rule, src, dst, service)) return rule.action;
  }
  return rules.rules().back().action;
}

std::vector<Zone> default_zones() {
  auto server = [](const char* ip, Service kind, const char* label) {
    return ZoneMember{parse_ip(ip), MemberRole::Server, kind, label};
  };
  auto host = [](const char* ip, const char* label) {
    return ZoneMember{parse_ip(ip), MemberRole::Host, std::nullopt, label};
  };
  return {
      {ZoneName::PublicDMZ,
       {server("172.16.1.10", Service::HTTP, "www"), server("172.16.1.11", Service::HTTPS, "www-tls"),
        server("172.16.1.53", Service::DNS, "dns")}},
      {ZoneName::PrivateDMZ,
       {server("172.16.2.25", Service::Mail, "mail"), server("172.16.2.30", Service::SQL, "records-db"),
        server("172.16.2.50", Service::VoIP, "voip"), server("172.16.2.7", Service::HTTP, "portal"),
        server("172.16.2.67", Service::DNS, "dhcp-dns")}},
      {ZoneName::AccessNet, {host("10.9.0.10", "student-laptop"), host("2001:db8::21b:44ff:fe11:3ab7", "student-phone")}},
      {ZoneName::Internet, {host("8.8.8.8", "remote")}},
      {ZoneName::Management, {host("192.168.100.10", "noc-console")}},
  };
}

Ruleset default_ruleset() {
  std::vector<AclRule> rules;
  int order = 0;
  auto add = [&](Selector src, Selector dst, Service service, AclAction action) {
    rules.push_back({order += 10, std::move(src), std::move(dst), service, action});
  };
  for (auto s : {Service::HTTP, Service::HTTPS, Service::DNS}) {
    add(AnyEndpoint{}, ZoneName::PublicDMZ, s, AclAction::Allow);
  }
  for (auto s : {Service::HTTP, Service::HTTPS, Service::DNS, Service::SQL, Service::Mail, Service::VoIP}) {
    add(ZoneName::AccessNet, ZoneName::PrivateDMZ, s, AclAction::Allow);
  }
  add(ZoneName::Management, AnyEndpoint{}, Service::Any, AclAction::Allow);
  add(ZoneName::AccessNet, ZoneName::Internet, Service::Any, AclAction::Allow);
  add(AnyEndpoint{}, AnyEndpoint{}, Service::Any, AclAction::Deny);
  return Ruleset(std::move(rules));
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::NonServerInDmz: return "NonServerInDmz";
    case ViolationKind::MgmtBackdoor: return "MgmtBackdoor";
    case ViolationKind::MissingDefaultDeny: return "MissingDefaultDeny";
  }
  return "MissingDefaultDeny";
}

json to_json(const Violation& v) { return {{"kind", to_string(v.kind)}, {"subject", v.subject}}; }

namespace {

std::string rule_subject(const AclRule& r) {
  return "rule " + std::to_string(r.order) + ": " + to_string(r.src) + " -> " + to_string(r.dst) + " " +
         std::string(to_string(r.service)) + " " + std::string(to_string(r.action));
}

// A prefix source counts as management only if it covers management members
// and nothing from any other zone.
bool management_only(const Selector& src, const std::vector<Zone>& zones) {
  if (auto* z = std::get_if<ZoneName>(&src)) return *z == ZoneName::Management;
  const auto* prefix = std::get_if<IpPrefix>(&src);
  if (!prefix) return false;
  bool covers_mgmt = false;
  for (const auto& zone : zones) {
    for (const auto& m : zone.members) {
      if (!prefix->contains(m.address)) continue;
      if (zone.name != ZoneName::Management) return false;
      covers_mgmt = true;
    }
  }
  return covers_mgmt;
}

}  // namespace

std::vector<Violation> validate_topology(const std::vector<Zone>& zones, const Ruleset& rules) {
  std::vector<Violation> out;
  for (const auto& zone : zones) {
    if (!is_dmz(zone.name)) continue;
    for (const auto& m : zone.members) {
      if (m.role != MemberRole::Server) {
        auto label = m.label.empty() ? to_string(m.address) : m.label + " (" + to_string(m.address) + ")";
        out.push_back({ViolationKind::NonServerInDmz, std::string(to_string(zone.name)) + ": " + label});
      }
    }
  }
  for (const auto& r : rules.rules()) {
    if (r.action == AclAction::Allow && r.service == Service::Mgmt && !management_only(r.src, zones)) {
      out.push_back({ViolationKind::MgmtBackdoor, rule_subject(r)});
    }
  }
  if (!rules.has_default_rule() || rules.rules().back().action != AclAction::Deny) {
    out.push_back({ViolationKind::MissingDefaultDeny,
                   rules.rules().empty() ? std::string("empty ruleset") : rule_subject(rules.rules().back())});
  }
  return out;
}

json zones_to_json(const std::vector<Zone>& zones) {
  json out = json::array();
  for (const auto& z : zones) {
    json members = json::array();
    for (const auto& m : z.members) {
      json jm = {{"address", to_string(m.address)}, {"role", m.role == MemberRole::Server ? "Server" : "Host"}};
      if (m.server_kind) jm["kind"] = to_string(*m.server_kind);
      if (!m.label.empty()) jm["label"] = m.label;
      members.push_back(std::move(jm));
    }
    out.push_back({{"name", to_string(z.name)}, {"members", std::move(members)}});
  }
  return out;
}

std::vector<Zone> zones_from_json(const json& j) {
  std::vector<Zone> out;
  try {
    for (const auto& jz : j) {
      Zone z{parse_zone(jz.at("name").get<std::string>()), {}};
      for (const auto& jm : jz.value("members", json::array())) {
        ZoneMember m;
        m.address = parse_ip(jm.at("address").get<std::string>());
        auto role = jm.value("role", "Host");
        if (role != "Server" && role != "Host") fail(ErrorCode::ParseError, "unknown role '" + role + "'");
        m.role = role == "Server" ? MemberRole::Server : MemberRole::Host;
        if (jm.contains("kind")) m.server_kind = parse_service(jm.at("kind").get<std::string>());
        m.label = jm.value("label", "");
        z.members.push_back(std::move(m));
      }
      out.push_back(std::move(z));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("zones: ") + e.what());
  }
  return out;
}

json ruleset_to_json(const Ruleset& rules) {
  json out = json::array();
  for (const auto& r : rules.rules()) {
    out.push_back({{"order", r.order},
                   {"src", to_string(r.src)},
                   {"dst", to_string(r.dst)},
                   {"service", to_string(r.service)},
                   {"action", to_string(r.action)}});
  }
  return out;
}

Ruleset ruleset_from_json(const json& j) {
  std::vector<AclRule> rules;
  try {
    int index = 0;
    for (const auto& jr : j) {
      AclRule r;
      r.order = jr.value("order", index);
      r.src = parse_selector(jr.at("src").get<std::string>());
      r.dst = parse_selector(jr.at("dst").get<std::string>());
      r.service = parse_service(jr.at("service").get<std::string>());
      r.action = parse_action(jr.at("action").get<std::string>());
      rules.push_back(std::move(r));
      ++index;
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("rules: ") + e.what());
  }
  return Ruleset(std::move(rules));
}

}  // namespace byod
