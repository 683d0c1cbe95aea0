#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "byod/address.hpp"
#include "byod/common.hpp"

namespace byod {

enum class ZoneName { PublicDMZ, PrivateDMZ, AccessNet, Internet, Management };
enum class Service { HTTP, HTTPS, DNS, SQL, Mail, VoIP, Mgmt, Any };
enum class AclAction { Allow, Deny };

inline constexpr ZoneName kAllZones[] = {ZoneName::PublicDMZ, ZoneName::PrivateDMZ, ZoneName::AccessNet,
                                         ZoneName::Internet, ZoneName::Management};
// Every concrete service; Any is a rule wildcard only.
inline constexpr Service kConcreteServices[] = {Service::HTTP, Service::HTTPS, Service::DNS, Service::SQL,
                                                Service::Mail, Service::VoIP, Service::Mgmt};

std::string_view to_string(ZoneName zone);
std::string_view to_string(Service service);
std::string_view to_string(AclAction action);
ZoneName parse_zone(std::string_view text);
Service parse_service(std::string_view text);
AclAction parse_action(std::string_view text);

bool is_dmz(ZoneName zone);

enum class MemberRole { Server, Host };

struct ZoneMember {
  IpAddress address;
  MemberRole role = MemberRole::Host;
  std::optional<Service> server_kind;  // set for servers
  std::string label;

  bool operator==(const ZoneMember&) const = default;
};

struct Zone {
  ZoneName name = ZoneName::AccessNet;
  std::vector<ZoneMember> members;
};

struct AnyEndpoint {
  bool operator==(const AnyEndpoint&) const = default;
};

// Rule source or destination: everything, one zone, or an address prefix.
using Selector = std::variant<AnyEndpoint, ZoneName, IpPrefix>;

std::string to_string(const Selector& selector);
Selector parse_selector(std::string_view text);

struct AclRule {
  int order = 0;
  Selector src;
  Selector dst;
  Service service = Service::Any;
  AclAction action = AclAction::Deny;

  bool is_catch_all() const;
  bool operator==(const AclRule&) const = default;
};

struct Endpoint {
  IpAddress address;
  ZoneName zone = ZoneName::Internet;
};

// Rules sorted by order; duplicate order indices are rejected.
class Ruleset {
 public:
  Ruleset() = default;
  explicit Ruleset(std::vector<AclRule> rules);

  const std::vector<AclRule>& rules() const { return rules_; }
  bool has_default_rule() const;

 private:
  std::vector<AclRule> rules_;
};

bool selector_matches(const Selector& selector, const Endpoint& endpoint);
bool rule_matches(const AclRule& rule, const Endpoint& src, const Endpoint& dst, Service service);

// First matching rule wins. Throws NoDefaultRule unless the last rule is a
// catch-all.
AclAction permits(const Ruleset& rules, const Endpoint& src, const Endpoint& dst, Service service);

// The campus layout: web/DNS in the public DMZ, mail/database/VoIP/portal/DHCP
// in the private DMZ, students in the access network.
std::vector<Zone> default_zones();
// Public DMZ web services open to all, private DMZ to the access network and
// management only, management via the firewall only, default deny.
Ruleset default_ruleset();

enum class ViolationKind { NonServerInDmz, MgmtBackdoor, MissingDefaultDeny };

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string subject;

  bool operator==(const Violation&) const = default;
};

nlohmann::json to_json(const Violation& violation);

std::vector<Violation> validate_topology(const std::vector<Zone>& zones, const Ruleset& rules);

// {"zones": [...], "rules": [...]}; rules without "order" take their index.
nlohmann::json zones_to_json(const std::vector<Zone>& zones);
std::vector<Zone> zones_from_json(const nlohmann::json& j);
nlohmann::json ruleset_to_json(const Ruleset& rules);
Ruleset ruleset_from_json(const nlohmann::json& j);

}  // namespace byod
