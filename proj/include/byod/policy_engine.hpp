#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "byod/address.hpp"
#include "byod/common.hpp"
#include "byod/net_model.hpp"

namespace byod {

enum class Protocol { HTTP, HTTPS, FTP, P2P, DNS, ICMP };

inline constexpr Protocol kAllProtocols[] = {Protocol::HTTP, Protocol::HTTPS, Protocol::FTP,
                                             Protocol::P2P,  Protocol::DNS,   Protocol::ICMP};

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view text);

// One WLAN policy regime. Immutable once built; share freely across threads.
struct PolicyConfig {
  std::string name;
  std::string ssid;
  SecurityMode security_mode = SecurityMode::Open;
  std::set<std::string> domain_blacklist;  // lower-case, suffix-matched
  std::set<Protocol> allowed_protocols;
  std::string redirect_target;
  std::optional<double> bandwidth_cap;     // Mbps per client
  bool portal_enabled = false;
  std::optional<Seconds> session_timeout;
  bool nac_enabled = false;
  // Test network with no Internet forwarding at all.
  bool isolated = false;
  bool monitored = false;

  void validate() const;

  bool operator==(const PolicyConfig&) const = default;
};

void to_json(nlohmann::json& j, const PolicyConfig& p);
void from_json(const nlohmann::json& j, PolicyConfig& p);

enum class PolicyVersion { V1, V2, V3, V4, V5 };

struct PolicyPreset {
  PolicyConfig main;
  // The isolated "KNUST WIFI SEC" network that ran beside the main SSID.
  std::optional<PolicyConfig> companion;
};

PolicyPreset preset(PolicyVersion version);
PolicyVersion parse_policy_version(std::string_view text);

// NAC + MDM + certificates + captive portal on a WPA2 SSID.
PolicyConfig proposed_design();

// "v1".."v5", "v3-sec", "v5-sec", "proposed".
PolicyConfig policy_from_tag(std::string_view tag);

// Adds one domain per line; blank lines and '#' comments are skipped.
void add_category_file(PolicyConfig& policy, const std::string& path);

struct AccessRequest {
  Ipv4Address src_ip;
  std::string dst_domain;
  Protocol protocol = Protocol::HTTP;
  Timestamp at = 0;
  std::optional<Ipv4Address> dst_ip;
  // Source address forged to look like an authorized client.
  bool spoofed_source = false;
};

enum class VerdictKind { Allow, Redirect, Deny };
enum class DenyReason { None, ProtocolBlocked, Isolated };

std::string_view to_string(VerdictKind kind);
std::string_view to_string(DenyReason reason);

struct Verdict {
  VerdictKind kind = VerdictKind::Allow;
  std::string redirect_target;
  DenyReason reason = DenyReason::None;

  bool operator==(const Verdict&) const = default;
};

// Case-insensitive match of `domain` against `pattern` or any subdomain of it.
bool domain_matches(std::string_view pattern, std::string_view domain);
bool is_blacklisted(const PolicyConfig& policy, std::string_view domain);

// Protocol filtering runs before domain filtering, so a blocked protocol is
// never turned into a redirect.
Verdict evaluate_request(const PolicyConfig& policy, const AccessRequest& request);

double apply_cap(const PolicyConfig& policy, double computed_mbps);

}  // namespace byod
