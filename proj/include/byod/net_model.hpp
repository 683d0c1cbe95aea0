#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "byod/address.hpp"
#include "byod/common.hpp"

namespace byod {

enum class Band { Ghz2_4, Ghz5 };
enum class ApKind { Autonomous, Lightweight };
enum class SecurityMode { Open, WEP, WPA, WPA2 };
enum class WifiTech { B, G, A, N };
enum class IpSupport { V4Only, DualStack };

std::string_view to_string(Band band);
std::string_view to_string(ApKind kind);
std::string_view to_string(SecurityMode mode);
std::string_view to_string(WifiTech tech);
Band parse_band(std::string_view text);
ApKind parse_ap_kind(std::string_view text);
SecurityMode parse_security_mode(std::string_view text);
WifiTech parse_wifi_tech(std::string_view text);

// 802.11b/g live on 2.4 GHz, 802.11a on 5 GHz, 802.11n on both.
bool supports_band(WifiTech tech, Band band);

struct Channel {
  Band band = Band::Ghz2_4;
  double raw_mbps = 0;

  bool operator==(const Channel&) const = default;
};

struct AccessPoint {
  std::string id;
  ApKind kind = ApKind::Autonomous;
  int tier = 1;
  // Lightweight APs name the autonomous AP or controller they hang off.
  std::optional<std::string> parent;
  std::vector<Channel> channels;
  std::string ssid;
  SecurityMode security = SecurityMode::Open;
  std::string location;

  const Channel* channel(Band band) const;
  void validate() const;

  bool operator==(const AccessPoint&) const = default;
};

// Dual 300 Mbps (2.4 + 5 GHz) autonomous AP, the campus reference model.
AccessPoint dual_band_ap(std::string id, double mbps_per_channel = 300.0);

struct OsInfo {
  std::string name;
  std::string version;
  Date date{};
};

struct AntivirusInfo {
  std::string product;
  std::string version;
  Date definitions_date{};
};

struct DriverInfo {
  std::string vendor;
  std::string version;

  auto operator<=>(const DriverInfo&) const = default;
};

// What the MDM knows about one user-owned device. The MAC doubles as the
// device identifier.
struct ClientDevice {
  std::string name;
  std::string model;
  std::string serial_imei;
  MacAddress mac;
  std::string manufacturer;
  Date manufacture_date{};
  OsInfo os;
  IpSupport ip_support = IpSupport::V4Only;
  std::set<WifiTech> wifi_tech;
  AntivirusInfo antivirus;
  std::vector<DriverInfo> drivers;

  std::string device_id() const { return mac.str(); }
};

struct DhcpConfig {
  Ipv4Cidr cidr;
  Ipv4Address gateway;
  std::string dns_suffix;
  Seconds lease_seconds = 3600;
  // Optional sub-range of the CIDR handed out to clients.
  std::optional<Ipv4Address> range_first;
  std::optional<Ipv4Address> range_last;
};

struct CampusNetwork {
  double wan_mbps = 144.0;
  DhcpConfig dhcp;
  std::optional<IpPrefix> v6_prefix;
  bool host_isolation = false;
  std::vector<AccessPoint> aps;

  const AccessPoint* find_ap(std::string_view id) const;
  void validate() const;
};

// 144 Mbps WAN, 10.9.0.0/16 behind gateway 10.9.0.5, one dual-band AP.
CampusNetwork default_campus();

struct IpAssignment {
  Ipv4Address v4;
  std::optional<Ipv6Address> v6;
  Ipv4Address gateway;
  std::string dns_suffix;
  Timestamp lease_start = 0;
  Seconds lease_seconds = 0;

  Timestamp expires_at() const { return lease_start + lease_seconds; }
};

// Address pool state for one campus network. Not thread-safe: callers
// serialize assignment.
class DhcpServer {
 public:
  explicit DhcpServer(const CampusNetwork& network);

  // Renewal inside an unexpired lease keeps the address and restarts the lease.
  IpAssignment assign(const ClientDevice& device, Timestamp now);
  void release(const MacAddress& mac);

  std::optional<IpAssignment> lease_for(const MacAddress& mac, Timestamp now) const;
  std::size_t active_leases(Timestamp now) const;
  std::size_t pool_size() const;

 private:
  struct Lease {
    MacAddress mac;
    IpAssignment assignment;
  };

  bool in_pool(std::uint32_t address) const;

  DhcpConfig config_;
  std::optional<IpPrefix> v6_prefix_;
  std::uint32_t first_ = 0;
  std::uint32_t last_ = 0;
  std::map<std::uint32_t, Lease> by_address_;
  std::map<MacAddress, std::uint32_t> by_mac_;
};

IpAssignment dhcp_assign(DhcpServer& server, const ClientDevice& device, Timestamp now);

// Modified EUI-64 interface identifier: flip the universal/local bit and
// insert ff:fe in the middle of the MAC.
std::array<std::uint8_t, 8> eui64_interface_id(const MacAddress& mac);
Ipv6Address slaac_address(const IpPrefix& v6_prefix, const MacAddress& mac);
// Throws UnsupportedDevice for V4-only devices, InvalidConfig unless /64.
Ipv6Address slaac_assign(const ClientDevice& device, const IpPrefix& v6_prefix);
// Inverse of the EUI-64 expansion; nullopt when the IID has no ff:fe marker.
std::optional<MacAddress> mac_from_slaac(const Ipv6Address& address);

struct Association {
  std::string ap_id;
  Band band = Band::Ghz2_4;
  double raw_mbps = 0;
};

// 5 GHz whenever the device can use it and the AP offers it.
Association associate(const ClientDevice& device, const AccessPoint& ap);

// Highest PHY rate a device reaches on a channel.
double device_phy_rate(const ClientDevice& device, const Channel& channel);

void to_json(nlohmann::json& j, const AccessPoint& ap);
void from_json(const nlohmann::json& j, AccessPoint& ap);
void to_json(nlohmann::json& j, const CampusNetwork& network);
void from_json(const nlohmann::json& j, CampusNetwork& network);
void to_json(nlohmann::json& j, const ClientDevice& device);
void from_json(const nlohmann::json& j, ClientDevice& device);

CampusNetwork load_network(const std::string& path);

}  // namespace byod
