#include "byod/net_model.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

namespace byod {

using nlohmann::json;

std::string_view to_string(Band band) { return band == Band::Ghz5 ? "5GHz" : "2.4GHz"; }

std::string_view to_string(ApKind kind) {
  return kind == ApKind::Lightweight ? "Lightweight" : "Autonomous";
}

std::string_view to_string(SecurityMode mode) {
  switch (mode) {
    case SecurityMode::Open: return "Open";
    case SecurityMode::WEP: return "WEP";
    case SecurityMode::WPA: return "WPA";
    case SecurityMode::WPA2: return "WPA2";
  }
  return "Open";
}

std::string_view to_string(WifiTech tech) {
  switch (tech) {
    case WifiTech::B: return "802.11b";
    case WifiTech::G: return "802.11g";
    case WifiTech::A: return "802.11a";
    case WifiTech::N: return "802.11n";
  }
  return "802.11b";
}

Band parse_band(std::string_view text) {
  if (text == "2.4GHz" || text == "2.4") return Band::Ghz2_4;
  if (text == "5GHz" || text == "5") return Band::Ghz5;
  fail(ErrorCode::ParseError, "unknown band '" + std::string(text) + "'");
}

ApKind parse_ap_kind(std::string_view text) {
  if (text == "Autonomous") return ApKind::Autonomous;
  if (text == "Lightweight") return ApKind::Lightweight;
  fail(ErrorCode::ParseError, "unknown AP kind '" + std::string(text) + "'");
}

SecurityMode parse_security_mode(std::string_view text) {
  for (auto mode : {SecurityMode::Open, SecurityMode::WEP, SecurityMode::WPA, SecurityMode::WPA2}) {
    if (text == to_string(mode)) return mode;
  }
  fail(ErrorCode::ParseError, "unknown security mode '" + std::string(text) + "'");
}

WifiTech parse_wifi_tech(std::string_view text) {
  for (auto tech : {WifiTech::B, WifiTech::G, WifiTech::A, WifiTech::N}) {
    if (text == to_string(tech)) return tech;
  }
  fail(ErrorCode::ParseError, "unknown wifi technology '" + std::string(text) + "'");
}

bool supports_band(WifiTech tech, Band band) {
  switch (tech) {
    case WifiTech::B:
    case WifiTech::G: return band == Band::Ghz2_4;
    case WifiTech::A: return band == Band::Ghz5;
    case WifiTech::N: return true;
  }
  return false;
}

const Channel* AccessPoint::channel(Band band) const {
  auto it = std::find_if(channels.begin(), channels.end(),
                         [band](const Channel& c) { return c.band == band; });
  return it == channels.end() ? nullptr : &*it;
}

void AccessPoint::validate() const {
  if (id.empty()) fail(ErrorCode::InvalidConfig, "access point without id");
  if (tier != 1 && tier != 2) fail(ErrorCode::InvalidConfig, id + ": tier must be 1 or 2");
  if (kind == ApKind::Lightweight && (tier != 2 || !parent || parent->empty())) {
    fail(ErrorCode::InvalidConfig, id + ": lightweight AP needs tier 2 and a parent");
  }
  if (channels.empty() || channels.size() > 2) {
    fail(ErrorCode::InvalidConfig, id + ": an AP has one or two channels");
  }
  for (const auto& c : channels) {
    if (!(c.raw_mbps > 0)) fail(ErrorCode::InvalidConfig, id + ": channel rate must be positive");
  }
  if (channels.size() == 2 && (!channel(Band::Ghz2_4) || !channel(Band::Ghz5))) {
    fail(ErrorCode::InvalidConfig, id + ": dual-channel AP needs one 2.4 GHz and one 5 GHz channel");
  }
}

AccessPoint dual_band_ap(std::string id, double mbps_per_channel) {
  AccessPoint ap;
  ap.id = std::move(id);
  ap.channels = {{Band::Ghz2_4, mbps_per_channel}, {Band::Ghz5, mbps_per_channel}};
  ap.ssid = "WIFI-KNUST";
  ap.location = "campus";
  return ap;
}

const AccessPoint* CampusNetwork::find_ap(std::string_view id) const {
  auto it = std::find_if(aps.begin(), aps.end(), [id](const AccessPoint& ap) { return ap.id == id; });
  return it == aps.end() ? nullptr : &*it;
}

void CampusNetwork::validate() const {
  if (!(wan_mbps > 0)) fail(ErrorCode::InvalidConfig, "wan_mbps must be positive");
  if (dhcp.lease_seconds <= 0) fail(ErrorCode::InvalidConfig, "lease_s must be positive");
  auto check_in_cidr = [&](const std::optional<Ipv4Address>& a) {
    if (a && !dhcp.cidr.contains(*a)) {
      fail(ErrorCode::InvalidConfig, "DHCP range bound " + a->str() + " outside " + dhcp.cidr.str());
    }
  };
  check_in_cidr(dhcp.range_first);
  check_in_cidr(dhcp.range_last);
  if (dhcp.range_first && dhcp.range_last && *dhcp.range_last < *dhcp.range_first) {
    fail(ErrorCode::InvalidConfig, "DHCP range is empty");
  }
  if (v6_prefix && (!v6_prefix->is_v6() || v6_prefix->prefix_len != 64)) {
    fail(ErrorCode::InvalidConfig, "v6_prefix must be an IPv6 /64");
  }
  std::set<std::string> ids;
  for (const auto& ap : aps) {
    ap.validate();
    if (!ids.insert(ap.id).second) fail(ErrorCode::InvalidConfig, "duplicate AP id " + ap.id);
  }
  for (const auto& ap : aps) {
    if (ap.kind != ApKind::Lightweight) continue;
    if (const auto* parent = find_ap(*ap.parent); parent && parent->kind != ApKind::Autonomous) {
      fail(ErrorCode::InvalidConfig, ap.id + ": parent " + parent->id + " is not autonomous");
    }
  }
}

CampusNetwork default_campus() {
  CampusNetwork net;
  net.wan_mbps = 144.0;
  net.dhcp.cidr = Ipv4Cidr::parse("10.9.0.0/16");
  net.dhcp.gateway = Ipv4Address::parse("10.9.0.5");
  net.dhcp.dns_suffix = "knust.edu.gh";
  net.dhcp.lease_seconds = 3600;
  net.aps.push_back(dual_band_ap("ap-1"));
  return net;
}

// ---------------------------------------------------------------------------
// DHCP

DhcpServer::DhcpServer(const CampusNetwork& network)
    : config_(network.dhcp), v6_prefix_(network.v6_prefix) {
  first_ = (config_.range_first ? *config_.range_first : config_.cidr.first_host()).value();
  last_ = (config_.range_last ? *config_.range_last : config_.cidr.last_host()).value();
}

bool DhcpServer::in_pool(std::uint32_t address) const {
  return address >= first_ && address <= last_ && address != config_.gateway.value();
}

std::size_t DhcpServer::pool_size() const {
  if (last_ < first_) return 0;
  std::size_t n = static_cast<std::size_t>(last_) - first_ + 1;
  auto gw = config_.gateway.value();
  if (gw >= first_ && gw <= last_) --n;
  return n;
}

IpAssignment DhcpServer::assign(const ClientDevice& device, Timestamp now) {
  auto fill = [&](std::uint32_t address) {
    IpAssignment a;
    a.v4 = Ipv4Address(address);
    if (v6_prefix_ && device.ip_support == IpSupport::DualStack) {
      a.v6 = slaac_address(*v6_prefix_, device.mac);
    }
    a.gateway = config_.gateway;
    a.dns_suffix = config_.dns_suffix;
    a.lease_start = now;
    a.lease_seconds = config_.lease_seconds;
    return a;
  };

  // The address stays bound to the MAC until another client reclaims it.
  if (auto it = by_mac_.find(device.mac); it != by_mac_.end()) {
    auto& lease = by_address_.at(it->second);
    lease.assignment = fill(it->second);
    return lease.assignment;
  }

  for (std::uint64_t candidate = first_; candidate <= last_; ++candidate) {
    auto address = static_cast<std::uint32_t>(candidate);
    if (!in_pool(address)) continue;
    auto it = by_address_.find(address);
    if (it != by_address_.end()) {
      if (now < it->second.assignment.expires_at()) continue;
      by_mac_.erase(it->second.mac);
      by_address_.erase(it);
    }
    Lease lease{device.mac, fill(address)};
    by_address_.emplace(address, lease);
    by_mac_.emplace(device.mac, address);
    return lease.assignment;
  }
  fail(ErrorCode::PoolExhausted, "no free address in " + config_.cidr.str());
}

void DhcpServer::release(const MacAddress& mac) {
  if (auto it = by_mac_.find(mac); it != by_mac_.end()) {
    by_address_.erase(it->second);
    by_mac_.erase(it);
  }
}

std::optional<IpAssignment> DhcpServer::lease_for(const MacAddress& mac, Timestamp now) const {
  auto it = by_mac_.find(mac);
  if (it == by_mac_.end()) return std::nullopt;
  const auto& a = by_address_.at(it->second).assignment;
  if (now >= a.expires_at()) return std::nullopt;
  return a;
}

std::size_t DhcpServer::active_leases(Timestamp now) const {
  return static_cast<std::size_t>(std::count_if(by_address_.begin(), by_address_.end(), [now](const auto& kv) {
    return now < kv.second.assignment.expires_at();
  }));
}

IpAssignment dhcp_assign(DhcpServer& server, const ClientDevice& device, Timestamp now) {
  return server.assign(device, now);
}

// ---------------------------------------------------------------------------
// SLAAC

std::array<std::uint8_t, 8> eui64_interface_id(const MacAddress& mac) {
  const auto& m = mac.bytes();
  return {static_cast<std::uint8_t>(m[0] ^ 0x02), m[1], m[2], 0xFF, 0xFE, m[3], m[4], m[5]};
}

Ipv6Address slaac_address(const IpPrefix& v6_prefix, const MacAddress& mac) {
  if (!v6_prefix.is_v6() || v6_prefix.prefix_len != 64) {
    fail(ErrorCode::InvalidConfig, "SLAAC needs an IPv6 /64 prefix, got " + v6_prefix.str());
  }
  auto bytes = std::get<Ipv6Address>(v6_prefix.network).bytes();
  auto iid = eui64_interface_id(mac);
  std::copy(iid.begin(), iid.end(), bytes.begin() + 8);
  return Ipv6Address(bytes);
}

Ipv6Address slaac_assign(const ClientDevice& device, const IpPrefix& v6_prefix) {
  if (device.ip_support != IpSupport::DualStack) {
    fail(ErrorCode::UnsupportedDevice, device.device_id() + " is IPv4-only");
  }
  return slaac_address(v6_prefix, device.mac);
}

std::optional<MacAddress> mac_from_slaac(const Ipv6Address& address) {
  const auto& b = address.bytes();
  if (b[11] != 0xFF || b[12] != 0xFE) return std::nullopt;
  return MacAddress({static_cast<std::uint8_t>(b[8] ^ 0x02), b[9], b[10], b[13], b[14], b[15]});
}

// ---------------------------------------------------------------------------
// Association

Association associate(const ClientDevice& device, const AccessPoint& ap) {
  auto can_use = [&](Band band) {
    return ap.channel(band) && std::any_of(device.wifi_tech.begin(), device.wifi_tech.end(),
                                           [band](WifiTech t) { return supports_band(t, band); });
  };
  for (Band band : {Band::Ghz5, Band::Ghz2_4}) {
    if (can_use(band)) return Association{ap.id, band, ap.channel(band)->raw_mbps};
  }
  fail(ErrorCode::IncompatibleTech, device.device_id() + " shares no band with " + ap.id);
}

double device_phy_rate(const ClientDevice& device, const Channel& channel) {
  double best = 0;
  for (WifiTech tech : device.wifi_tech) {
    if (!supports_band(tech, channel.band)) continue;
    double cap = std::numeric_limits<double>::infinity();
    if (tech == WifiTech::B) cap = 11.0;
    if (tech == WifiTech::G || tech == WifiTech::A) cap = 54.0;
    best = std::max(best, std::min(cap, channel.raw_mbps));
  }
  return best;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const AccessPoint& ap) {
  json channels = json::array();
  for (const auto& c : ap.channels) {
    channels.push_back({{"band", to_string(c.band)}, {"mbps", c.raw_mbps}});
  }
  j = {{"id", ap.id},       {"kind", to_string(ap.kind)},         {"tier", ap.tier},
       {"channels", channels}, {"ssid", ap.ssid}, {"security", to_string(ap.security)},
       {"location", ap.location}};
  if (ap.parent) j["parent"] = *ap.parent;
}

void from_json(const json& j, AccessPoint& ap) {
  ap.id = j.at("id").get<std::string>();
  ap.kind = parse_ap_kind(j.value("kind", "Autonomous"));
  ap.tier = j.value("tier", 1);
  if (j.contains("parent")) ap.parent = j.at("parent").get<std::string>();
  ap.channels.clear();
  for (const auto& c : j.at("channels")) {
    ap.channels.push_back({parse_band(c.at("band").get<std::string>()), c.at("mbps").get<double>()});
  }
  ap.ssid = j.value("ssid", "");
  ap.security = parse_security_mode(j.value("security", "Open"));
  ap.location = j.value("location", "");
}

void to_json(json& j, const CampusNetwork& network) {
  json dhcp = {{"cidr", network.dhcp.cidr.str()},
               {"gateway", network.dhcp.gateway.str()},
               {"dns_suffix", network.dhcp.dns_suffix},
               {"lease_s", network.dhcp.lease_seconds}};
  if (network.dhcp.range_first) dhcp["range_first"] = network.dhcp.range_first->str();
  if (network.dhcp.range_last) dhcp["range_last"] = network.dhcp.range_last->str();
  j = {{"wan_mbps", network.wan_mbps},
       {"dhcp", dhcp},
       {"host_isolation", network.host_isolation},
       {"aps", network.aps}};
  j["v6_prefix"] = network.v6_prefix ? json(network.v6_prefix->str()) : json(nullptr);
}

void from_json(const json& j, CampusNetwork& network) {
  network.wan_mbps = j.at("wan_mbps").get<double>();
  const auto& dhcp = j.at("dhcp");
  network.dhcp.cidr = Ipv4Cidr::parse(dhcp.at("cidr").get<std::string>());
  network.dhcp.gateway = Ipv4Address::parse(dhcp.at("gateway").get<std::string>());
  network.dhcp.dns_suffix = dhcp.value("dns_suffix", "");
  network.dhcp.lease_seconds = dhcp.value("lease_s", Seconds{3600});
  if (dhcp.contains("range_first")) {
    network.dhcp.range_first = Ipv4Address::parse(dhcp.at("range_first").get<std::string>());
  }
  if (dhcp.contains("range_last")) {
    network.dhcp.range_last = Ipv4Address::parse(dhcp.at("range_last").get<std::string>());
  }
  network.v6_prefix.reset();
  if (j.contains("v6_prefix") && !j.at("v6_prefix").is_null()) {
    network.v6_prefix = IpPrefix::parse(j.at("v6_prefix").get<std::string>());
  }
  network.host_isolation = j.value("host_isolation", false);
  network.aps = j.at("aps").get<std::vector<AccessPoint>>();
}

void to_json(json& j, const ClientDevice& d) {
  json techs = json::array();
  for (auto t : d.wifi_tech) techs.push_back(to_string(t));
  json drivers = json::array();
  for (const auto& drv : d.drivers) drivers.push_back({{"vendor", drv.vendor}, {"version", drv.version}});
  j = {{"name", d.name},
       {"model", d.model},
       {"serial_imei", d.serial_imei},
       {"mac", d.mac.str()},
       {"manufacturer", d.manufacturer},
       {"manufacture_date", format_date(d.manufacture_date)},
       {"os", {{"name", d.os.name}, {"version", d.os.version}, {"date", format_date(d.os.date)}}},
       {"ip_support", d.ip_support == IpSupport::DualStack ? "DualStack" : "V4Only"},
       {"wifi_tech", techs},
       {"antivirus",
        {{"product", d.antivirus.product},
         {"version", d.antivirus.version},
         {"definitions_date", format_date(d.antivirus.definitions_date)}}},
       {"drivers", drivers}};
}

void from_json(const json& j, ClientDevice& d) {
  d.name = j.value("name", "");
  d.model = j.value("model", "");
  d.serial_imei = j.value("serial_imei", "");
  d.mac = MacAddress::parse(j.at("mac").get<std::string>());
  d.manufacturer = j.value("manufacturer", "");
  d.manufacture_date = parse_date(j.value("manufacture_date", "1970-01-01"));
  const auto& os = j.at("os");
  d.os = {os.value("name", ""), os.value("version", ""), parse_date(os.value("date", "1970-01-01"))};
  auto support = j.value("ip_support", "V4Only");
  if (support != "V4Only" && support != "DualStack") {
    fail(ErrorCode::ParseError, "unknown ip_support '" + support + "'");
  }
  d.ip_support = support == "DualStack" ? IpSupport::DualStack : IpSupport::V4Only;
  d.wifi_tech.clear();
  for (const auto& t : j.at("wifi_tech")) d.wifi_tech.insert(parse_wifi_tech(t.get<std::string>()));
  if (d.wifi_tech.empty()) fail(ErrorCode::InvalidConfig, "wifi_tech must not be empty");
  const auto& av = j.at("antivirus");
  d.antivirus = {av.value("product", ""), av.value("version", ""),
                 parse_date(av.value("definitions_date", "1970-01-01"))};
  d.drivers.clear();
  for (const auto& drv : j.value("drivers", json::array())) {
    d.drivers.push_back({drv.value("vendor", ""), drv.value("version", "")});
  }
}

CampusNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open " + path);
  try {
    auto network = json::parse(in).get<CampusNetwork>();
    network.validate();
    return network;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path + ": " + e.what());
  }
}

}  // namespace byod
