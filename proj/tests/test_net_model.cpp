#include <gtest/gtest.h>

#include <cstdio>
#include <random>
#include <set>

#include "byod/net_model.hpp"

using namespace byod;

namespace {

ClientDevice device(const std::string& mac, std::set<WifiTech> tech = {WifiTech::N},
                    IpSupport ip = IpSupport::DualStack) {
  ClientDevice d;
  d.name = "dev";
  d.mac = MacAddress::parse(mac);
  d.wifi_tech = std::move(tech);
  d.ip_support = ip;
  return d;
}

// Expansion written out byte by byte: prefix, then MAC[0] with the U/L bit
// flipped, MAC[1..2], ff, fe, MAC[3..5].
Ipv6Address eui64_oracle(const std::string& prefix64, const MacAddress& mac) {
  auto p = Ipv6Address::parse(prefix64).bytes();
  const auto& m = mac.bytes();
  Ipv6Address::Bytes b{};
  for (int i = 0; i < 8; ++i) b[i] = p[i];
  b[8] = static_cast<std::uint8_t>(m[0] ^ 0x02);
  b[9] = m[1];
  b[10] = m[2];
  b[11] = 0xff;
  b[12] = 0xfe;
  b[13] = m[3];
  b[14] = m[4];
  b[15] = m[5];
  return Ipv6Address(b);
}

}  // namespace

TEST(Dhcp, CopiesGatewayAndSuffix) {
  auto net = default_campus();
  DhcpServer dhcp(net);
  auto a = dhcp_assign(dhcp, device("00:1b:44:11:3a:b7"), 0);
  EXPECT_EQ(a.gateway.str(), "10.9.0.5");
  EXPECT_EQ(a.dns_suffix, "knust.edu.gh");
  EXPECT_TRUE(net.dhcp.cidr.contains(a.v4));
  EXPECT_NE(a.v4, a.gateway);
  EXPECT_EQ(a.lease_seconds, 3600);
}

TEST(Dhcp, RenewalInsideLeaseKeepsAddress) {
  DhcpServer dhcp(default_campus());
  auto d = device("00:1b:44:11:3a:b7");
  auto first = dhcp.assign(d, 100);
  auto again = dhcp.assign(d, 200);
  EXPECT_EQ(first.v4, again.v4);
  EXPECT_EQ(again.lease_start, 200);
}

TEST(Dhcp, PoolOfTwoExhausts) {
  auto net = default_campus();
  net.dhcp.cidr = Ipv4Cidr::parse("10.9.0.0/30");  // hosts .1 and .2
  net.dhcp.gateway = Ipv4Address::parse("10.9.0.5");
  DhcpServer dhcp(net);
  EXPECT_EQ(dhcp.pool_size(), 2u);
  dhcp.assign(device("02:00:00:00:00:01"), 0);
  dhcp.assign(device("02:00:00:00:00:02"), 0);
  try {
    dhcp.assign(device("02:00:00:00:00:03"), 0);
    FAIL() << "expected PoolExhausted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PoolExhausted);
  }
  // Once a lease runs out its address goes back into the pool.
  EXPECT_NO_THROW(dhcp.assign(device("02:00:00:00:00:03"), 3600));
}

TEST(Dhcp, PoolSkipsGateway) {
  auto net = default_campus();
  net.dhcp.cidr = Ipv4Cidr::parse("10.9.0.0/29");
  DhcpServer dhcp(net);
  EXPECT_EQ(dhcp.pool_size(), 5u);  // .1-.6 minus .5
  for (int i = 1; i <= 5; ++i) {
    char mac[32];
    std::snprintf(mac, sizeof mac, "02:00:00:00:00:%02x", i);
    EXPECT_NE(dhcp.assign(device(mac), 0).v4.str(), "10.9.0.5");
  }
}

// No two simultaneously active leases ever share an address.
TEST(Dhcp, ActiveLeasesAreDistinctUnderRandomTraffic) {
  auto net = default_campus();
  net.dhcp.cidr = Ipv4Cidr::parse("10.9.0.0/27");
  net.dhcp.lease_seconds = 50;
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    DhcpServer dhcp(net);
    std::map<MacAddress, IpAssignment> held;
    Timestamp now = 0;
    for (int step = 0; step < 400; ++step) {
      now += static_cast<Timestamp>(rng() % 5);
      char mac[32];
      std::snprintf(mac, sizeof mac, "02:00:00:00:00:%02x", static_cast<unsigned>(rng() % 40));
      auto d = device(mac);
      if (rng() % 4 == 0) {
        dhcp.release(d.mac);
        held.erase(d.mac);
        continue;
      }
      try {
        held[d.mac] = dhcp.assign(d, now);
      } catch (const Error& e) {
        ASSERT_EQ(e.code(), ErrorCode::PoolExhausted);
      }
      std::set<Ipv4Address> seen;
      for (const auto& [m, a] : held) {
        if (now >= a.expires_at()) continue;
        ASSERT_TRUE(seen.insert(a.v4).second) << "duplicate active lease " << a.v4.str();
        auto current = dhcp.lease_for(m, now);
        ASSERT_TRUE(current.has_value());
        ASSERT_EQ(current->v4, a.v4);
      }
      ASSERT_EQ(dhcp.active_leases(now), seen.size());
    }
  }
}

TEST(Slaac, MatchesStandardExamples) {
  auto prefix = IpPrefix::parse("2001:db8::/64");
  EXPECT_EQ(slaac_assign(device("00:1B:44:11:3A:B7"), prefix).str(), "2001:db8::21b:44ff:fe11:3ab7");
  EXPECT_EQ(slaac_assign(device("02:00:00:00:00:01"), prefix).str(), "2001:db8::ff:fe00:1");
}

TEST(Slaac, AgreesWithByteOracle) {
  std::mt19937_64 rng(11);
  auto prefix = IpPrefix::parse("2001:db8:42:7::/64");
  for (int i = 0; i < 500; ++i) {
    MacAddress::Bytes b;
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    MacAddress mac(b);
    auto addr = slaac_address(prefix, mac);
    EXPECT_EQ(addr, eui64_oracle("2001:db8:42:7::", mac));
    EXPECT_EQ(addr, slaac_address(prefix, mac));  // deterministic
    auto back = mac_from_slaac(addr);
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, mac);
  }
}

TEST(Slaac, RejectsV4OnlyAndNon64) {
  try {
    slaac_assign(device("00:1b:44:11:3a:b7", {WifiTech::N}, IpSupport::V4Only), IpPrefix::parse("2001:db8::/64"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedDevice);
  }
  EXPECT_THROW(slaac_assign(device("00:1b:44:11:3a:b7"), IpPrefix::parse("2001:db8::/48")), Error);
  EXPECT_FALSE(mac_from_slaac(Ipv6Address::parse("2001:db8::1")).has_value());
}

TEST(Dhcp, DualStackLeaseCarriesSlaacAddress) {
  auto net = default_campus();
  net.v6_prefix = IpPrefix::parse("2001:db8::/64");
  DhcpServer dhcp(net);
  auto a = dhcp.assign(device("00:1b:44:11:3a:b7"), 0);
  ASSERT_TRUE(a.v6.has_value());
  EXPECT_EQ(a.v6->str(), "2001:db8::21b:44ff:fe11:3ab7");
  auto v4only = dhcp.assign(device("00:1b:44:11:3a:b8", {WifiTech::G}, IpSupport::V4Only), 0);
  EXPECT_FALSE(v4only.v6.has_value());
}

TEST(Associate, BandSelection) {
  auto dual = dual_band_ap("ap");
  EXPECT_EQ(associate(device("02:00:00:00:00:01", {WifiTech::N}), dual).band, Band::Ghz5);
  EXPECT_EQ(associate(device("02:00:00:00:00:01", {WifiTech::A}), dual).band, Band::Ghz5);
  EXPECT_EQ(associate(device("02:00:00:00:00:01", {WifiTech::B}), dual).band, Band::Ghz2_4);
  EXPECT_EQ(associate(device("02:00:00:00:00:01", {WifiTech::B, WifiTech::G}), dual).band, Band::Ghz2_4);

  AccessPoint single;
  single.id = "legacy";
  single.channels = {{Band::Ghz2_4, 54}};
  try {
    associate(device("02:00:00:00:00:01", {WifiTech::A}), single);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncompatibleTech);
  }
  EXPECT_EQ(associate(device("02:00:00:00:00:01", {WifiTech::N}), single).band, Band::Ghz2_4);
}

TEST(PhyRate, CappedByTechnology) {
  Channel c5{Band::Ghz5, 300};
  Channel c24{Band::Ghz2_4, 300};
  EXPECT_DOUBLE_EQ(device_phy_rate(device("02:00:00:00:00:01", {WifiTech::N}), c5), 300);
  EXPECT_DOUBLE_EQ(device_phy_rate(device("02:00:00:00:00:01", {WifiTech::A}), c5), 54);
  EXPECT_DOUBLE_EQ(device_phy_rate(device("02:00:00:00:00:01", {WifiTech::B}), c24), 11);
  EXPECT_DOUBLE_EQ(device_phy_rate(device("02:00:00:00:00:01", {WifiTech::B}), c5), 0);
}

TEST(Topology, Validation) {
  auto net = default_campus();
  EXPECT_NO_THROW(net.validate());
  auto dup = net;
  dup.aps.push_back(dual_band_ap("ap-1"));
  EXPECT_THROW(dup.validate(), Error);

  auto lap = dual_band_ap("lap-1");
  lap.kind = ApKind::Lightweight;
  lap.tier = 2;
  EXPECT_THROW(lap.validate(), Error);
  lap.parent = "ap-1";
  EXPECT_NO_THROW(lap.validate());

  auto two24 = dual_band_ap("x");
  two24.channels[1].band = Band::Ghz2_4;
  EXPECT_THROW(two24.validate(), Error);

  auto zero = dual_band_ap("z", 0);
  EXPECT_THROW(zero.validate(), Error);

  auto wan = net;
  wan.wan_mbps = 0;
  EXPECT_THROW(wan.validate(), Error);
}

TEST(Topology, JsonRoundTrip) {
  auto net = default_campus();
  net.v6_prefix = IpPrefix::parse("2001:db8::/64");
  net.host_isolation = true;
  auto lap = dual_band_ap("lap-1");
  lap.kind = ApKind::Lightweight;
  lap.tier = 2;
  lap.parent = "ap-1";
  lap.security = SecurityMode::WPA2;
  net.aps.push_back(lap);
  nlohmann::json j = net;
  EXPECT_EQ(j.at("dhcp").at("lease_s"), 3600);
  auto back = j.get<CampusNetwork>();
  EXPECT_EQ(back.aps, net.aps);
  EXPECT_EQ(back.v6_prefix, net.v6_prefix);
  EXPECT_EQ(back.host_isolation, true);
  EXPECT_EQ(back.dhcp.gateway, net.dhcp.gateway);
  EXPECT_EQ(nlohmann::json(back), j);
}
