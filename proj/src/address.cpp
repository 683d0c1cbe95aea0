#include "byod/address.hpp"

#include <arpa/inet.h>

#include <charconv>
#include <cstdio>
#include <cstring>

#include "byod/common.hpp"

namespace byod {
namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::pair<std::string_view, int> split_prefix(std::string_view text, int max_len) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    fail(ErrorCode::ParseError, "missing prefix length in '" + std::string(text) + "'");
  }
  int len = -1;
  auto tail = text.substr(slash + 1);
  auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), len);
  if (ec != std::errc{} || ptr != tail.data() + tail.size() || len < 0 || len > max_len) {
    fail(ErrorCode::ParseError, "bad prefix length in '" + std::string(text) + "'");
  }
  return {text.substr(0, slash), len};
}

bool prefix_match(const std::uint8_t* a, const std::uint8_t* b, int bits) {
  int full = bits / 8;
  if (std::memcmp(a, b, full) != 0) return false;
  int rest = bits % 8;
  if (rest == 0) return true;
  std::uint8_t mask = static_cast<std::uint8_t>(0xFF << (8 - rest));
  return (a[full] & mask) == (b[full] & mask);
}

}  // namespace

MacAddress MacAddress::parse(std::string_view text) {
  Bytes out{};
  if (text.size() != 17) fail(ErrorCode::ParseError, "bad MAC '" + std::string(text) + "'");
  for (std::size_t i = 0; i < 6; ++i) {
    int hi = hex_value(text[i * 3]);
    int lo = hex_value(text[i * 3 + 1]);
    if (hi < 0 || lo < 0 || (i < 5 && text[i * 3 + 2] != text[2]) || (text[2] != ':' && text[2] != '-')) {
      fail(ErrorCode::ParseError, "bad MAC '" + std::string(text) + "'");
    }
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return MacAddress(out);
}

std::string MacAddress::str() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", bytes_[0], bytes_[1], bytes_[2],
                bytes_[3], bytes_[4], bytes_[5]);
  return buf;
}

Ipv4Address Ipv4Address::parse(std::string_view text) {
  std::string buf(text);
  in_addr addr{};
  if (inet_pton(AF_INET, buf.c_str(), &addr) != 1) {
    fail(ErrorCode::ParseError, "bad IPv4 address '" + buf + "'");
  }
  return Ipv4Address(ntohl(addr.s_addr));
}

std::string Ipv4Address::str() const {
  in_addr addr{htonl(value_)};
  char buf[INET_ADDRSTRLEN];
  inet_ntop(AF_INET, &addr, buf, sizeof buf);
  return buf;
}

Ipv6Address Ipv6Address::parse(std::string_view text) {
  std::string buf(text);
  Bytes out{};
  if (inet_pton(AF_INET6, buf.c_str(), out.data()) != 1) {
    fail(ErrorCode::ParseError, "bad IPv6 address '" + buf + "'");
  }
  return Ipv6Address(out);
}

std::string Ipv6Address::str() const {
  char buf[INET6_ADDRSTRLEN];
  inet_ntop(AF_INET6, bytes_.data(), buf, sizeof buf);
  return buf;
}

IpAddress parse_ip(std::string_view text) {
  if (text.find(':') != std::string_view::npos) return Ipv6Address::parse(text);
  return Ipv4Address::parse(text);
}

std::string to_string(const IpAddress& address) {
  return std::visit([](const auto& a) { return a.str(); }, address);
}

Ipv4Cidr Ipv4Cidr::parse(std::string_view text) {
  auto [addr, len] = split_prefix(text, 32);
  Ipv4Cidr cidr{Ipv4Address::parse(addr), len};
  cidr.network = Ipv4Address(cidr.network.value() & cidr.mask());
  return cidr;
}

std::uint32_t Ipv4Cidr::mask() const {
  return prefix_len == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix_len);
}

bool Ipv4Cidr::contains(Ipv4Address address) const {
  return (address.value() & mask()) == (network.value() & mask());
}

Ipv4Address Ipv4Cidr::first_host() const {
  if (prefix_len >= 31) return network;
  return Ipv4Address(network.value() + 1);
}

Ipv4Address Ipv4Cidr::last_host() const {
  std::uint32_t broadcast = network.value() | ~mask();
  if (prefix_len >= 31) return Ipv4Address(broadcast);
  return Ipv4Address(broadcast - 1);
}

std::string Ipv4Cidr::str() const { return network.str() + "/" + std::to_string(prefix_len); }

IpPrefix IpPrefix::parse(std::string_view text) {
  bool v6 = text.find(':') != std::string_view::npos;
  auto [addr, len] = split_prefix(text, v6 ? 128 : 32);
  return IpPrefix{parse_ip(addr), len};
}

bool IpPrefix::contains(const IpAddress& address) const {
  if (address.index() != network.index()) return false;
  if (const auto* v4 = std::get_if<Ipv4Address>(&address)) {
    return Ipv4Cidr{std::get<Ipv4Address>(network), prefix_len}.contains(*v4);
  }
  return prefix_match(std::get<Ipv6Address>(address).bytes().data(),
                      std::get<Ipv6Address>(network).bytes().data(), prefix_len);
}

std::string IpPrefix::str() const { return to_string(network) + "/" + std::to_string(prefix_len); }

}  // namespace byod
