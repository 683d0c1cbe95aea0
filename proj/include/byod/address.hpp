#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace byod {

class MacAddress {
 public:
  using Bytes = std::array<std::uint8_t, 6>;

  constexpr MacAddress() = default;
  constexpr explicit MacAddress(Bytes bytes) : bytes_(bytes) {}

  // Accepts "aa:bb:cc:dd:ee:ff" or "aa-bb-cc-dd-ee-ff", any case.
  static MacAddress parse(std::string_view text);

  const Bytes& bytes() const { return bytes_; }
  // Lower-case, colon separated.
  std::string str() const;

  auto operator<=>(const MacAddress&) const = default;

 private:
  Bytes bytes_{};
};

class Ipv4Address {
 public:
  constexpr Ipv4Address() = default;
  constexpr explicit Ipv4Address(std::uint32_t host_order) : value_(host_order) {}

  static Ipv4Address parse(std::string_view text);

  std::uint32_t value() const { return value_; }
  std::string str() const;

  auto operator<=>(const Ipv4Address&) const = default;

 private:
  std::uint32_t value_ = 0;
};

class Ipv6Address {
 public:
  using Bytes = std::array<std::uint8_t, 16>;

  constexpr Ipv6Address() = default;
  constexpr explicit Ipv6Address(Bytes bytes) : bytes_(bytes) {}

  static Ipv6Address parse(std::string_view text);

  const Bytes& bytes() const { return bytes_; }
  // RFC 5952 canonical text form.
  std::string str() const;

  auto operator<=>(const Ipv6Address&) const = default;

 private:
  Bytes bytes_{};
};

using IpAddress = std::variant<Ipv4Address, Ipv6Address>;

IpAddress parse_ip(std::string_view text);
std::string to_string(const IpAddress& address);

struct Ipv4Cidr {
  Ipv4Address network;
  int prefix_len = 32;

  static Ipv4Cidr parse(std::string_view text);

  std::uint32_t mask() const;
  bool contains(Ipv4Address address) const;
  Ipv4Address first_host() const;
  Ipv4Address last_host() const;
  std::string str() const;

  bool operator==(const Ipv4Cidr&) const = default;
};

// An address prefix of either family, e.g. "10.9.0.0/16" or "2001:db8::/64".
struct IpPrefix {
  IpAddress network;
  int prefix_len = 0;

  static IpPrefix parse(std::string_view text);

  bool contains(const IpAddress& address) const;
  bool is_v6() const { return std::holds_alternative<Ipv6Address>(network); }
  std::string str() const;

  bool operator==(const IpPrefix&) const = default;
};

}  // namespace byod
