#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "byod/address.hpp"

namespace byod::dns {

struct Question {
  std::uint16_t id = 0;
  std::string name;  // dotted, no trailing dot
  std::uint16_t qtype = 1;
  std::uint16_t qclass = 1;
};

// Standard single-question query (RD set).
std::vector<std::uint8_t> build_query(std::uint16_t id, const std::string& name, std::uint16_t qtype = 1);

// nullopt for anything that is not a well-formed single-question query.
std::optional<Question> parse_query(std::span<const std::uint8_t> packet);

// Answer every name with one A record for the portal, TTL 0, so the client
// re-resolves once it has logged in.
std::vector<std::uint8_t> hijack_response(const Question& question, Ipv4Address portal);

struct ARecord {
  std::string name;
  std::uint32_t ttl = 0;
  Ipv4Address address;
};

struct Response {
  std::uint16_t id = 0;
  std::uint16_t flags = 0;
  std::string question;
  std::vector<ARecord> answers;
};

std::optional<Response> parse_response(std::span<const std::uint8_t> packet);

}  // namespace byod::dns
