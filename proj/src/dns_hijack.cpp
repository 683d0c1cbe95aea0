#include "byod/dns_hijack.hpp"

#include "byod/common.hpp"

namespace byod::dns {

namespace {

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v >> 16));
  put16(out, static_cast<std::uint16_t>(v & 0xFFFF));
}

std::uint16_t get16(std::span<const std::uint8_t> p, std::size_t at) {
  return static_cast<std::uint16_t>((p[at] << 8) | p[at + 1]);
}

void put_name(std::vector<std::uint8_t>& out, const std::string& name) {
  std::size_t start = 0;
  while (start < name.size()) {
    auto dot = name.find('.', start);
    if (dot == std::string::npos) dot = name.size();
    auto len = dot - start;
    if (len == 0 || len > 63) fail(ErrorCode::ParseError, "bad DNS label in '" + name + "'");
    out.push_back(static_cast<std::uint8_t>(len));
    out.insert(out.end(), name.begin() + static_cast<long>(start), name.begin() + static_cast<long>(dot));
    start = dot + 1;
  }
  out.push_back(0);
}

// Reads a possibly compressed name; `at` is advanced past it in the
// original stream.
std::optional<std::string> read_name(std::span<const std::uint8_t> p, std::size_t& at) {
  std::string name;
  std::size_t pos = at;
  bool jumped = false;
  for (int hops = 0; hops < 32; ++hops) {
    if (pos >= p.size()) return std::nullopt;
    std::uint8_t len = p[pos];
    if ((len & 0xC0) == 0xC0) {
      if (pos + 1 >= p.size()) return std::nullopt;
      if (!jumped) at = pos + 2;
      jumped = true;
      pos = static_cast<std::size_t>(((len & 0x3F) << 8) | p[pos + 1]);
      continue;
    }
    if (len & 0xC0) return std::nullopt;
    if (len == 0) {
      if (!jumped) at = pos + 1;
      return name;
    }
    if (pos + 1 + len > p.size()) return std::nullopt;
    if (!name.empty()) name.push_back('.');
    name.append(reinterpret_cast<const char*>(p.data() + pos + 1), len);
    pos += 1 + len;
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::uint8_t> build_query(std::uint16_t id, const std::string& name, std::uint16_t qtype) {
  std::vector<std::uint8_t> out;
  put16(out, id);
  put16(out, 0x0100);
  put16(out, 1);
  put16(out, 0);
  put16(out, 0);
  put16(out, 0);
  put_name(out, name);
  put16(out, qtype);
  put16(out, 1);
  return out;
}

std::optional<Question> parse_query(std::span<const std::uint8_t> packet) {
  if (packet.size() < 12) return std::nullopt;
  auto flags = get16(packet, 2);
  if (flags & 0x8000) return std::nullopt;  // a response, not a query
  if (get16(packet, 4) != 1) return std::nullopt;
  std::size_t at = 12;
  auto name = read_name(packet, at);
  if (!name || at + 4 > packet.size()) return std::nullopt;
  return Question{get16(packet, 0), *name, get16(packet, at), get16(packet, at + 2)};
}

std::vector<std::uint8_t> hijack_response(const Question& q, Ipv4Address portal) {
  std::vector<std::uint8_t> out;
  put16(out, q.id);
  put16(out, 0x8580);  // QR, AA, RD, RA
  put16(out, 1);
  put16(out, 1);
  put16(out, 0);
  put16(out, 0);
  put_name(out, q.name);
  put16(out, q.qtype);
  put16(out, q.qclass);
  put16(out, 0xC00C);  // pointer to the question name
  put16(out, 1);
  put16(out, 1);
  put32(out, 0);
  put16(out, 4);
  put32(out, portal.value());
  return out;
}

std::optional<Response> parse_response(std::span<const std::uint8_t> p) {
  if (p.size() < 12) return std::nullopt;
  Response r;
  r.id = get16(p, 0);
  r.flags = get16(p, 2);
  if (!(r.flags & 0x8000)) return std::nullopt;
  auto qd = get16(p, 4);
  auto an = get16(p, 6);
  std::size_t at = 12;
  for (int i = 0; i < qd; ++i) {
    auto name = read_name(p, at);
    if (!name || at + 4 > p.size()) return std::nullopt;
    if (i == 0) r.question = *name;
    at += 4;
  }
  for (int i = 0; i < an; ++i) {
    auto name = read_name(p, at);
    if (!name || at + 10 > p.size()) return std::nullopt;
    auto type = get16(p, at);
    std::uint32_t ttl = (static_cast<std::uint32_t>(get16(p, at + 4)) << 16) | get16(p, at + 6);
    auto rdlen = get16(p, at + 8);
    at += 10;
    if (at + rdlen > p.size()) return std::nullopt;
    if (type == 1 && rdlen == 4) {
      std::uint32_t v = (static_cast<std::uint32_t>(p[at]) << 24) | (p[at + 1] << 16) | (p[at + 2] << 8) | p[at + 3];
      r.answers.push_back({*name, ttl, Ipv4Address{v}});
    }
    at += rdlen;
  }
  return r;
}

}  // namespace byod::dns
