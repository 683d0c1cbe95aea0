#include "byod/common.hpp"

#include <cstdio>

namespace byod {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PoolExhausted: return "PoolExhausted";
    case ErrorCode::UnsupportedDevice: return "UnsupportedDevice";
    case ErrorCode::IncompatibleTech: return "IncompatibleTech";
    case ErrorCode::ZeroClients: return "ZeroClients";
    case ErrorCode::DeviceLimitReached: return "DeviceLimitReached";
    case ErrorCode::MacAlreadyRegistered: return "MacAlreadyRegistered";
    case ErrorCode::UnknownOwner: return "UnknownOwner";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NotOwner: return "NotOwner";
    case ErrorCode::NotCleared: return "NotCleared";
    case ErrorCode::NoDefaultRule: return "NoDefaultRule";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

Date parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  std::string buf(text);
  if (buf.size() != 10 || std::sscanf(buf.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    fail(ErrorCode::ParseError, "bad date '" + buf + "'");
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) fail(ErrorCode::ParseError, "bad date '" + buf + "'");
  return std::chrono::sys_days{ymd};
}

std::string format_date(Date date) {
  std::chrono::year_month_day ymd{date};
  char out[16];
  std::snprintf(out, sizeof out, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return out;
}

Date date_of(Timestamp t) {
  return std::chrono::floor<std::chrono::days>(std::chrono::sys_seconds{std::chrono::seconds{t}});
}

Timestamp start_of(Date date) {
  return std::chrono::duration_cast<std::chrono::seconds>(date.time_since_epoch()).count();
}

}  // namespace byod
