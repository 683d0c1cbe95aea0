#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace byod {

// Seconds on the simulated clock, Unix-epoch based. Nothing in the library
// reads the wall clock; every operation takes the current time explicitly.
using Timestamp = std::int64_t;
using Seconds = std::int64_t;

inline constexpr Seconds kSecondsPerDay = 86400;

enum class ErrorCode {
  PoolExhausted,
  UnsupportedDevice,
  IncompatibleTech,
  ZeroClients,
  DeviceLimitReached,
  MacAlreadyRegistered,
  UnknownOwner,
  NotFound,
  NotOwner,
  NotCleared,
  NoDefaultRule,
  StorageFailure,
  InvalidScenario,
  InvalidConfig,
  ParseError,
};

std::string_view to_string(ErrorCode code);

// Every domain error raised by the library. Verdict-like outcomes
// (certificate checks, login results, ACL decisions) are returned, not thrown.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

// Calendar dates ("YYYY-MM-DD") used by device metadata.
using Date = std::chrono::sys_days;

Date parse_date(std::string_view text);
std::string format_date(Date date);
Date date_of(Timestamp t);
Timestamp start_of(Date date);

}  // namespace byod
