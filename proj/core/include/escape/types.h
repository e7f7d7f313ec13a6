// Copyright 2026 The Escape Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace escape {

// Simulated time. Integer microseconds keep event ordering exact.
struct SimClock {
  using rep = std::int64_t;
  using period = std::micro;
  using duration = std::chrono::duration<rep, period>;
  using time_point = std::chrono::time_point<SimClock>;
  static constexpr bool is_steady = true;
};

using Duration = SimClock::duration;
using TimePoint = SimClock::time_point;

constexpr Duration millis(std::int64_t ms) { return std::chrono::milliseconds(ms); }
constexpr double to_ms(Duration d) { return static_cast<double>(d.count()) / 1000.0; }
constexpr double to_ms(TimePoint t) { return to_ms(t.time_since_epoch()); }

using Rng = std::mt19937_64;

template <typename Tag, typename Rep>
struct StrongInt {
  using rep_type = Rep;
  Rep value{};

  constexpr StrongInt() = default;
  constexpr explicit StrongInt(Rep v) : value(v) {}
  constexpr auto operator<=>(const StrongInt&) const = default;
};

/// Identifier of a server in [1, n]. Zero is never a valid server.
using ServerId = StrongInt<struct ServerIdTag, std::uint32_t>;

/// Logical time. Never decreases on a single server.
using Term = StrongInt<struct TermTag, std::uint64_t>;

constexpr Term operator+(Term t, std::uint64_t delta) { return Term{t.value + delta}; }

/// A prioritized configuration: priority, the election timer period it
/// implies, and the configuration clock of the rearrangement that issued it.
struct Configuration {
  std::uint32_t priority = 1;
  Duration timerPeriod{};
  std::uint64_t confClock = 0;

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

enum class Variant : std::uint8_t { kRaft, kZRaft, kEscape };

std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view text);

enum class ErrorCode : std::uint8_t {
  kInvalidPriority,
  kIllegalTransition,
  kMissingAssignment,
  kInvalidParams,
  kInvalidScenario,
  kParse,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct ProtocolParams {
  Variant variant = Variant::kEscape;
  std::uint32_t n = 5;
  Duration baseTime = millis(1500);
  // Spacing constant between consecutive priorities' timeouts.
  Duration spacing = millis(500);
  Duration raftTimeoutLo = millis(1500);
  Duration raftTimeoutHi = millis(3000);
  Duration heartbeatInterval = millis(500);
  std::uint32_t entriesPerHeartbeat = 1;
  // Escape with every priority forced to 1 and the configuration clock
  // machinery (rearrangement broadcast and the stale-clock vote rule) off.
  bool degenerate = false;

  std::uint32_t quorum() const { return n / 2 + 1; }
  std::uint32_t max_faults() const { return (n - 1) / 2; }
  bool uses_priorities() const { return variant != Variant::kRaft; }
  bool ppf_enabled() const { return variant == Variant::kEscape && !degenerate; }
  bool clock_checks() const { return ppf_enabled(); }

  // Throws Error(kInvalidParams) when the parameter set is inconsistent
  // with the given worst-case one-way latency.
  void validate(Duration maxLatency) const;
};

}  // namespace escape

template <typename Tag, typename Rep>
struct std::hash<escape::StrongInt<Tag, Rep>> {
  std::size_t operator()(const escape::StrongInt<Tag, Rep>& v) const noexcept {
    return std::hash<Rep>{}(v.value);
  }
};
