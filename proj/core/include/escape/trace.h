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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "escape/messages.h"
#include "escape/server_state.h"
#include "escape/types.h"

namespace escape {

namespace rec {

struct Init {
  Term term;
  Configuration config;
};
struct RoleChange {
  Role from;
  Role to;
  Term term;
};
struct TermChange {
  Term from;
  Term to;
};
struct VoteCast {
  Term term;
  ServerId candidate;
};
struct ConfigChange {
  Configuration from;
  Configuration to;
};
struct CampaignStart {
  Term from;
  Term to;
  std::uint32_t priority;
  std::uint64_t confClock;
};
struct Append {
  std::uint64_t index;
  Term term;
  std::uint64_t digest;
};
struct Truncate {
  std::uint64_t fromIndex;
};
struct Commit {
  std::uint64_t from;
  std::uint64_t to;
};

enum class Direction : std::uint8_t { kSend, kReceive, kDrop };
enum class DropReason : std::uint8_t { kNone, kLoss, kCrashed };

// Fixed-size digest of a message. Log payloads are not copied.
struct MessageSummary {
  MessageKind kind{};
  Term term;
  bool flag = false;         // voteGranted / success
  std::uint64_t index = 0;   // prevLogIndex, lastLogIndex or status.logIndex
  std::uint32_t entries = 0;
  std::optional<Configuration> config;
  std::optional<std::uint64_t> clock;  // RequestVote confClock or answered clock
};

struct MessageEvent {
  Direction dir;
  DropReason reason;
  ServerId peer;
  MessageSummary msg;
};
struct Crash {};
struct Recover {};
struct Warning {
  std::string text;
};
struct Marker {
  std::string text;
};

}  // namespace rec

using TraceBody =
    std::variant<rec::Init, rec::RoleChange, rec::TermChange, rec::VoteCast, rec::ConfigChange,
                 rec::CampaignStart, rec::Append, rec::Truncate, rec::Commit, rec::MessageEvent,
                 rec::Crash, rec::Recover, rec::Warning, rec::Marker>;

struct TraceRecord {
  TimePoint time;
  ServerId server;  // zero for cluster-wide markers
  TraceBody body;
};

rec::MessageSummary summarize(const Message& m);
std::uint64_t payload_digest(const std::vector<std::uint8_t>& payload);

class Trace {
 public:
  void append(TimePoint t, ServerId s, TraceBody body) {
    records_.push_back(TraceRecord{t, s, std::move(body)});
  }
  const std::vector<TraceRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  void clear() { records_.clear(); }

  /// One JSON object per line. Times are integer microseconds.
  void write_jsonl(std::ostream& out) const;
  std::string to_jsonl() const;

 private:
  std::vector<TraceRecord> records_;
};

std::string format_record(const TraceRecord& r);

}  // namespace escape
