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

#include "escape/trace.h"

#include <iterator>
#include <ostream>

#include <fmt/format.h>

namespace escape {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string_view to_string(rec::Direction d) {
  switch (d) {
    case rec::Direction::kSend: return "send";
    case rec::Direction::kReceive: return "recv";
    case rec::Direction::kDrop: return "drop";
  }
  return "?";
}

std::string_view to_string(rec::DropReason r) {
  switch (r) {
    case rec::DropReason::kNone: return "none";
    case rec::DropReason::kLoss: return "loss";
    case rec::DropReason::kCrashed: return "crashed";
  }
  return "?";
}

void put_config(fmt::memory_buffer& buf, std::string_view key, const Configuration& c) {
  fmt::format_to(std::back_inserter(buf), ",\"{}\":[{},{},{}]", key, c.priority,
                 c.timerPeriod.count(), c.confClock);
}

// JSON string escaping for the free-text record kinds.
std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          out += fmt::format("\\u{:04x}", static_cast<unsigned>(c));
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

}  // namespace

rec::MessageSummary summarize(const Message& m) {
  rec::MessageSummary s;
  s.kind = kind_of(m);
  std::visit(Overloaded{
                 [&](const AppendEntriesArgs& a) {
                   s.term = a.term;
                   s.index = a.prevLogIndex;
                   s.entries = static_cast<std::uint32_t>(a.entries.size());
                   s.config = a.newConfig;
                 },
                 [&](const AppendEntriesReply& r) {
                   s.term = r.term;
                   s.flag = r.success;
                   s.index = r.status.logIndex;
                   if (r.answeredClock != 0) s.clock = r.answeredClock;
                 },
                 [&](const RequestVoteArgs& a) {
                   s.term = a.term;
                   s.index = a.lastLogIndex;
                   s.clock = a.confClock;
                 },
                 [&](const RequestVoteReply& r) {
                   s.term = r.term;
                   s.flag = r.voteGranted;
                 },
             },
             m);
  return s;
}

std::uint64_t payload_digest(const std::vector<std::uint8_t>& payload) {
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : payload) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_record(const TraceRecord& r) {
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "{{\"t\":{},\"s\":{}", r.time.time_since_epoch().count(), r.server.value);
  std::visit(
      Overloaded{
          [&](const rec::Init& e) {
            fmt::format_to(out, ",\"k\":\"init\",\"term\":{}", e.term.value);
            put_config(buf, "config", e.config);
          },
          [&](const rec::RoleChange& e) {
            fmt::format_to(out, ",\"k\":\"role\",\"from\":\"{}\",\"to\":\"{}\",\"term\":{}",
                           to_string(e.from), to_string(e.to), e.term.value);
          },
          [&](const rec::TermChange& e) {
            fmt::format_to(out, ",\"k\":\"term\",\"from\":{},\"to\":{}", e.from.value,
                           e.to.value);
          },
          [&](const rec::VoteCast& e) {
            fmt::format_to(out, ",\"k\":\"vote\",\"term\":{},\"candidate\":{}", e.term.value,
                           e.candidate.value);
          },
          [&](const rec::ConfigChange& e) {
            fmt::format_to(out, ",\"k\":\"config\"");
            put_config(buf, "from", e.from);
            put_config(buf, "to", e.to);
          },
          [&](const rec::CampaignStart& e) {
            fmt::format_to(out,
                           ",\"k\":\"campaign\",\"from\":{},\"to\":{},\"priority\":{},"
                           "\"clock\":{}",
                           e.from.value, e.to.value, e.priority, e.confClock);
          },
          [&](const rec::Append& e) {
            fmt::format_to(out, ",\"k\":\"append\",\"index\":{},\"term\":{},\"digest\":\"{:016x}\"",
                           e.index, e.term.value, e.digest);
          },
          [&](const rec::Truncate& e) {
            fmt::format_to(out, ",\"k\":\"truncate\",\"from\":{}", e.fromIndex);
          },
          [&](const rec::Commit& e) {
            fmt::format_to(out, ",\"k\":\"commit\",\"from\":{},\"to\":{}", e.from, e.to);
          },
          [&](const rec::MessageEvent& e) {
            fmt::format_to(out, ",\"k\":\"{}\",\"peer\":{},\"msg\":\"{}\",\"term\":{}",
                           to_string(e.dir), e.peer.value, to_string(e.msg.kind),
                           e.msg.term.value);
            if (e.dir == rec::Direction::kDrop) {
              fmt::format_to(out, ",\"reason\":\"{}\"", to_string(e.reason));
            }
            switch (e.msg.kind) {
              case MessageKind::kAppendEntries:
                fmt::format_to(out, ",\"prev\":{},\"entries\":{}", e.msg.index, e.msg.entries);
                if (e.msg.config) put_config(buf, "config", *e.msg.config);
                break;
              case MessageKind::kAppendEntriesReply:
                fmt::format_to(out, ",\"success\":{},\"index\":{}", e.msg.flag, e.msg.index);
                if (e.msg.clock) fmt::format_to(out, ",\"clock\":{}", *e.msg.clock);
                break;
              case MessageKind::kRequestVote:
                fmt::format_to(out, ",\"last\":{}", e.msg.index);
                if (e.msg.clock) fmt::format_to(out, ",\"clock\":{}", *e.msg.clock);
                break;
              case MessageKind::kRequestVoteReply:
                fmt::format_to(out, ",\"granted\":{}", e.msg.flag);
                break;
            }
          },
          [&](const rec::Crash&) { fmt::format_to(out, ",\"k\":\"crash\""); },
          [&](const rec::Recover&) { fmt::format_to(out, ",\"k\":\"recover\""); },
          [&](const rec::Warning& e) {
            fmt::format_to(out, ",\"k\":\"warning\",\"text\":{}", quoted(e.text));
          },
          [&](const rec::Marker& e) {
            fmt::format_to(out, ",\"k\":\"marker\",\"text\":{}", quoted(e.text));
          },
      },
      r.body);
  buf.push_back('}');
  return fmt::to_string(buf);
}

void Trace::write_jsonl(std::ostream& out) const {
  for (const auto& r : records_) out << format_record(r) << '\n';
}

std::string Trace::to_jsonl() const {
  std::string s;
  for (const auto& r : records_) {
    s += format_record(r);
    s += '\n';
  }
  return s;
}

}  // namespace escape
