#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracetrim/errors.hpp"

namespace tracetrim {

using Nanos = std::uint64_t;

enum class ActivityType : std::uint8_t { Begin, End, Send, Receive };

inline constexpr std::string_view to_string(ActivityType t) noexcept {
  switch (t) {
    case ActivityType::Begin: return "BEGIN";
    case ActivityType::End: return "END";
    case ActivityType::Send: return "SEND";
    case ActivityType::Receive: return "RECEIVE";
  }
  return "?";
}

inline std::optional<ActivityType> activity_type_from(std::string_view s) noexcept {
  if (s == "BEGIN") return ActivityType::Begin;
  if (s == "END") return ActivityType::End;
  if (s == "SEND") return ActivityType::Send;
  if (s == "RECEIVE") return ActivityType::Receive;
  return std::nullopt;
}

inline constexpr bool is_message(ActivityType t) noexcept {
  return t == ActivityType::Send || t == ActivityType::Receive;
}

// (hostname, program, pid, tid): one worker thread anywhere in the trace.
struct ContextId {
  std::string hostname;
  std::string program;
  std::uint32_t pid = 0;
  std::uint32_t tid = 0;

  friend auto operator<=>(const ContextId&, const ContextId&) = default;
  friend bool operator==(const ContextId&, const ContextId&) = default;
};

struct MessageId {
  std::string src_ip;
  std::uint16_t src_port = 0;
  std::string dst_ip;
  std::uint16_t dst_port = 0;

  friend auto operator<=>(const MessageId&, const MessageId&) = default;
  friend bool operator==(const MessageId&, const MessageId&) = default;
};

// One instrumented activity as logged on a node. `msg` is set exactly for
// SEND/RECEIVE and `size_bytes` is zero for BEGIN/END; use validate() or the
// make_* helpers to enforce that.
struct RawActivityRecord {
  ActivityType type = ActivityType::Begin;
  Nanos timestamp_ns = 0;
  ContextId ctx;
  std::optional<MessageId> msg;
  std::uint64_t size_bytes = 0;

  friend bool operator==(const RawActivityRecord&, const RawActivityRecord&) = default;

  // Empty string when the record is well formed, otherwise the violated rule.
  std::string invariant_violation() const {
    if (ctx.hostname.empty()) return "hostname is empty";
    if (ctx.program.empty()) return "program is empty";
    if (is_message(type) && !msg) return "message record without message id";
    if (!is_message(type) && msg) return "message id on BEGIN/END";
    if (!is_message(type) && size_bytes != 0) return "non-zero size on BEGIN/END";
    return {};
  }

  void validate() const {
    if (auto why = invariant_violation(); !why.empty()) throw InvalidInput(why);
  }
};

inline RawActivityRecord make_boundary(ActivityType type, Nanos ts, ContextId ctx) {
  RawActivityRecord r{type, ts, std::move(ctx), std::nullopt, 0};
  r.validate();
  return r;
}

inline RawActivityRecord make_message(ActivityType type, Nanos ts, ContextId ctx,
                                      MessageId msg, std::uint64_t size_bytes) {
  RawActivityRecord r{type, ts, std::move(ctx), std::move(msg), size_bytes};
  r.validate();
  return r;
}

// A record after the transformation stage. `seq` is the per-node emission index.
struct TupleRecord {
  std::uint64_t seq = 0;
  RawActivityRecord activity;

  friend bool operator==(const TupleRecord&, const TupleRecord&) = default;
};

enum class PathClass : std::uint8_t { Simple, Complex };

inline constexpr std::string_view to_string(PathClass c) noexcept {
  return c == PathClass::Simple ? "SIMPLE" : "COMPLEX";
}

// One thread context's handling of one request: BEGIN .. END.
struct Episode {
  ContextId ctx;
  std::vector<TupleRecord> records;
};

struct ChildLink;

struct CausalPath {
  Episode root_episode;
  std::vector<ChildLink> children;  // ordered by send timestamp
  std::vector<TupleRecord> flat;    // DFS order
  PathClass cls = PathClass::Simple;
  std::vector<std::string> tiers;   // hostnames in order of first appearance
};

struct ChildLink {
  TupleRecord send;  // the parent-side SEND whose RECEIVE starts the child
  CausalPath child;
};

inline const ContextId& thread_key(const RawActivityRecord& record) noexcept {
  return record.ctx;
}

// Distinct hostnames of `records`, in order of first appearance.
inline std::vector<std::string> tiers_of(const std::vector<TupleRecord>& records) {
  std::vector<std::string> tiers;
  for (const auto& r : records) {
    const auto& host = r.activity.ctx.hostname;
    if (std::find(tiers.begin(), tiers.end(), host) == tiers.end()) tiers.push_back(host);
  }
  return tiers;
}

// SIMPLE when the path touches a single tier, COMPLEX for two or more.
inline PathClass classify_path(const CausalPath& path) {
  if (path.flat.empty()) throw InvalidInput("classify_path: path has no records");
  return tiers_of(path.flat).size() == 1 ? PathClass::Simple : PathClass::Complex;
}

}  // namespace tracetrim

template <>
struct std::hash<tracetrim::ContextId> {
  std::size_t operator()(const tracetrim::ContextId& c) const noexcept {
    std::size_t h = std::hash<std::string>{}(c.hostname);
    auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
    mix(std::hash<std::string>{}(c.program));
    mix(std::hash<std::uint64_t>{}((std::uint64_t{c.pid} << 32) | c.tid));
    return h;
  }
};

template <>
struct std::hash<tracetrim::MessageId> {
  std::size_t operator()(const tracetrim::MessageId& m) const noexcept {
    std::size_t h = std::hash<std::string>{}(m.src_ip);
    auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
    mix(std::hash<std::string>{}(m.dst_ip));
    mix((std::size_t{m.src_port} << 16) | m.dst_port);
    return h;
  }
};
