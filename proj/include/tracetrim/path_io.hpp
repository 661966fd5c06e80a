#pragma once

// JSON Lines encoding of a PathSet: one object per path, one per orphan, and a
// trailing {"summary": {...}} object.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "tracetrim/correlator.hpp"
#include "tracetrim/log_codec.hpp"

namespace tracetrim {

// What a correlate run consumed and produced; enough to rebuild a report row.
struct RunSummary {
  std::optional<std::uint64_t> raw_bytes;
  std::uint64_t raw_count = 0;
  std::uint64_t tuple_count = 0;
  std::uint64_t tuple_bytes = 0;
  std::uint64_t paths = 0;
  std::uint64_t simple = 0;
  std::uint64_t complex = 0;
  std::uint64_t degenerate_dropped = 0;
  std::uint64_t degenerate_records = 0;
  std::uint64_t orphans = 0;
  std::uint64_t unmatched_messages = 0;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

inline nlohmann::json tuple_to_json(const TupleRecord& t) {
  const auto& a = t.activity;
  nlohmann::json j = nlohmann::json::array({t.seq, std::string(to_string(a.type)), a.timestamp_ns,
                                            a.ctx.hostname, a.ctx.program, a.ctx.pid, a.ctx.tid});
  if (a.msg) {
    j.push_back(a.msg->src_ip);
    j.push_back(a.msg->src_port);
    j.push_back(a.msg->dst_ip);
    j.push_back(a.msg->dst_port);
  } else {
    for (int i = 0; i < 4; ++i) j.push_back("-");
  }
  j.push_back(a.size_bytes);
  return j;
}

inline nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json j;
  j["paths"] = s.paths;
  j["simple"] = s.simple;
  j["complex"] = s.complex;
  j["degenerate_dropped"] = s.degenerate_dropped;
  j["degenerate_records"] = s.degenerate_records;
  j["orphans"] = s.orphans;
  j["unmatched_messages"] = s.unmatched_messages;
  j["tuple_count"] = s.tuple_count;
  j["tuple_bytes"] = s.tuple_bytes;
  j["raw_count"] = s.raw_count;
  j["raw_bytes"] = s.raw_bytes ? nlohmann::json(*s.raw_bytes) : nlohmann::json(nullptr);
  return j;
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
  RunSummary s;
  s.paths = j.at("paths").get<std::uint64_t>();
  s.simple = j.at("simple").get<std::uint64_t>();
  s.complex = j.at("complex").get<std::uint64_t>();
  s.degenerate_dropped = j.at("degenerate_dropped").get<std::uint64_t>();
  s.degenerate_records = j.value("degenerate_records", std::uint64_t{0});
  s.orphans = j.at("orphans").get<std::uint64_t>();
  s.unmatched_messages = j.value("unmatched_messages", std::uint64_t{0});
  s.tuple_count = j.at("tuple_count").get<std::uint64_t>();
  s.tuple_bytes = j.at("tuple_bytes").get<std::uint64_t>();
  s.raw_count = j.value("raw_count", std::uint64_t{0});
  if (j.contains("raw_bytes") && !j["raw_bytes"].is_null()) s.raw_bytes = j["raw_bytes"].get<std::uint64_t>();
  return s;
}

inline RunSummary summarize_paths(const PathSet& set) {
  RunSummary s;
  s.paths = set.paths.size();
  s.simple = set.count(PathClass::Simple);
  s.complex = set.count(PathClass::Complex);
  s.degenerate_dropped = set.degenerate_dropped;
  s.degenerate_records = set.degenerate_records;
  s.orphans = set.orphans.size();
  s.unmatched_messages = set.unmatched.size();
  return s;
}

// Writes the paths, orphans, and summary; `summary` supplies the input-side counts.
inline void write_paths_jsonl(std::ostream& out, const PathSet& set, const RunSummary& summary) {
  std::uint64_t path_id = 0;
  for (const auto& p : set.paths) {
    nlohmann::json j;
    j["path_id"] = path_id++;
    j["class"] = std::string(to_string(p.cls));
    j["tiers"] = p.tiers;
    j["n_records"] = p.flat.size();
    auto& records = j["records"] = nlohmann::json::array();
    for (const auto& t : p.flat) records.push_back(tuple_to_json(t));
    out << j.dump() << '\n';
  }
  for (const auto& o : set.orphans) {
    nlohmann::json j;
    j["orphan"] = {{"reason", o.reason}, {"record", tuple_to_json(o.record)}};
    out << j.dump() << '\n';
  }
  out << nlohmann::json{{"summary", summary_to_json(summary)}}.dump() << '\n';
}

inline RunSummary read_paths_summary(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::optional<RunSummary> found;
  for_each_line(in, [&](std::string_view line, std::size_t no) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(no, "json", e.what());
    }
    if (j.contains("summary")) {
      try {
        found = summary_from_json(j["summary"]);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(no, "summary", e.what());
      }
    }
  });
  if (!found) throw InvalidInput(path.string() + ": no summary line");
  return *found;
}

}  // namespace tracetrim
