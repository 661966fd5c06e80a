#pragma once

// Text encodings of activity records.
//
// Raw log line (space separated, one per line):
//   <TYPE> <timestamp_ns> <hostname> <program> <pid> <tid> <src_ip>:<src_port> <dst_ip>:<dst_port> <size_bytes>
// Tuple record line (CSV, one per line):
//   <seq>,<TYPE>,<timestamp_ns>,<hostname>,<program>,<pid>,<tid>,<src_ip>,<src_port>,<dst_ip>,<dst_port>,<size_bytes>
// BEGIN/END carry "-" in every endpoint field and a size of 0.

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "tracetrim/errors.hpp"
#include "tracetrim/trace_model.hpp"

namespace tracetrim {

namespace codec_detail {

inline constexpr std::string_view kPlaceholder = "-";

template <typename Int>
Int parse_uint(std::string_view text, std::size_t line_no, const char* field,
               std::uint64_t max = std::numeric_limits<Int>::max()) {
  std::uint64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last)
    throw ParseError(line_no, field, "expected a non-negative integer, got '" + std::string(text) + "'");
  if (value > max)
    throw ParseError(line_no, field, "value " + std::string(text) + " out of range");
  return static_cast<Int>(value);
}

inline bool is_ipv4(std::string_view s) {
  int parts = 0;
  while (true) {
    auto dot = s.find('.');
    auto octet = s.substr(0, dot);
    if (octet.empty() || octet.size() > 3) return false;
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(octet.data(), octet.data() + octet.size(), v);
    if (ec != std::errc{} || ptr != octet.data() + octet.size() || v > 255) return false;
    ++parts;
    if (dot == std::string_view::npos) break;
    s.remove_prefix(dot + 1);
  }
  return parts == 4;
}

inline std::string parse_ip(std::string_view text, std::size_t line_no, const char* field) {
  if (!is_ipv4(text))
    throw ParseError(line_no, field, "expected an IPv4 address, got '" + std::string(text) + "'");
  return std::string(text);
}

inline std::string parse_name(std::string_view text, std::size_t line_no, const char* field) {
  if (text.empty() || text == kPlaceholder)
    throw ParseError(line_no, field, "must be a non-empty name");
  return std::string(text);
}

inline ActivityType parse_type(std::string_view text, std::size_t line_no) {
  auto t = activity_type_from(text);
  if (!t) throw ParseError(line_no, "type", "unknown activity type '" + std::string(text) + "'");
  return *t;
}

template <std::size_t N>
std::array<std::string_view, N> split_exact(std::string_view line, char sep, bool collapse,
                                            std::size_t line_no) {
  std::array<std::string_view, N> out{};
  std::size_t count = 0;
  std::size_t pos = 0;
  auto is_sep = [&](char c) { return collapse ? (c == ' ' || c == '\t') : c == sep; };
  if (collapse) {
    while (pos < line.size() && is_sep(line[pos])) ++pos;
  }
  while (pos <= line.size()) {
    std::size_t end = pos;
    while (end < line.size() && !is_sep(line[end])) ++end;
    if (count == N) throw ParseError(line_no, "line", "too many fields (expected " + std::to_string(N) + ")");
    out[count++] = line.substr(pos, end - pos);
    if (end == line.size()) break;
    pos = end + 1;
    if (collapse) {
      while (pos < line.size() && is_sep(line[pos])) ++pos;
      if (pos == line.size()) break;
    }
  }
  if (count != N)
    throw ParseError(line_no, "line", "expected " + std::to_string(N) + " fields, got " + std::to_string(count));
  return out;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

// Shared tail of both formats: message fields + size, checked against the type.
inline void finish_record(RawActivityRecord& r, bool has_endpoints, std::size_t line_no) {
  if (is_message(r.type) && !has_endpoints)
    throw ParseError(line_no, "endpoint", std::string(to_string(r.type)) + " requires message endpoints");
  if (!is_message(r.type) && has_endpoints)
    throw ParseError(line_no, "endpoint", std::string(to_string(r.type)) + " must not carry message endpoints");
  if (!is_message(r.type) && r.size_bytes != 0)
    throw ParseError(line_no, "size_bytes", std::string(to_string(r.type)) + " must have size 0");
}

inline void parse_endpoint(std::string_view text, std::size_t line_no, const char* field,
                           std::string& ip, std::uint16_t& port) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos)
    throw ParseError(line_no, field, "expected <ip>:<port>, got '" + std::string(text) + "'");
  ip = parse_ip(text.substr(0, colon), line_no, field);
  port = parse_uint<std::uint16_t>(text.substr(colon + 1), line_no, field);
}

}  // namespace codec_detail

inline RawActivityRecord parse_raw_line(std::string_view line, std::size_t line_no = 0) {
  using namespace codec_detail;
  line = strip_cr(line);
  if (line.empty()) throw ParseError(line_no, "line", "empty line");
  auto f = split_exact<9>(line, ' ', true, line_no);

  RawActivityRecord r;
  r.type = parse_type(f[0], line_no);
  r.timestamp_ns = parse_uint<Nanos>(f[1], line_no, "timestamp_ns");
  r.ctx.hostname = parse_name(f[2], line_no, "hostname");
  r.ctx.program = parse_name(f[3], line_no, "program");
  r.ctx.pid = parse_uint<std::uint32_t>(f[4], line_no, "pid");
  r.ctx.tid = parse_uint<std::uint32_t>(f[5], line_no, "tid");

  const bool src_dash = f[6] == kPlaceholder;
  const bool dst_dash = f[7] == kPlaceholder;
  if (src_dash != dst_dash)
    throw ParseError(line_no, src_dash ? "src" : "dst", "endpoints must both be present or both be '-'");
  if (!src_dash) {
    MessageId m;
    parse_endpoint(f[6], line_no, "src", m.src_ip, m.src_port);
    parse_endpoint(f[7], line_no, "dst", m.dst_ip, m.dst_port);
    r.msg = std::move(m);
  }
  r.size_bytes = parse_uint<std::uint64_t>(f[8], line_no, "size_bytes");
  finish_record(r, !src_dash, line_no);
  return r;
}

inline std::string serialize_raw(const RawActivityRecord& r) {
  std::string out;
  out.reserve(96);
  out += to_string(r.type);
  out += ' ';
  out += std::to_string(r.timestamp_ns);
  out += ' ';
  out += r.ctx.hostname;
  out += ' ';
  out += r.ctx.program;
  out += ' ';
  out += std::to_string(r.ctx.pid);
  out += ' ';
  out += std::to_string(r.ctx.tid);
  if (r.msg) {
    out += ' ';
    out += r.msg->src_ip;
    out += ':';
    out += std::to_string(r.msg->src_port);
    out += ' ';
    out += r.msg->dst_ip;
    out += ':';
    out += std::to_string(r.msg->dst_port);
  } else {
    out += " - -";
  }
  out += ' ';
  out += std::to_string(r.size_bytes);
  return out;
}

inline TupleRecord parse_tuple_line(std::string_view line, std::size_t line_no = 0) {
  using namespace codec_detail;
  line = strip_cr(line);
  if (line.empty()) throw ParseError(line_no, "line", "empty line");
  auto f = split_exact<12>(line, ',', false, line_no);

  TupleRecord t;
  t.seq = parse_uint<std::uint64_t>(f[0], line_no, "seq");
  auto& r = t.activity;
  r.type = parse_type(f[1], line_no);
  r.timestamp_ns = parse_uint<Nanos>(f[2], line_no, "timestamp_ns");
  r.ctx.hostname = parse_name(f[3], line_no, "hostname");
  r.ctx.program = parse_name(f[4], line_no, "program");
  r.ctx.pid = parse_uint<std::uint32_t>(f[5], line_no, "pid");
  r.ctx.tid = parse_uint<std::uint32_t>(f[6], line_no, "tid");

  static constexpr const char* kEndpointFields[] = {"src_ip", "src_port", "dst_ip", "dst_port"};
  int dashes = 0;
  for (int i = 0; i < 4; ++i) dashes += f[7 + i] == kPlaceholder;
  if (dashes != 0 && dashes != 4) {
    for (int i = 0; i < 4; ++i)
      if (f[7 + i] == kPlaceholder)
        throw ParseError(line_no, kEndpointFields[i], "endpoint fields must all be present or all be '-'");
  }
  if (dashes == 0) {
    MessageId m;
    m.src_ip = parse_ip(f[7], line_no, "src_ip");
    m.src_port = parse_uint<std::uint16_t>(f[8], line_no, "src_port");
    m.dst_ip = parse_ip(f[9], line_no, "dst_ip");
    m.dst_port = parse_uint<std::uint16_t>(f[10], line_no, "dst_port");
    r.msg = std::move(m);
  }
  r.size_bytes = parse_uint<std::uint64_t>(f[11], line_no, "size_bytes");
  finish_record(r, dashes == 0, line_no);
  return t;
}

inline std::string serialize_tuple(const TupleRecord& t) {
  const auto& r = t.activity;
  std::string out;
  out.reserve(96);
  out += std::to_string(t.seq);
  out += ',';
  out += to_string(r.type);
  out += ',';
  out += std::to_string(r.timestamp_ns);
  out += ',';
  out += r.ctx.hostname;
  out += ',';
  out += r.ctx.program;
  out += ',';
  out += std::to_string(r.ctx.pid);
  out += ',';
  out += std::to_string(r.ctx.tid);
  if (r.msg) {
    out += ',';
    out += r.msg->src_ip;
    out += ',';
    out += std::to_string(r.msg->src_port);
    out += ',';
    out += r.msg->dst_ip;
    out += ',';
    out += std::to_string(r.msg->dst_port);
  } else {
    out += ",-,-,-,-";
  }
  out += ',';
  out += std::to_string(r.size_bytes);
  return out;
}

// On-disk footprint of one line, newline included.
inline std::uint64_t line_bytes(const RawActivityRecord& r) { return serialize_raw(r).size() + 1; }
inline std::uint64_t line_bytes(const TupleRecord& t) { return serialize_tuple(t).size() + 1; }

// Calls fn(line, line_no) for each non-blank line; line numbers are 1-based.
template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (codec_detail::strip_cr(line).empty()) continue;
    fn(std::string_view(line), line_no);
  }
}

inline std::vector<RawActivityRecord> read_raw_stream(std::istream& in) {
  std::vector<RawActivityRecord> out;
  for_each_line(in, [&](std::string_view line, std::size_t no) { out.push_back(parse_raw_line(line, no)); });
  return out;
}

inline std::vector<TupleRecord> read_tuple_stream(std::istream& in) {
  std::vector<TupleRecord> out;
  for_each_line(in, [&](std::string_view line, std::size_t no) { out.push_back(parse_tuple_line(line, no)); });
  return out;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline std::vector<RawActivityRecord> read_raw_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_raw_stream(in);
}

inline std::vector<TupleRecord> read_tuple_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_tuple_stream(in);
}

// Returns the number of bytes written.
template <typename Record>
std::uint64_t write_lines(const std::filesystem::path& path, const std::vector<Record>& records) {
  auto out = open_output(path);
  std::uint64_t bytes = 0;
  for (const auto& r : records) {
    std::string line;
    if constexpr (std::is_same_v<Record, TupleRecord>) line = serialize_tuple(r);
    else line = serialize_raw(r);
    line += '\n';
    bytes += line.size();
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return bytes;
}

}  // namespace tracetrim
