#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "tracetrim/errors.hpp"
#include "tracetrim/path_io.hpp"

namespace tracetrim {

class InvalidComparison : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// 100 * (before - after) / before, or 0 when there was nothing to reduce.
inline double reduction_pct(std::uint64_t before, std::uint64_t after) {
  if (before == 0) return 0.0;
  return 100.0 * (static_cast<double>(before) - static_cast<double>(after)) / static_cast<double>(before);
}

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

struct ReductionReport {
  std::uint64_t raw_bytes = 0;
  std::uint64_t raw_count = 0;
  std::uint64_t tuple_bytes_before = 0;
  std::uint64_t tuple_bytes_after = 0;
  std::uint64_t tuple_count_before = 0;
  std::uint64_t tuple_count_after = 0;
  std::uint64_t path_count_before = 0;
  std::uint64_t path_count_after = 0;
  std::uint64_t simple_before = 0;
  std::uint64_t complex_before = 0;
  std::uint64_t simple_after = 0;
  std::uint64_t complex_after = 0;
  std::uint64_t degenerate_dropped = 0;
  std::uint64_t orphans_before = 0;
  std::uint64_t orphans_after = 0;
  double tuple_reduction_pct = 0;        // by bytes
  double tuple_count_reduction_pct = 0;  // by records
  double path_reduction_pct = 0;
};

inline ReductionReport summarize(const RunSummary& before, const RunSummary& after) {
  if (before.raw_bytes != after.raw_bytes)
    throw InvalidComparison("runs consumed different raw logs (raw byte counts differ)");
  if (after.tuple_count > before.tuple_count || after.paths > before.paths)
    throw InvalidComparison("the 'after' run has more tuples or paths than the 'before' run");
  ReductionReport r;
  r.raw_bytes = before.raw_bytes.value_or(0);
  r.raw_count = before.raw_count;
  r.tuple_bytes_before = before.tuple_bytes;
  r.tuple_bytes_after = after.tuple_bytes;
  r.tuple_count_before = before.tuple_count;
  r.tuple_count_after = after.tuple_count;
  r.path_count_before = before.paths;
  r.path_count_after = after.paths;
  r.simple_before = before.simple;
  r.complex_before = before.complex;
  r.simple_after = after.simple;
  r.complex_after = after.complex;
  r.degenerate_dropped = after.degenerate_dropped;
  r.orphans_before = before.orphans;
  r.orphans_after = after.orphans;
  r.tuple_reduction_pct = round2(reduction_pct(before.tuple_bytes, after.tuple_bytes));
  r.tuple_count_reduction_pct = round2(reduction_pct(before.tuple_count, after.tuple_count));
  r.path_reduction_pct = round2(reduction_pct(before.paths, after.paths));
  return r;
}

// "84%" style: nearest whole percent.
inline std::string percent_label(double pct) { return std::to_string(std::llround(pct)) + "%"; }

inline std::string megabytes(std::uint64_t bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fM", static_cast<double>(bytes) / 1e6);
  return buf;
}

inline std::string render_table(const ReductionReport& r) {
  auto row = [](const std::string& a, const std::string& b, const std::string& c, const std::string& d) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16s %-24s %-26s %-20s\n", a.c_str(), b.c_str(), c.c_str(), d.c_str());
    return std::string(buf);
  };
  auto raw = megabytes(r.raw_bytes) + " (" + std::to_string(r.raw_count) + ")";
  auto tuples = [](std::uint64_t bytes, std::uint64_t count) {
    return megabytes(bytes) + " (" + std::to_string(count) + ")";
  };
  std::string out;
  out += row("", "Original logs", "Tuple Records", "Causal Paths");
  out += row("No elimination", raw, tuples(r.tuple_bytes_before, r.tuple_count_before),
             std::to_string(r.path_count_before));
  out += row("Elimination", raw, tuples(r.tuple_bytes_after, r.tuple_count_after),
             std::to_string(r.path_count_after));
  out += row("Reduction", "",
             percent_label(r.tuple_reduction_pct) + " bytes, " + percent_label(r.tuple_count_reduction_pct) + " records",
             percent_label(r.path_reduction_pct));
  out += "\npaths by class: before " + std::to_string(r.simple_before) + " simple / " +
         std::to_string(r.complex_before) + " complex; after " + std::to_string(r.simple_after) + " simple / " +
         std::to_string(r.complex_after) + " complex; degenerate dropped " + std::to_string(r.degenerate_dropped) +
         "\n";
  return out;
}

inline nlohmann::json report_to_json(const ReductionReport& r) {
  return {
      {"raw_bytes", r.raw_bytes},
      {"raw_count", r.raw_count},
      {"tuple_bytes_before", r.tuple_bytes_before},
      {"tuple_bytes_after", r.tuple_bytes_after},
      {"tuple_count_before", r.tuple_count_before},
      {"tuple_count_after", r.tuple_count_after},
      {"path_count_before", r.path_count_before},
      {"path_count_after", r.path_count_after},
      {"path_class_counts_before", {{"SIMPLE", r.simple_before}, {"COMPLEX", r.complex_before}}},
      {"path_class_counts_after", {{"SIMPLE", r.simple_after}, {"COMPLEX", r.complex_after}}},
      {"degenerate_dropped", r.degenerate_dropped},
      {"orphans_before", r.orphans_before},
      {"orphans_after", r.orphans_after},
      {"tuple_reduction_pct", r.tuple_reduction_pct},
      {"tuple_count_reduction_pct", r.tuple_count_reduction_pct},
      {"path_reduction_pct", r.path_reduction_pct},
  };
}

}  // namespace tracetrim
