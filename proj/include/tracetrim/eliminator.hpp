#pragma once

// Transformation stage: raw records in, tuple records out. On the first-tier
// node a per-thread state machine drops the records of requests whose first
// client message is not larger than the learned threshold.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tracetrim/errors.hpp"
#include "tracetrim/log_codec.hpp"
#include "tracetrim/trace_model.hpp"

namespace tracetrim {

enum class ThreadState : std::uint8_t { Start, Simple, Complex, End };

inline constexpr std::string_view to_string(ThreadState s) noexcept {
  switch (s) {
    case ThreadState::Start: return "start";
    case ThreadState::Simple: return "simple";
    case ThreadState::Complex: return "complex";
    case ThreadState::End: return "end";
  }
  return "?";
}

using StateMap = std::unordered_map<ContextId, ThreadState>;

struct EliminationConfig {
  bool eliminate = false;
  std::optional<double> threshold;
  std::uint16_t first_tier_port = 80;

  void validate() const {
    if (eliminate && !threshold) throw InvalidInput("elimination requires a threshold");
  }
};

enum class Decision : std::uint8_t { Emit, Drop };

// Which rule produced a decision; Unmapped marks the conservative emit of a
// record whose thread was never seen at BEGIN.
enum class Rule : std::uint8_t { Passthrough, Begin, FirstReceive, End, Other, Unmapped };

struct StepResult {
  Decision decision;
  Rule rule;
};

inline StepResult step(StateMap& states, const RawActivityRecord& record, const EliminationConfig& config) {
  if (!config.eliminate) return {Decision::Emit, Rule::Passthrough};
  const ContextId& key = thread_key(record);

  if (record.type == ActivityType::Begin) {
    states.insert_or_assign(key, ThreadState::Start);
    return {Decision::Emit, Rule::Begin};
  }
  if (record.type == ActivityType::End) {
    states.insert_or_assign(key, ThreadState::End);
    return {Decision::Emit, Rule::End};
  }

  auto it = states.find(key);
  if (it == states.end()) return {Decision::Emit, Rule::Unmapped};

  if (record.type == ActivityType::Receive && record.msg && record.msg->dst_port == config.first_tier_port &&
      it->second == ThreadState::Start) {
    if (static_cast<double>(record.size_bytes) > *config.threshold) {
      it->second = ThreadState::Complex;
      return {Decision::Emit, Rule::FirstReceive};
    }
    it->second = ThreadState::Simple;
    return {Decision::Drop, Rule::FirstReceive};
  }

  return {it->second == ThreadState::Complex ? Decision::Emit : Decision::Drop, Rule::Other};
}

struct TransformStats {
  std::uint64_t records_in = 0;
  std::uint64_t tuples_out = 0;
  std::uint64_t dropped = 0;
  std::uint64_t unmapped_emitted = 0;
  std::uint64_t raw_bytes = 0;
  std::uint64_t tuple_bytes = 0;
};

// Incremental form of transform_stream, for callers reading a file line by line.
class Transformer {
 public:
  explicit Transformer(EliminationConfig config) : config_(std::move(config)) { config_.validate(); }

  // The emitted tuple, or nullopt when the record is dropped.
  std::optional<TupleRecord> push(const RawActivityRecord& record) {
    ++stats_.records_in;
    const auto result = step(states_, record, config_);
    if (result.rule == Rule::Unmapped) ++stats_.unmapped_emitted;
    if (result.decision == Decision::Drop) {
      ++stats_.dropped;
      return std::nullopt;
    }
    ++stats_.tuples_out;
    return TupleRecord{next_seq_++, record};
  }

  const TransformStats& stats() const noexcept { return stats_; }
  TransformStats& stats() noexcept { return stats_; }
  const StateMap& states() const noexcept { return states_; }

 private:
  EliminationConfig config_;
  StateMap states_;
  TransformStats stats_;
  std::uint64_t next_seq_ = 0;
};

struct TransformResult {
  std::vector<TupleRecord> tuples;
  TransformStats stats;
};

inline TransformResult transform_stream(std::span<const RawActivityRecord> records, const EliminationConfig& config) {
  Transformer t(config);
  TransformResult out;
  out.tuples.reserve(records.size());
  for (const auto& r : records) {
    t.stats().raw_bytes += line_bytes(r);
    if (auto tuple = t.push(r)) {
      t.stats().tuple_bytes += line_bytes(*tuple);
      out.tuples.push_back(std::move(*tuple));
    }
  }
  out.stats = t.stats();
  return out;
}

// Streams `in` (raw format) to `out` (tuple format); parse errors carry line numbers.
inline TransformStats transform_file(const std::filesystem::path& in_path, const std::filesystem::path& out_path,
                                     const EliminationConfig& config) {
  Transformer t(config);
  auto in = open_input(in_path);
  auto out = open_output(out_path);
  std::string buf;
  for_each_line(in, [&](std::string_view line, std::size_t no) {
    const auto record = parse_raw_line(line, no);
    if (auto tuple = t.push(record)) {
      buf = serialize_tuple(*tuple);
      buf += '\n';
      t.stats().tuple_bytes += buf.size();
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
  });
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + out_path.string());
  t.stats().raw_bytes = std::filesystem::file_size(in_path);
  return t.stats();
}

}  // namespace tracetrim
