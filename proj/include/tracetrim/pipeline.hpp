#pragma once

// File-level stages (gen, threshold, transform, correlate, report) and the
// end-to-end pipeline that chains them.

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracetrim/correlator.hpp"
#include "tracetrim/eliminator.hpp"
#include "tracetrim/log_codec.hpp"
#include "tracetrim/path_io.hpp"
#include "tracetrim/report.hpp"
#include "tracetrim/simgen.hpp"
#include "tracetrim/thresholder.hpp"

namespace tracetrim {

namespace fs = std::filesystem;

// Failure inside a named pipeline stage. exit_code follows the CLI convention:
// 2 for empty or invalid inputs, 1 otherwise.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, int exit_code)
      : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)), exit_code_(exit_code) {}

  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw StageError(stage, e.what(), 2);
  } catch (const ParseError& e) {
    throw StageError(stage, e.what(), 2);
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), 1);
  }
}

struct ThresholdRun {
  std::size_t samples = 0;
  SizeClusters clusters;
  Threshold threshold;
};

// Throws InvalidInput when the log holds no first-tier client message.
inline ThresholdRun threshold_file(const fs::path& raw_log, std::uint16_t port, int max_iters = 100) {
  const auto records = read_raw_file(raw_log);
  const auto sizes = extract_first_sizes(records, port);
  if (sizes.empty()) throw InvalidInput(raw_log.string() + ": no first-tier messages on port " + std::to_string(port));
  ThresholdRun run;
  run.samples = sizes.size();
  run.clusters = kmeans2(sizes, max_iters);
  run.threshold = threshold_from(run.clusters);
  return run;
}

inline std::uint64_t total_file_bytes(const std::vector<fs::path>& files) {
  std::uint64_t total = 0;
  for (const auto& f : files) total += fs::file_size(f);
  return total;
}

inline std::uint64_t count_lines(const fs::path& file) {
  auto in = open_input(file);
  std::uint64_t n = 0;
  for_each_line(in, [&](std::string_view, std::size_t) { ++n; });
  return n;
}

// Correlates tuple files into `out_jsonl`. When raw logs are given their
// total size and record count go into the summary.
inline RunSummary correlate_files(const std::vector<fs::path>& tuple_files, const fs::path& out_jsonl,
                                  const PathOptions& options, const std::vector<fs::path>& raw_files = {}) {
  std::vector<TupleRecord> tuples;
  for (const auto& f : tuple_files) {
    auto part = read_tuple_file(f);
    tuples.insert(tuples.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  const PathSet set = correlate(tuples, options);
  RunSummary summary = summarize_paths(set);
  summary.tuple_count = tuples.size();
  summary.tuple_bytes = total_file_bytes(tuple_files);
  if (!raw_files.empty()) {
    summary.raw_bytes = total_file_bytes(raw_files);
    for (const auto& f : raw_files) summary.raw_count += count_lines(f);
  }
  auto out = open_output(out_jsonl);
  write_paths_jsonl(out, set, summary);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + out_jsonl.string());
  return summary;
}

struct PipelineConfig {
  WorkloadConfig workload;
  std::optional<fs::path> input_dir;  // reuse <dir>/*.log instead of generating
  fs::path output_dir = "pipeline_out";
  std::string first_tier_host = "web1";
  std::optional<double> threshold;  // skips k-means when set
  int max_iters = 100;
};

struct PipelineResult {
  ReductionReport report;
  std::optional<ThresholdRun> threshold_run;
  double threshold = 0;
  TransformStats first_tier_elim;
  RunSummary before;
  RunSummary after;
  bool size_overlap = false;
  fs::path report_file;
};

inline std::vector<fs::path> raw_logs_in(const fs::path& dir) {
  std::vector<fs::path> logs;
  if (!fs::is_directory(dir)) throw InvalidInput(dir.string() + " is not a directory");
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".log") logs.push_back(entry.path());
  std::sort(logs.begin(), logs.end());
  return logs;
}

inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  PipelineResult result;
  const fs::path out = cfg.output_dir;
  run_stage("setup", [&] {
    fs::create_directories(out / "noelim");
    fs::create_directories(out / "elim");
  });

  fs::path raw_dir = cfg.input_dir.value_or(out);
  if (!cfg.input_dir) {
    run_stage("gen", [&] {
      const auto workload = generate_workload(cfg.workload);
      result.size_overlap = workload.truth.sizes_overlap();
      write_workload(workload, out);
    });
  }
  const auto raw_logs = run_stage("gen", [&] { return raw_logs_in(raw_dir); });
  const fs::path first_tier_log = raw_dir / (cfg.first_tier_host + ".log");
  const std::uint16_t port = cfg.workload.first_tier_port;

  run_stage("threshold", [&] {
    if (cfg.threshold) {
      result.threshold = *cfg.threshold;
      return;
    }
    if (!fs::exists(first_tier_log)) throw InvalidInput("missing first-tier log " + first_tier_log.string());
    const auto records = read_raw_file(first_tier_log);
    const auto sizes = extract_first_sizes(records, port);
    if (sizes.empty()) {
      if (!records.empty())
        throw InvalidInput(first_tier_log.string() + ": no first-tier messages on port " + std::to_string(port));
      return;  // nothing to classify; the threshold value is never consulted
    }
    ThresholdRun run;
    run.samples = sizes.size();
    run.clusters = kmeans2(sizes, cfg.max_iters);
    run.threshold = threshold_from(run.clusters);
    result.threshold = run.threshold.value;
    result.threshold_run = std::move(run);
  });

  std::vector<fs::path> noelim_tuples;
  std::vector<fs::path> elim_tuples;
  run_stage("transform", [&] {
    for (const auto& log : raw_logs) {
      const auto name = log.stem().string() + ".tup";
      const bool first_tier = log.stem() == cfg.first_tier_host;
      transform_file(log, out / "noelim" / name, EliminationConfig{false, std::nullopt, port});
      // Elimination runs only on the first-tier node; other nodes pass through.
      auto stats = transform_file(log, out / "elim" / name,
                                  EliminationConfig{first_tier, result.threshold, port});
      if (first_tier) result.first_tier_elim = stats;
      noelim_tuples.push_back(out / "noelim" / name);
      elim_tuples.push_back(out / "elim" / name);
    }
  });

  run_stage("correlate", [&] {
    result.before = correlate_files(noelim_tuples, out / "paths_noelim.jsonl", PathOptions{false}, raw_logs);
    result.after = correlate_files(elim_tuples, out / "paths_elim.jsonl", PathOptions{true}, raw_logs);
  });

  run_stage("report", [&] {
    result.report = summarize(result.before, result.after);
    auto j = report_to_json(result.report);
    j["threshold"] = result.threshold_run || cfg.threshold ? nlohmann::json(result.threshold) : nlohmann::json(nullptr);
    if (result.threshold_run) {
      j["kmeans"] = {{"c_low", result.threshold_run->clusters.c_low},
                     {"c_high", result.threshold_run->clusters.c_high},
                     {"iterations", result.threshold_run->clusters.iterations},
                     {"samples", result.threshold_run->samples}};
    }
    j["unmapped_emitted"] = result.first_tier_elim.unmapped_emitted;
    j["first_size_overlap"] = result.size_overlap;
    result.report_file = out / "report.json";
    auto f = open_output(result.report_file);
    f << j.dump(2) << '\n';
    auto t = open_output(out / "report.txt");
    t << render_table(result.report);
  });
  return result;
}

}  // namespace tracetrim
