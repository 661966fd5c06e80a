// tracetrim: generate, transform, correlate and summarize multi-tier activity logs.
//
// Exit codes: 0 success, 1 stage failure, 2 empty or invalid inputs.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tracetrim/pipeline.hpp"

namespace tt = tracetrim;
namespace fs = std::filesystem;

namespace {

tt::SizeDist parse_size_dist(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw tt::InvalidInput("expected MEAN,STDDEV, got '" + text + "'");
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw tt::InvalidInput("expected MEAN,STDDEV, got '" + text + "'");
  }
}

struct WorkloadOptions {
  tt::WorkloadConfig cfg;
  std::string simple_size;
  std::string complex_size;

  void attach(CLI::App* cmd) {
    cmd->add_option("--requests", cfg.n_requests, "Number of client requests")->required();
    cmd->add_option("--simple-frac", cfg.simple_frac, "Fraction of simple requests")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--seed", cfg.seed, "Random seed");
    cmd->add_option("--simple-size", simple_size, "Simple first-message size MEAN,STDDEV (bytes)");
    cmd->add_option("--complex-size", complex_size, "Complex first-message size MEAN,STDDEV (bytes)");
    cmd->add_option("--threads", cfg.threads_per_tier, "Worker threads per tier");
    cmd->add_option("--first-tier-port", cfg.first_tier_port, "Service port of the first tier");
  }

  tt::WorkloadConfig resolve() {
    if (!simple_size.empty()) cfg.simple_size = parse_size_dist(simple_size);
    if (!complex_size.empty()) cfg.complex_size = parse_size_dist(complex_size);
    return cfg;
  }
};

void print_transform(const tt::TransformStats& s) {
  std::printf("records in:  %llu\ntuples out:  %llu\ndropped:     %llu\nraw bytes:   %llu\ntuple bytes: %llu\n",
              static_cast<unsigned long long>(s.records_in), static_cast<unsigned long long>(s.tuples_out),
              static_cast<unsigned long long>(s.dropped), static_cast<unsigned long long>(s.raw_bytes),
              static_cast<unsigned long long>(s.tuple_bytes));
  if (s.unmapped_emitted > 0)
    std::printf("warning: %llu records on threads without a BEGIN were kept\n",
                static_cast<unsigned long long>(s.unmapped_emitted));
}

void print_summary(const tt::RunSummary& s) {
  std::printf("paths: %llu (SIMPLE %llu, COMPLEX %llu)\ndegenerate dropped: %llu\norphans: %llu\n"
              "unmatched messages: %llu\n",
              static_cast<unsigned long long>(s.paths), static_cast<unsigned long long>(s.simple),
              static_cast<unsigned long long>(s.complex), static_cast<unsigned long long>(s.degenerate_dropped),
              static_cast<unsigned long long>(s.orphans), static_cast<unsigned long long>(s.unmatched_messages));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Request-trace log reduction: generate, eliminate, correlate, report"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate synthetic web1/app1/db1 activity logs");
  WorkloadOptions gen_opts;
  gen_opts.attach(gen);
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output directory")->required();

  // threshold
  auto* thr = app.add_subcommand("threshold", "Learn the first-message size threshold from a raw log");
  std::string thr_input;
  std::uint16_t thr_port = 80;
  int thr_iters = 100;
  thr->add_option("--input", thr_input, "Raw first-tier log")->required();
  thr->add_option("--port", thr_port, "First-tier service port");
  thr->add_option("--max-iters", thr_iters, "k-means iteration cap")->check(CLI::PositiveNumber);

  // transform
  auto* tr = app.add_subcommand("transform", "Convert a raw log into tuple records");
  std::string tr_input, tr_out;
  bool tr_eliminate = false;
  std::optional<double> tr_threshold;
  std::uint16_t tr_port = 80;
  tr->add_option("--input", tr_input, "Raw log")->required();
  tr->add_option("--out", tr_out, "Tuple file to write")->required();
  tr->add_flag("--eliminate", tr_eliminate, "Drop records of simple requests");
  tr->add_option("--threshold", tr_threshold, "First-message size threshold (bytes)");
  tr->add_option("--first-tier-port", tr_port, "First-tier service port");

  // correlate
  auto* co = app.add_subcommand("correlate", "Correlate tuple files into causal paths");
  std::vector<std::string> co_inputs, co_raw;
  std::string co_out;
  bool co_drop = false;
  co->add_option("--inputs", co_inputs, "Tuple files")->required();
  co->add_option("--out", co_out, "Paths file (JSON lines)")->required();
  co->add_flag("--drop-degenerate", co_drop, "Discard paths without any message record");
  co->add_option("--raw", co_raw, "Raw logs the tuples came from (for byte accounting)");

  // report
  auto* rep = app.add_subcommand("report", "Compare two correlate runs");
  std::string rep_before, rep_after, rep_out;
  rep->add_option("--before", rep_before, "Paths file without elimination")->required();
  rep->add_option("--after", rep_after, "Paths file with elimination")->required();
  rep->add_option("--out", rep_out, "Structured report to write (default: beside --after)");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "gen -> threshold -> transform x2 -> correlate x2 -> report");
  WorkloadOptions pipe_opts;
  pipe_opts.attach(pipe);
  pipe->get_option("--requests")->required(false);
  std::string pipe_out = "pipeline_out", pipe_in;
  std::optional<double> pipe_threshold;
  pipe->add_option("--out", pipe_out, "Output directory");
  pipe->add_option("--in", pipe_in, "Reuse raw logs from this directory instead of generating");
  pipe->add_option("--threshold", pipe_threshold, "Fixed threshold (skips k-means)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      auto cfg = gen_opts.resolve();
      const auto workload = tt::run_stage("gen", [&] { return tt::generate_workload(cfg); });
      const auto written = tt::run_stage("gen", [&] { return tt::write_workload(workload, gen_out); });
      for (const auto& [host, bytes] : written.log_bytes)
        std::printf("%s: %zu records, %llu bytes\n", written.log_files.at(host).string().c_str(),
                    workload.logs.at(host).size(), static_cast<unsigned long long>(bytes));
      std::printf("requests: %llu SIMPLE, %llu COMPLEX\n",
                  static_cast<unsigned long long>(workload.truth.count(tt::PathClass::Simple)),
                  static_cast<unsigned long long>(workload.truth.count(tt::PathClass::Complex)));
      if (workload.truth.sizes_overlap())
        std::printf("warning: simple and complex first-message sizes overlap for this seed\n");
    } else if (*thr) {
      const auto run = tt::run_stage("threshold", [&] { return tt::threshold_file(thr_input, thr_port, thr_iters); });
      std::printf("threshold=%.6g\n", run.threshold.value);
      std::printf("samples=%zu c_low=%.6g c_high=%.6g iterations=%d sse=%.6g\n", run.samples, run.clusters.c_low,
                  run.clusters.c_high, run.clusters.iterations, run.clusters.sse);
    } else if (*tr) {
      tt::EliminationConfig cfg{tr_eliminate, tr_threshold, tr_port};
      const auto stats = tt::run_stage("transform", [&] { return tt::transform_file(tr_input, tr_out, cfg); });
      print_transform(stats);
    } else if (*co) {
      std::vector<fs::path> inputs(co_inputs.begin(), co_inputs.end());
      std::vector<fs::path> raw(co_raw.begin(), co_raw.end());
      const auto summary = tt::run_stage(
          "correlate", [&] { return tt::correlate_files(inputs, co_out, tt::PathOptions{co_drop}, raw); });
      print_summary(summary);
    } else if (*rep) {
      const auto report = tt::run_stage("report", [&] {
        return tt::summarize(tt::read_paths_summary(rep_before), tt::read_paths_summary(rep_after));
      });
      const fs::path out = rep_out.empty() ? fs::path(rep_after).parent_path() / "report.json" : fs::path(rep_out);
      tt::run_stage("report", [&] {
        auto f = tt::open_output(out);
        f << tt::report_to_json(report).dump(2) << '\n';
      });
      std::cout << tt::render_table(report);
    } else if (*pipe) {
      tt::PipelineConfig cfg;
      cfg.workload = pipe_opts.resolve();
      cfg.output_dir = pipe_out;
      if (!pipe_in.empty()) cfg.input_dir = pipe_in;
      cfg.threshold = pipe_threshold;
      if (!cfg.input_dir && pipe->count("--requests") == 0) {
        std::cerr << "pipeline: --requests is required unless --in is given\n";
        return 2;
      }
      const auto result = tt::run_pipeline(cfg);
      if (result.threshold_run)
        std::printf("threshold=%.6g (c_low=%.6g, c_high=%.6g)\n\n", result.threshold, result.threshold_run->clusters.c_low,
                    result.threshold_run->clusters.c_high);
      std::cout << tt::render_table(result.report);
      if (result.size_overlap) std::cout << "warning: simple and complex first-message sizes overlap\n";
      std::cout << "report: " << result.report_file.string() << '\n';
    }
  } catch (const tt::StageError& e) {
    std::cerr << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
