#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "test_util.hpp"
#include "tracetrim/simgen.hpp"
#include "tracetrim/thresholder.hpp"

namespace tracetrim {
namespace {

using namespace tracetrim::testing;

TEST(ExtractFirstSizes, OneSizePerEpisode) {
  const ContextId other{"web1", "httpd", 100, 8};
  const std::vector<RawActivityRecord> stream{
      begin_at(1),       recv_at(2, 80, 200), begin_at(3, other), recv_at(4, 80, 800, other),
      send_at(5, 1000),  end_at(6),
      recv_at(7, 43000, 55, other),  // reply from app tier: not on the service port
      send_at(8, 10, other),         end_at(9, other),
  };
  EXPECT_EQ(extract_first_sizes(stream, 80), (std::vector<double>{200, 800}));
}

TEST(ExtractFirstSizes, OnlyTheFirstMatchingReceiveCounts) {
  const std::vector<RawActivityRecord> stream{begin_at(1), recv_at(2, 80, 300), recv_at(3, 80, 900, web_ctx(), 41001),
                                              end_at(4),   begin_at(5),         end_at(6)};
  EXPECT_EQ(extract_first_sizes(stream, 80), (std::vector<double>{300}));
}

TEST(ExtractFirstSizes, EmptyStream) {
  EXPECT_TRUE(extract_first_sizes({}, 80).empty());
}

TEST(ExtractFirstSizes, MatchesGroundTruthOnGeneratedRun) {
  WorkloadConfig cfg;
  cfg.n_requests = 1000;
  cfg.seed = 42;
  const auto w = generate_workload(cfg);
  auto sizes = extract_first_sizes(w.logs.at("web1"), 80);
  ASSERT_EQ(sizes.size(), 1000u);
  std::vector<double> truth;
  for (const auto& e : w.truth.entries) truth.push_back(static_cast<double>(e.first_size));
  std::sort(sizes.begin(), sizes.end());
  std::sort(truth.begin(), truth.end());
  EXPECT_EQ(sizes, truth);
}

TEST(Kmeans2, WellSeparatedSix) {
  const std::vector<double> xs{100, 120, 140, 900, 920, 940};
  const auto oracle = exhaustive_split(xs);
  EXPECT_DOUBLE_EQ(oracle.c_low, 120);
  EXPECT_DOUBLE_EQ(oracle.c_high, 920);

  const auto c = kmeans2(xs);
  EXPECT_DOUBLE_EQ(c.c_low, 120);
  EXPECT_DOUBLE_EQ(c.c_high, 920);
  EXPECT_LE(c.iterations, 2);
  EXPECT_EQ(c.assignments, (std::vector<std::uint8_t>{0, 0, 0, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(compute_threshold(xs).value, 520);
}

TEST(Kmeans2, OneToFour) {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto oracle = exhaustive_split(xs);
  EXPECT_DOUBLE_EQ(oracle.c_low, 1.5);
  EXPECT_DOUBLE_EQ(oracle.c_high, 3.5);
  const auto c = kmeans2(xs);
  EXPECT_DOUBLE_EQ(c.c_low, 1.5);
  EXPECT_DOUBLE_EQ(c.c_high, 3.5);
  EXPECT_DOUBLE_EQ(c.sse, 1.0);
}

TEST(Kmeans2, DegenerateSingleValue) {
  const std::vector<double> xs{500, 500, 500};
  const auto c = kmeans2(xs);
  EXPECT_EQ(c.c_low, 500);
  EXPECT_EQ(c.c_high, 500);
  EXPECT_EQ(compute_threshold(xs).value, 500);
}

TEST(Kmeans2, EmptyInputIsRejected) {
  EXPECT_THROW(kmeans2(std::vector<double>{}), InvalidInput);
  EXPECT_THROW(compute_threshold(std::vector<double>{}), InvalidInput);
}

TEST(Kmeans2, EquidistantSampleGoesLow) {
  // Initial centroids are 0 and 10, so 5 is a tie on the first assignment.
  const std::vector<double> xs{0, 5, 10};
  const auto c = kmeans2(xs, 1);
  EXPECT_EQ(c.assignments, (std::vector<std::uint8_t>{0, 0, 1}));
  EXPECT_DOUBLE_EQ(c.c_low, 2.5);
  EXPECT_DOUBLE_EQ(c.c_high, 10);
}

TEST(Kmeans2, EscapesLloydLocalOptimum) {
  // Plain Lloyd from (6, 28) settles on {6,16} | {19,23,28} with SSE 90.67;
  // the best split is {6} | {16,19,23,28} with SSE 81.
  const std::vector<double> xs{6, 16, 19, 23, 28};
  const auto c = kmeans2(xs);
  const auto best = testing::exhaustive_split(xs);
  EXPECT_EQ(c.assignments, (std::vector<std::uint8_t>{0, 1, 1, 1, 1}));
  EXPECT_EQ(best.low_count, 1u);
  EXPECT_DOUBLE_EQ(c.c_low, best.c_low);
  EXPECT_DOUBLE_EQ(c.c_high, best.c_high);
  EXPECT_NEAR(c.sse, 81.0, 1e-9);
  for (std::size_t i = 1; i < c.sse_history.size(); ++i) EXPECT_LE(c.sse_history[i], c.sse_history[i - 1]);
}

TEST(Kmeans2, IterationCapIsHonoured) {
  std::mt19937_64 rng(1);
  std::vector<double> xs(1000);
  for (auto& x : xs) x = static_cast<double>(rng() % 1000);
  EXPECT_LE(kmeans2(xs, 1).iterations, 1);
  EXPECT_THROW(kmeans2(xs, 0), InvalidInput);
}

TEST(Kmeans2, RandomInputsKeepInvariants) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    std::vector<double> xs(n);
    for (auto& x : xs) x = static_cast<double>(rng() % 5000);
    const auto c = kmeans2(xs);
    EXPECT_LE(c.c_low, c.c_high);
    for (std::size_t i = 1; i < c.sse_history.size(); ++i) EXPECT_LE(c.sse_history[i], c.sse_history[i - 1] + 1e-9);
    const auto t = threshold_from(c).value;
    EXPECT_GE(t, c.c_low);
    EXPECT_LE(t, c.c_high);
    if (c.iterations < 100) {
      for (std::size_t i = 0; i < n; ++i) {
        const double dl = std::abs(xs[i] - c.c_low), dh = std::abs(xs[i] - c.c_high);
        EXPECT_EQ(c.assignments[i], dl <= dh ? 0 : 1);
      }
    }
    // Deterministic: same input, same output.
    const auto again = kmeans2(xs);
    EXPECT_EQ(again.assignments, c.assignments);
    EXPECT_EQ(again.c_low, c.c_low);
  }
}

TEST(Kmeans2, ScaleEquivariance) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> xs(50);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = (i < 25 ? 100.0 : 700.0) + static_cast<double>(rng() % 64);
    const double a = 0.25 * static_cast<double>(1 + rng() % 16);  // exact in binary
    std::vector<double> scaled(xs);
    for (auto& x : scaled) x *= a;
    const auto c = kmeans2(xs), s = kmeans2(scaled);
    EXPECT_EQ(s.assignments, c.assignments);
    EXPECT_NEAR(s.c_low, a * c.c_low, 1e-9 * a * c.c_high);
    EXPECT_NEAR(s.c_high, a * c.c_high, 1e-9 * a * c.c_high);
    EXPECT_NEAR(threshold_from(s).value, a * threshold_from(c).value, 1e-9 * a * c.c_high);
  }
}

TEST(ComputeThreshold, SeparatesGeneratedKinds) {
  WorkloadConfig cfg;
  cfg.n_requests = 1000;
  cfg.seed = 42;
  const auto w = generate_workload(cfg);
  std::uint64_t max_simple = 0, min_complex = UINT64_MAX;
  for (const auto& e : w.truth.entries) {
    if (e.kind == PathClass::Simple) max_simple = std::max(max_simple, e.first_size);
    else min_complex = std::min(min_complex, e.first_size);
  }
  const auto t = compute_threshold(extract_first_sizes(w.logs.at("web1"), 80)).value;
  EXPECT_GT(t, static_cast<double>(max_simple));
  EXPECT_LT(t, static_cast<double>(min_complex));
}

}  // namespace
}  // namespace tracetrim
