#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "fuzz_streams.hpp"
#include "oracles.hpp"
#include "test_util.hpp"
#include "tracetrim/eliminator.hpp"
#include "tracetrim/simgen.hpp"

namespace tracetrim {
namespace {

using namespace tracetrim::testing;

const EliminationConfig kElim{true, 500.0, 80};

std::vector<Decision> run_steps(StateMap& states, const std::vector<RawActivityRecord>& rs,
                                const EliminationConfig& cfg = kElim) {
  std::vector<Decision> out;
  for (const auto& r : rs) out.push_back(step(states, r, cfg).decision);
  return out;
}

constexpr Decision E = Decision::Emit;
constexpr Decision D = Decision::Drop;

TEST(Step, LargeFirstMessageKeepsEverything) {
  StateMap states;
  const auto d = run_steps(states, {begin_at(1), recv_at(2, 80, 800), send_at(3, 4000), end_at(4)});
  EXPECT_EQ(d, (std::vector<Decision>{E, E, E, E}));
  EXPECT_EQ(states.at(web_ctx()), ThreadState::End);
}

TEST(Step, SmallFirstMessageKeepsOnlyBoundaries) {
  StateMap states;
  const auto d = run_steps(states, {begin_at(1), recv_at(2, 80, 120), send_at(3, 4000), end_at(4)});
  EXPECT_EQ(d, (std::vector<Decision>{E, D, D, E}));
  EXPECT_EQ(states.at(web_ctx()), ThreadState::End);
}

TEST(Step, FirstTierReceiveInComplexStateFallsThrough) {
  StateMap states{{web_ctx(), ThreadState::Complex}};
  const auto r = step(states, recv_at(5, 80, 800), kElim);
  EXPECT_EQ(r.decision, Decision::Emit);
  EXPECT_EQ(r.rule, Rule::Other);
  EXPECT_EQ(states.at(web_ctx()), ThreadState::Complex);
}

TEST(Step, SizeEqualToThresholdIsSimple) {
  StateMap states;
  const auto d = run_steps(states, {begin_at(1), recv_at(2, 80, 500)});
  EXPECT_EQ(d, (std::vector<Decision>{E, D}));
  EXPECT_EQ(states.at(web_ctx()), ThreadState::Simple);
}

TEST(Step, ThreadReuseRestartsTheMachine) {
  StateMap states;
  const auto d = run_steps(states, {begin_at(1), recv_at(2, 80, 800), send_at(3, 1), end_at(4),  // complex
                                    begin_at(5), recv_at(6, 80, 100), send_at(7, 1), end_at(8),   // simple
                                    begin_at(9), recv_at(10, 80, 900), send_at(11, 1), end_at(12)});
  EXPECT_EQ(d, (std::vector<Decision>{E, E, E, E, E, D, D, E, E, E, E, E}));
}

TEST(Step, OtherRecordsInStartSimpleOrEndAreDropped) {
  {
    StateMap states;
    EXPECT_EQ(run_steps(states, {begin_at(1), send_at(2, 10)}), (std::vector<Decision>{E, D}));
    EXPECT_EQ(states.at(web_ctx()), ThreadState::Start);
  }
  {
    StateMap states;
    EXPECT_EQ(run_steps(states, {begin_at(1), recv_at(2, 80, 10), recv_at(3, 8080, 999)}),
              (std::vector<Decision>{E, D, D}));
  }
  {
    StateMap states;
    EXPECT_EQ(run_steps(states, {begin_at(1), recv_at(2, 80, 900), end_at(3), send_at(4, 10)}),
              (std::vector<Decision>{E, E, E, D}));
  }
  {
    // non-first-tier RECEIVE in start: Case 2's port test fails, Case 4 drops
    StateMap states;
    EXPECT_EQ(run_steps(states, {begin_at(1), recv_at(2, 8080, 900)}), (std::vector<Decision>{E, D}));
    EXPECT_EQ(states.at(web_ctx()), ThreadState::Start);
  }
}

TEST(Step, UnmappedThreadIsKeptConservatively) {
  StateMap states;
  const auto r = step(states, send_at(1, 10), kElim);
  EXPECT_EQ(r.decision, Decision::Emit);
  EXPECT_EQ(r.rule, Rule::Unmapped);
  EXPECT_TRUE(states.empty());
  // a first-tier RECEIVE with no BEGIN seen is also kept and does not create state
  EXPECT_EQ(step(states, recv_at(2, 80, 10), kElim).decision, Decision::Emit);
  EXPECT_TRUE(states.empty());
}

TEST(Step, DisabledEliminationEmitsEverything) {
  StateMap states;
  const EliminationConfig off{false, std::nullopt, 80};
  EXPECT_EQ(run_steps(states, {begin_at(1), recv_at(2, 80, 1), send_at(3, 1), end_at(4)}, off),
            (std::vector<Decision>{E, E, E, E}));
}

TEST(EliminationConfig, ThresholdRequiredWhenEliminating) {
  EXPECT_THROW((Transformer{EliminationConfig{true, std::nullopt, 80}}), InvalidInput);
}

TEST(TransformStream, IdentityWithoutElimination) {
  WorkloadConfig cfg;
  cfg.n_requests = 1;
  cfg.simple_frac = 0;
  const auto w = generate_workload(cfg);
  std::vector<RawActivityRecord> all;
  for (const auto& [h, log] : w.logs) all.insert(all.end(), log.begin(), log.end());
  ASSERT_EQ(all.size(), 16u);
  const auto out = transform_stream(all, {false, std::nullopt, 80});
  ASSERT_EQ(out.tuples.size(), 16u);
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(out.tuples[i].seq, i);
    EXPECT_EQ(out.tuples[i].activity, all[i]);
  }
}

TEST(TransformStream, EmptyStream) {
  EXPECT_TRUE(transform_stream({}, kElim).tuples.empty());
}

TEST(TransformStream, Web1CountsFollowRequestSchedule) {
  WorkloadConfig cfg;
  cfg.n_requests = 1000;
  cfg.simple_frac = 0.8;
  cfg.seed = 42;
  const auto w = generate_workload(cfg);
  ASSERT_FALSE(w.truth.sizes_overlap());

  std::uint64_t expect_before = 0, expect_after = 0;
  for (const auto& e : w.truth.entries) {
    expect_before += schedule_for(e.kind).web1;
    expect_after += web1_tuples_after_elimination(e.kind);
  }
  EXPECT_EQ(expect_before, 800u * 4 + 200u * 6);
  EXPECT_EQ(expect_after, 800u * 2 + 200u * 6);

  const auto& web = w.logs.at("web1");
  const auto before = transform_stream(web, {false, std::nullopt, 80});
  const auto after = transform_stream(web, {true, 500.0, 80});
  EXPECT_EQ(before.tuples.size(), 4400u);
  EXPECT_EQ(after.tuples.size(), 2800u);
  EXPECT_EQ(after.stats.dropped, 1600u);
  EXPECT_EQ(after.stats.unmapped_emitted, 0u);
  for (std::size_t i = 0; i < after.tuples.size(); ++i) EXPECT_EQ(after.tuples[i].seq, i);
}

TEST(TransformStream, ComplexRequestsSurviveAndSimpleMessagesDoNot) {
  WorkloadConfig cfg;
  cfg.n_requests = 400;
  cfg.simple_frac = 0.6;
  cfg.seed = 8;
  cfg.mean_interarrival_ns = 40'000;
  const auto w = generate_workload(cfg);
  const auto after = transform_stream(w.logs.at("web1"), kElim);
  std::uint64_t messages = 0;
  for (const auto& t : after.tuples) messages += is_message(t.activity.type);
  // simple requests leave no SEND/RECEIVE; complex ones keep all four
  EXPECT_EQ(messages, 4 * w.truth.count(PathClass::Complex));
}

std::multiset<std::string> as_multiset(const std::vector<TupleRecord>& ts) {
  std::multiset<std::string> out;
  for (const auto& t : ts) out.insert(serialize_raw(t.activity));
  return out;
}

TEST(TransformStream, EliminatedOutputIsSubsetOnFuzzedStreams) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 5000; ++trial) {
    const auto stream = fuzz_stream(rng);
    const double threshold = static_cast<double>(rng() % 1000);
    const auto full = as_multiset(transform_stream(stream, {false, std::nullopt, 80}).tuples);
    const auto kept = as_multiset(transform_stream(stream, {true, threshold, 80}).tuples);
    ASSERT_TRUE(std::includes(full.begin(), full.end(), kept.begin(), kept.end()));
  }
}

// Legal ThreadState transitions; "none" is an unmapped thread.
bool legal(std::optional<ThreadState> from, std::optional<ThreadState> to, ActivityType type) {
  if (from == to) return true;
  if (type == ActivityType::Begin) return to == ThreadState::Start;
  if (type == ActivityType::End) return to == ThreadState::End;
  return from == ThreadState::Start && (to == ThreadState::Simple || to == ThreadState::Complex);
}

TEST(Step, TransitionsStayLegalOnFuzzedStreams) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5000; ++trial) {
    StateMap states;
    for (const auto& r : fuzz_stream(rng)) {
      auto before = states.count(r.ctx) ? std::optional(states.at(r.ctx)) : std::nullopt;
      step(states, r, kElim);
      auto after = states.count(r.ctx) ? std::optional(states.at(r.ctx)) : std::nullopt;
      ASSERT_TRUE(legal(before, after, r.type));
    }
  }
}

TEST(TransformFile, ParseErrorsCarryLineNumbers) {
  TempDir dir;
  std::ofstream(dir / "bad.log") << "BEGIN 1 web1 httpd 1 1 - - 0\nRECEIVE 2 web1 httpd 1 1 nonsense 10.0.0.1:80 5\n";
  try {
    transform_file(dir / "bad.log", dir / "bad.tup", kElim);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line_no(), 2u);
    EXPECT_EQ(e.field(), "src");
  }
}

TEST(TransformFile, StatsMatchFiles) {
  TempDir dir;
  WorkloadConfig cfg;
  cfg.n_requests = 300;
  const auto written = write_workload(generate_workload(cfg), dir.path());
  const auto stats = transform_file(written.log_files.at("web1"), dir / "web1.tup", kElim);
  EXPECT_EQ(stats.raw_bytes, std::filesystem::file_size(written.log_files.at("web1")));
  EXPECT_EQ(stats.tuple_bytes, std::filesystem::file_size(dir / "web1.tup"));
  EXPECT_EQ(stats.records_in, stats.tuples_out + stats.dropped);
  const auto from_memory = transform_stream(read_raw_file(written.log_files.at("web1")), kElim);
  EXPECT_EQ(read_tuple_file(dir / "web1.tup"), from_memory.tuples);
}

}  // namespace
}  // namespace tracetrim
