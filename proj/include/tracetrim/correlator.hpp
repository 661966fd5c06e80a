#pragma once

// Correlation stage: tuple records from every node are grouped into per-thread
// episodes, SEND/RECEIVE pairs are matched FIFO per message id, and episodes
// linked by cross-episode messages are assembled into causal path trees.
//
// Records are referenced by their index in the caller's input span.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tracetrim/errors.hpp"
#include "tracetrim/trace_model.hpp"

namespace tracetrim {

inline constexpr std::string_view kNoEnclosingEpisode = "no enclosing episode";
inline constexpr std::string_view kUnmatchedMessage = "unmatched message";

struct RecordNote {
  std::size_t index;
  std::string reason;
};

struct EpisodeSplit {
  // Each episode lists record indices sorted by (timestamp_ns, seq).
  std::vector<std::vector<std::size_t>> episodes;
  std::vector<RecordNote> orphans;
};

struct MessageEdge {
  std::size_t send;
  std::size_t receive;
};

struct MessageMatch {
  std::vector<MessageEdge> edges;
  std::vector<RecordNote> unmatched;
};

struct Orphan {
  TupleRecord record;
  std::string reason;
};

struct PathOptions {
  bool drop_degenerate = false;
};

struct PathSet {
  std::vector<CausalPath> paths;
  std::vector<Orphan> orphans;
  // SEND/RECEIVE records with no traced peer. They stay in their path; listed
  // here for diagnosis only.
  std::vector<Orphan> unmatched;
  std::uint64_t degenerate_dropped = 0;
  std::uint64_t degenerate_records = 0;

  std::uint64_t count(PathClass c) const {
    return static_cast<std::uint64_t>(
        std::count_if(paths.begin(), paths.end(), [&](const CausalPath& p) { return p.cls == c; }));
  }
};

namespace correlator_detail {

inline auto order_key(const TupleRecord& t) {
  return std::tie(t.activity.timestamp_ns, t.seq);
}

}  // namespace correlator_detail

inline EpisodeSplit build_episodes(std::span<const TupleRecord> tuples) {
  using correlator_detail::order_key;
  std::map<ContextId, std::vector<std::size_t>> by_thread;
  for (std::size_t i = 0; i < tuples.size(); ++i) by_thread[tuples[i].activity.ctx].push_back(i);

  EpisodeSplit out;
  for (auto& [ctx, idx] : by_thread) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return order_key(tuples[a]) < order_key(tuples[b]); });
    std::optional<std::vector<std::size_t>> open;
    for (std::size_t i : idx) {
      const auto type = tuples[i].activity.type;
      if (type == ActivityType::Begin) {
        if (open) out.episodes.push_back(std::move(*open));  // missing END
        open.emplace(1, i);
      } else if (!open) {
        out.orphans.push_back({i, std::string(kNoEnclosingEpisode)});
      } else {
        open->push_back(i);
        if (type == ActivityType::End) {
          out.episodes.push_back(std::move(*open));
          open.reset();
        }
      }
    }
    if (open) out.episodes.push_back(std::move(*open));
  }
  std::sort(out.episodes.begin(), out.episodes.end(), [&](const auto& a, const auto& b) {
    const auto& ra = tuples[a.front()];
    const auto& rb = tuples[b.front()];
    return std::tie(ra.activity.timestamp_ns, ra.activity.ctx) < std::tie(rb.activity.timestamp_ns, rb.activity.ctx);
  });
  return out;
}

inline MessageMatch match_messages(std::span<const TupleRecord> tuples) {
  std::map<MessageId, std::vector<std::size_t>> by_msg;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const auto& a = tuples[i].activity;
    if (is_message(a.type) && a.msg) by_msg[*a.msg].push_back(i);
  }

  // SEND sorts before RECEIVE at equal timestamps so a same-instant delivery matches.
  auto key = [&](std::size_t i) {
    const auto& t = tuples[i];
    return std::make_tuple(t.activity.timestamp_ns, t.activity.type == ActivityType::Send ? 0 : 1,
                           std::cref(t.activity.ctx), t.seq);
  };

  MessageMatch out;
  for (auto& [msg, idx] : by_msg) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    std::vector<std::size_t> pending;
    std::size_t head = 0;
    for (std::size_t i : idx) {
      if (tuples[i].activity.type == ActivityType::Send) {
        pending.push_back(i);
      } else if (head < pending.size()) {
        out.edges.push_back({pending[head++], i});
      } else {
        out.unmatched.push_back({i, std::string(kUnmatchedMessage)});
      }
    }
    for (; head < pending.size(); ++head) out.unmatched.push_back({pending[head], std::string(kUnmatchedMessage)});
  }
  std::sort(out.edges.begin(), out.edges.end(),
            [&](const MessageEdge& a, const MessageEdge& b) { return key(a.send) < key(b.send); });
  return out;
}

inline PathSet build_paths(std::span<const TupleRecord> tuples, const EpisodeSplit& split, const MessageMatch& match,
                           const PathOptions& options = {}) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  const auto& episodes = split.episodes;

  std::vector<std::size_t> episode_of(tuples.size(), kNone);
  for (std::size_t e = 0; e < episodes.size(); ++e)
    for (std::size_t i : episodes[e]) episode_of[i] = e;

  std::vector<std::size_t> sender_of(tuples.size(), kNone);
  for (const auto& edge : match.edges) sender_of[edge.receive] = edge.send;

  // An episode is started by its first RECEIVE. When that message was sent
  // from another episode, the sender is the parent; later RECEIVEs are replies
  // from children and never create links.
  std::vector<std::size_t> parent(episodes.size(), kNone);
  std::vector<std::size_t> via_send(episodes.size(), kNone);
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    auto first = std::find_if(episodes[e].begin(), episodes[e].end(),
                              [&](std::size_t i) { return tuples[i].activity.type == ActivityType::Receive; });
    if (first == episodes[e].end()) continue;
    const std::size_t s = sender_of[*first];
    if (s == kNone || episode_of[s] == kNone || episode_of[s] == e) continue;
    parent[e] = episode_of[s];
    via_send[e] = s;
  }

  std::vector<std::vector<std::size_t>> children(episodes.size());
  for (std::size_t e = 0; e < episodes.size(); ++e)
    if (parent[e] != kNone) children[parent[e]].push_back(e);
  for (auto& c : children) {
    std::sort(c.begin(), c.end(), [&](std::size_t a, std::size_t b) {
      return correlator_detail::order_key(tuples[via_send[a]]) < correlator_detail::order_key(tuples[via_send[b]]);
    });
  }

  std::vector<bool> visited(episodes.size(), false);
  auto materialize = [&](auto&& self, std::size_t e) -> CausalPath {
    if (visited[e]) throw InternalError("episode reachable twice while assembling paths");
    visited[e] = true;
    CausalPath p;
    p.root_episode.ctx = tuples[episodes[e].front()].activity.ctx;
    for (std::size_t i : episodes[e]) p.root_episode.records.push_back(tuples[i]);
    p.flat = p.root_episode.records;
    for (std::size_t c : children[e]) {
      ChildLink link{tuples[via_send[c]], self(self, c)};
      p.flat.insert(p.flat.end(), link.child.flat.begin(), link.child.flat.end());
      p.children.push_back(std::move(link));
    }
    p.tiers = tiers_of(p.flat);
    p.cls = classify_path(p);
    return p;
  };

  PathSet out;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    if (parent[e] != kNone) continue;
    CausalPath p = materialize(materialize, e);
    const bool has_message = std::any_of(p.flat.begin(), p.flat.end(),
                                         [](const TupleRecord& t) { return is_message(t.activity.type); });
    if (options.drop_degenerate && !has_message) {
      ++out.degenerate_dropped;
      out.degenerate_records += p.flat.size();
      continue;
    }
    out.paths.push_back(std::move(p));
  }
  if (std::find(visited.begin(), visited.end(), false) != visited.end())
    throw InternalError("cyclic dependency between episodes");

  for (const auto& o : split.orphans) out.orphans.push_back({tuples[o.index], o.reason});
  for (const auto& u : match.unmatched) {
    if (episode_of[u.index] != kNone) out.unmatched.push_back({tuples[u.index], u.reason});
  }
  return out;
}

inline PathSet correlate(std::span<const TupleRecord> tuples, const PathOptions& options = {}) {
  return build_paths(tuples, build_episodes(tuples), match_messages(tuples), options);
}

// Ordered (type, ctx, msg, size) list of a path's flat records; equal for the
// same request regardless of which branch produced it.
struct SignatureItem {
  ActivityType type;
  ContextId ctx;
  std::optional<MessageId> msg;
  std::uint64_t size_bytes;

  friend auto operator<=>(const SignatureItem& a, const SignatureItem& b) {
    return std::tie(a.type, a.ctx, a.msg, a.size_bytes) <=> std::tie(b.type, b.ctx, b.msg, b.size_bytes);
  }
  friend bool operator==(const SignatureItem&, const SignatureItem&) = default;
};

using PathSignature = std::vector<SignatureItem>;

inline PathSignature signature(const CausalPath& path) {
  PathSignature sig;
  sig.reserve(path.flat.size());
  for (const auto& t : path.flat)
    sig.push_back({t.activity.type, t.activity.ctx, t.activity.msg, t.activity.size_bytes});
  return sig;
}

}  // namespace tracetrim
