#pragma once

// Message-size threshold learned with two-cluster k-means over the sizes of
// the first client message of each first-tier episode.

#include <algorithm>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "tracetrim/errors.hpp"
#include "tracetrim/trace_model.hpp"

namespace tracetrim {

struct SizeClusters {
  double c_low = 0;
  double c_high = 0;
  std::vector<std::uint8_t> assignments;  // 0 = low, 1 = high; parallel to the input
  int iterations = 0;
  double sse = 0;
  std::vector<double> sse_history;  // SSE after each update step
};

struct Threshold {
  double value = 0;
};

// Size of the first RECEIVE on `first_tier_port` inside each episode, in stream order.
inline std::vector<double> extract_first_sizes(std::span<const RawActivityRecord> records,
                                               std::uint16_t first_tier_port) {
  std::unordered_map<ContextId, bool> awaiting_first;
  std::vector<double> sizes;
  for (const auto& r : records) {
    switch (r.type) {
      case ActivityType::Begin:
        awaiting_first[r.ctx] = true;
        break;
      case ActivityType::End:
        awaiting_first[r.ctx] = false;
        break;
      case ActivityType::Receive: {
        auto it = awaiting_first.find(r.ctx);
        if (it != awaiting_first.end() && it->second && r.msg && r.msg->dst_port == first_tier_port) {
          sizes.push_back(static_cast<double>(r.size_bytes));
          it->second = false;
        }
        break;
      }
      case ActivityType::Send:
        break;
    }
  }
  return sizes;
}

namespace kmeans_detail {

inline void update(std::span<const double> sizes, SizeClusters& out) {
  double sum[2] = {0, 0};
  std::size_t n[2] = {0, 0};
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    sum[out.assignments[i]] += sizes[i];
    ++n[out.assignments[i]];
  }
  if (n[0] > 0) out.c_low = sum[0] / static_cast<double>(n[0]);
  if (n[1] > 0) out.c_high = sum[1] / static_cast<double>(n[1]);

  double sse = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double d = sizes[i] - (out.assignments[i] == 0 ? out.c_low : out.c_high);
    sse += d * d;
  }
  out.sse = sse;
  out.sse_history.push_back(sse);
  ++out.iterations;
}

// One Hartigan-Wong transfer sweep: move a point when doing so lowers total
// SSE, accounting for the size change of both clusters. Returns whether any
// point moved.
inline bool transfer_sweep(std::span<const double> sizes, SizeClusters& out) {
  double c[2] = {out.c_low, out.c_high};
  std::size_t n[2] = {0, 0};
  for (auto a : out.assignments) ++n[a];
  bool moved = false;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const std::uint8_t a = out.assignments[i], b = 1 - a;
    if (n[a] < 2) continue;
    const double x = sizes[i];
    const double na = static_cast<double>(n[a]), nb = static_cast<double>(n[b]);
    const double loss = na / (na - 1) * (x - c[a]) * (x - c[a]);
    const double gain = nb / (nb + 1) * (x - c[b]) * (x - c[b]);
    if (!(gain < loss * (1 - 1e-12))) continue;
    c[a] = (na * c[a] - x) / (na - 1);
    c[b] = (nb * c[b] + x) / (nb + 1);
    --n[a];
    ++n[b];
    out.assignments[i] = b;
    moved = true;
  }
  return moved;
}

}  // namespace kmeans_detail

// Lloyd iterations from (min, max). Ties go to the low cluster; an emptied
// cluster keeps its previous centroid. When Lloyd stalls, a single-point
// transfer sweep tries to escape the local optimum, then Lloyd resumes.
// Every round counts against max_iters.
inline SizeClusters kmeans2(std::span<const double> sizes, int max_iters = 100) {
  if (sizes.empty()) throw InvalidInput("kmeans2: empty sample set");
  if (max_iters < 1) throw InvalidInput("kmeans2: max_iters must be positive");

  const auto [mn, mx] = std::minmax_element(sizes.begin(), sizes.end());
  SizeClusters out;
  out.c_low = *mn;
  out.c_high = *mx;
  out.assignments.assign(sizes.size(), 0);

  bool first = true;
  while (out.iterations < max_iters) {
    bool changed = first;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const double x = sizes[i];
      const std::uint8_t label = (x - out.c_low) * (x - out.c_low) <= (x - out.c_high) * (x - out.c_high) ? 0 : 1;
      if (label != out.assignments[i]) {
        out.assignments[i] = label;
        changed = true;
      }
    }
    if (!changed && !kmeans_detail::transfer_sweep(sizes, out)) break;
    first = false;
    kmeans_detail::update(sizes, out);
  }
  return out;
}

inline Threshold threshold_from(const SizeClusters& clusters) {
  return {(clusters.c_low + clusters.c_high) / 2.0};
}

inline Threshold compute_threshold(std::span<const double> sizes, int max_iters = 100) {
  return threshold_from(kmeans2(sizes, max_iters));
}

}  // namespace tracetrim
