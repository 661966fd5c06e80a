#pragma once

#include <random>
#include <vector>

#include "test_util.hpp"
#include "tracetrim/trace_model.hpp"

namespace tracetrim::testing {

// Arbitrary (not necessarily well-formed) single-node streams: a few threads,
// random activity types, first-tier and other ports, sizes around a threshold.
inline std::vector<RawActivityRecord> fuzz_stream(std::mt19937_64& rng) {
  const std::size_t n = rng() % 24;
  std::vector<RawActivityRecord> out;
  Nanos ts = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const ContextId c{"web1", "httpd", 100, static_cast<std::uint32_t>(1 + rng() % 3)};
    ts += rng() % 3;
    switch (rng() % 4) {
      case 0: out.push_back(begin_at(ts, c)); break;
      case 1: out.push_back(end_at(ts, c)); break;
      case 2: out.push_back(send_at(ts, rng() % 1000, c)); break;
      default: {
        const std::uint16_t port = rng() % 3 == 0 ? 8080 : 80;
        out.push_back(recv_at(ts, port, rng() % 1000, c, static_cast<std::uint16_t>(40000 + rng() % 5)));
      }
    }
  }
  return out;
}

}  // namespace tracetrim::testing
