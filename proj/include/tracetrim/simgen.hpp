#pragma once

// Deterministic three-tier workload generator (web1 -> app1 -> db1).
//
// A SIMPLE request is served by one web1 thread:
//   BEGIN, RECEIVE(client), SEND(client), END
// A COMPLEX request fans out through all three tiers:
//   web1: BEGIN, RECEIVE(client), SEND(app1), RECEIVE(app1), SEND(client), END
//   app1: BEGIN, RECEIVE(web1), SEND(db1), RECEIVE(db1), SEND(web1), END
//   db1:  BEGIN, RECEIVE(app1), SEND(app1), END

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tracetrim/errors.hpp"
#include "tracetrim/log_codec.hpp"
#include "tracetrim/trace_model.hpp"

namespace tracetrim {

struct SizeDist {
  double mean_bytes = 0;
  double stddev_bytes = 0;
};

struct WorkloadConfig {
  std::uint64_t n_requests = 1000;
  double simple_frac = 0.8;
  std::uint64_t seed = 0;
  std::uint16_t first_tier_port = 80;
  SizeDist simple_size{200, 20};
  SizeDist complex_size{800, 50};
  std::uint32_t threads_per_tier = 8;
  Nanos mean_interarrival_ns = 1'000'000;
  Nanos service_time_ns = 100'000;
  Nanos network_latency_ns = 20'000;

  void validate() const {
    if (!(simple_frac >= 0.0 && simple_frac <= 1.0)) throw InvalidInput("simple_frac must lie in [0, 1]");
    if (first_tier_port == 0) throw InvalidInput("first_tier_port must be non-zero");
    if (threads_per_tier == 0) throw InvalidInput("threads_per_tier must be positive");
    if (mean_interarrival_ns == 0) throw InvalidInput("mean_interarrival_ns must be positive");
    if (service_time_ns == 0) throw InvalidInput("service_time_ns must be positive");
    if (network_latency_ns == 0) throw InvalidInput("network_latency_ns must be positive");
    for (const auto* d : {&simple_size, &complex_size})
      if (!std::isfinite(d->mean_bytes) || !std::isfinite(d->stddev_bytes) || d->stddev_bytes < 0)
        throw InvalidInput("size distribution needs a finite mean and non-negative stddev");
  }
};

struct GroundTruthEntry {
  std::uint64_t request_id = 0;
  PathClass kind = PathClass::Simple;
  std::uint64_t first_size = 0;
  std::vector<ContextId> contexts;  // handling thread per tier, web1 first
};

struct GroundTruth {
  std::vector<GroundTruthEntry> entries;

  std::uint64_t count(PathClass kind) const {
    return static_cast<std::uint64_t>(
        std::count_if(entries.begin(), entries.end(), [&](const auto& e) { return e.kind == kind; }));
  }

  // True when some simple first message is at least as large as some complex one.
  bool sizes_overlap() const {
    std::uint64_t max_simple = 0;
    std::uint64_t min_complex = std::numeric_limits<std::uint64_t>::max();
    for (const auto& e : entries) {
      if (e.kind == PathClass::Simple) max_simple = std::max(max_simple, e.first_size);
      else min_complex = std::min(min_complex, e.first_size);
    }
    return count(PathClass::Simple) > 0 && count(PathClass::Complex) > 0 && max_simple >= min_complex;
  }
};

inline const std::array<std::string, 3>& tier_hosts() {
  static const std::array<std::string, 3> hosts{"web1", "app1", "db1"};
  return hosts;
}

struct Workload {
  std::map<std::string, std::vector<RawActivityRecord>> logs;  // host -> timestamp-ordered stream
  GroundTruth truth;
};

namespace simgen_detail {

// All draws go through these helpers so that output does not depend on the
// standard library's distribution implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do v = rng(); while (v >= limit);
  return v % bound;
}

inline double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline std::uint64_t draw_size(std::mt19937_64& rng, const SizeDist& d) {
  const double v = std::round(d.mean_bytes + d.stddev_bytes * standard_normal(rng));
  return v < 1.0 ? 1 : static_cast<std::uint64_t>(v);
}

inline std::uint64_t draw_between(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  return lo + uniform_below(rng, hi - lo + 1);
}

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Tier {
  std::string host;
  std::string program;
  std::string ip;
  std::uint16_t port;
  std::uint32_t pid;
  std::vector<Nanos> free_after;  // per thread: timestamp of its last END
  std::vector<bool> used;

  // Earliest thread able to BEGIN at or after `ready`; ties go to the lowest tid.
  std::pair<std::uint32_t, Nanos> acquire(Nanos ready) const {
    std::uint32_t best = 0;
    Nanos best_start = std::numeric_limits<Nanos>::max();
    for (std::uint32_t i = 0; i < free_after.size(); ++i) {
      const Nanos start = used[i] ? std::max(ready, free_after[i] + 1) : ready;
      if (start < best_start) {
        best = i;
        best_start = start;
      }
    }
    return {best, best_start};
  }

  void release(std::uint32_t thread, Nanos end) {
    free_after[thread] = end;
    used[thread] = true;
  }

  ContextId ctx(std::uint32_t thread) const { return {host, program, pid, thread + 1}; }
};

// Ephemeral source ports: a cursor sweeping 40000..65000 that skips ports
// still owned by a request in flight at allocation time.
class PortPool {
 public:
  static constexpr std::uint16_t kFirst = 40000;
  static constexpr std::uint16_t kLast = 65000;

  std::uint16_t allocate(Nanos now) {
    for (std::size_t tries = 0; tries < busy_until_.size(); ++tries) {
      const std::size_t idx = cursor_;
      cursor_ = (cursor_ + 1) % busy_until_.size();
      if (!in_use_[idx] || busy_until_[idx] < now) {
        in_use_[idx] = true;
        busy_until_[idx] = std::numeric_limits<Nanos>::max();
        return static_cast<std::uint16_t>(kFirst + idx);
      }
    }
    throw InternalError("ephemeral port range exhausted");
  }

  void release(std::uint16_t port, Nanos last_use) { busy_until_[port - kFirst] = last_use; }

 private:
  std::size_t cursor_ = 0;
  std::vector<Nanos> busy_until_ = std::vector<Nanos>(kLast - kFirst + 1, 0);
  std::vector<bool> in_use_ = std::vector<bool>(kLast - kFirst + 1, false);
};

inline const std::string kClientIp = "10.0.0.9";

}  // namespace simgen_detail

// Exactly round(simple_frac * n) SIMPLE kinds, the rest COMPLEX, shuffled by seed.
inline std::vector<PathClass> request_mix(std::uint64_t n_requests, double simple_frac, std::uint64_t seed) {
  if (!(simple_frac >= 0.0 && simple_frac <= 1.0)) throw InvalidInput("simple_frac must lie in [0, 1]");
  const auto n_simple = static_cast<std::uint64_t>(std::llround(simple_frac * static_cast<double>(n_requests)));
  std::vector<PathClass> kinds(n_requests, PathClass::Complex);
  std::fill_n(kinds.begin(), std::min(n_simple, n_requests), PathClass::Simple);
  std::mt19937_64 rng(seed);
  for (std::uint64_t i = n_requests; i > 1; --i) {
    const auto j = simgen_detail::uniform_below(rng, i);
    std::swap(kinds[i - 1], kinds[j]);
  }
  return kinds;
}

inline Workload generate_workload(const WorkloadConfig& cfg) {
  using namespace simgen_detail;
  cfg.validate();

  const auto kinds = request_mix(cfg.n_requests, cfg.simple_frac, cfg.seed);
  std::mt19937_64 rng(splitmix(cfg.seed));

  auto make_tier = [&](std::string host, std::string program, std::string ip, std::uint16_t port,
                       std::uint32_t pid) {
    return Tier{std::move(host), std::move(program), std::move(ip), port, pid,
                std::vector<Nanos>(cfg.threads_per_tier, 0),
                std::vector<bool>(cfg.threads_per_tier, false)};
  };
  Tier web = make_tier("web1", "httpd", "10.0.0.1", cfg.first_tier_port, 100);
  Tier app = make_tier("app1", "jboss", "10.0.0.2", 8080, 200);
  Tier db = make_tier("db1", "mysqld", "10.0.0.3", 3306, 300);

  // Records carry an emission index so that equal timestamps keep a stable order.
  struct Emitted {
    RawActivityRecord rec;
    std::uint64_t order;
  };
  std::map<std::string, std::vector<Emitted>> streams;
  for (const auto& h : tier_hosts()) streams[h];
  std::uint64_t order = 0;
  auto emit = [&](const Tier& tier, std::uint32_t thread, ActivityType type, Nanos ts,
                  std::optional<MessageId> msg = std::nullopt, std::uint64_t size = 0) {
    RawActivityRecord r{type, ts, tier.ctx(thread), std::move(msg), size};
    streams[tier.host].push_back({std::move(r), order++});
  };

  const Nanos S = cfg.service_time_ns;
  const Nanos L = cfg.network_latency_ns;
  PortPool ports;
  Workload out;
  out.truth.entries.reserve(kinds.size());

  Nanos arrival = 0;
  for (std::uint64_t id = 0; id < kinds.size(); ++id) {
    const double gap = -static_cast<double>(cfg.mean_interarrival_ns) * std::log1p(-uniform01(rng));
    arrival += std::max<Nanos>(1, static_cast<Nanos>(std::llround(gap)));

    const PathClass kind = kinds[id];
    GroundTruthEntry truth{id, kind, 0, {}};
    const std::uint64_t first_size = draw_size(rng, kind == PathClass::Simple ? cfg.simple_size : cfg.complex_size);
    truth.first_size = first_size;

    const std::uint16_t client_port = ports.allocate(arrival);
    const MessageId from_client{kClientIp, client_port, web.ip, web.port};
    const MessageId to_client{web.ip, web.port, kClientIp, client_port};

    auto [wt, w0] = web.acquire(arrival);
    truth.contexts.push_back(web.ctx(wt));
    emit(web, wt, ActivityType::Begin, w0);
    emit(web, wt, ActivityType::Receive, w0 + 1, from_client, first_size);

    Nanos request_done = 0;
    if (kind == PathClass::Simple) {
      const Nanos w1 = w0 + 1 + S;
      emit(web, wt, ActivityType::Send, w1, to_client, draw_between(rng, 500, 20000));
      emit(web, wt, ActivityType::End, w1 + 1);
      web.release(wt, w1 + 1);
      request_done = w1 + 1;
    } else {
      const std::uint16_t web_port = ports.allocate(arrival);
      const std::uint16_t app_port = ports.allocate(arrival);
      const MessageId web_to_app{web.ip, web_port, app.ip, app.port};
      const MessageId app_to_web{app.ip, app.port, web.ip, web_port};
      const MessageId app_to_db{app.ip, app_port, db.ip, db.port};
      const MessageId db_to_app{db.ip, db.port, app.ip, app_port};

      const Nanos w1 = w0 + 1 + S;
      const std::uint64_t web_req = draw_between(rng, 100, 4000);
      emit(web, wt, ActivityType::Send, w1, web_to_app, web_req);

      auto [at, a0] = app.acquire(w1 + L);
      truth.contexts.push_back(app.ctx(at));
      emit(app, at, ActivityType::Begin, a0);
      emit(app, at, ActivityType::Receive, a0 + 1, web_to_app, web_req);
      const Nanos a1 = a0 + 1 + S;
      const std::uint64_t app_req = draw_between(rng, 100, 4000);
      emit(app, at, ActivityType::Send, a1, app_to_db, app_req);

      auto [dt, d0] = db.acquire(a1 + L);
      truth.contexts.push_back(db.ctx(dt));
      emit(db, dt, ActivityType::Begin, d0);
      emit(db, dt, ActivityType::Receive, d0 + 1, app_to_db, app_req);
      const Nanos d1 = d0 + 1 + S;
      const std::uint64_t db_resp = draw_between(rng, 100, 4000);
      emit(db, dt, ActivityType::Send, d1, db_to_app, db_resp);
      emit(db, dt, ActivityType::End, d1 + 1);
      db.release(dt, d1 + 1);

      const Nanos a2 = d1 + L;
      emit(app, at, ActivityType::Receive, a2, db_to_app, db_resp);
      const Nanos a3 = a2 + S;
      const std::uint64_t app_resp = draw_between(rng, 100, 4000);
      emit(app, at, ActivityType::Send, a3, app_to_web, app_resp);
      emit(app, at, ActivityType::End, a3 + 1);
      app.release(at, a3 + 1);

      const Nanos w2 = a3 + L;
      emit(web, wt, ActivityType::Receive, w2, app_to_web, app_resp);
      const Nanos w3 = w2 + S;
      emit(web, wt, ActivityType::Send, w3, to_client, draw_between(rng, 500, 20000));
      emit(web, wt, ActivityType::End, w3 + 1);
      web.release(wt, w3 + 1);
      request_done = w3 + 1;

      ports.release(web_port, request_done);
      ports.release(app_port, request_done);
    }
    ports.release(client_port, request_done);
    out.truth.entries.push_back(std::move(truth));
  }

  for (auto& [host, stream] : streams) {
    std::sort(stream.begin(), stream.end(), [](const Emitted& a, const Emitted& b) {
      return a.rec.timestamp_ns != b.rec.timestamp_ns ? a.rec.timestamp_ns < b.rec.timestamp_ns
                                                      : a.order < b.order;
    });
    auto& log = out.logs[host];
    log.reserve(stream.size());
    for (auto& e : stream) log.push_back(std::move(e.rec));
  }
  return out;
}

struct WrittenWorkload {
  std::map<std::string, std::filesystem::path> log_files;
  std::map<std::string, std::uint64_t> log_bytes;
  std::filesystem::path ground_truth_file;
};

inline void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  auto out = open_output(path);
  out << "request_id,kind,first_size\n";
  for (const auto& e : truth.entries) out << e.request_id << ',' << to_string(e.kind) << ',' << e.first_size << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline GroundTruth read_ground_truth(const std::filesystem::path& path) {
  auto in = open_input(path);
  GroundTruth truth;
  std::string header;
  std::getline(in, header);
  for_each_line(in, [&](std::string_view line, std::size_t no) {
    auto f = codec_detail::split_exact<3>(line, ',', false, no + 1);
    GroundTruthEntry e;
    e.request_id = codec_detail::parse_uint<std::uint64_t>(f[0], no + 1, "request_id");
    if (f[1] == "SIMPLE") e.kind = PathClass::Simple;
    else if (f[1] == "COMPLEX") e.kind = PathClass::Complex;
    else throw ParseError(no + 1, "kind", "expected SIMPLE or COMPLEX");
    e.first_size = codec_detail::parse_uint<std::uint64_t>(f[2], no + 1, "first_size");
    truth.entries.push_back(std::move(e));
  });
  return truth;
}

// Writes <dir>/<host>.log for every tier and <dir>/ground_truth.csv.
inline WrittenWorkload write_workload(const Workload& w, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  WrittenWorkload out;
  for (const auto& host : tier_hosts()) {
    const auto path = dir / (host + ".log");
    auto it = w.logs.find(host);
    static const std::vector<RawActivityRecord> kEmpty;
    out.log_bytes[host] = write_lines(path, it == w.logs.end() ? kEmpty : it->second);
    out.log_files[host] = path;
  }
  out.ground_truth_file = dir / "ground_truth.csv";
  write_ground_truth(out.ground_truth_file, w.truth);
  return out;
}

}  // namespace tracetrim
