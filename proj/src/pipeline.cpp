#include "droidaudit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include <json.hpp>

#include "droidaudit/error.hpp"

namespace droidaudit::pipeline {

std::optional<CompletedEvent> Reassembler::submit(ChunkRecord chunk) {
  if (chunk.total == 0 || chunk.seq >= chunk.total) {
    throw Error(ErrorCode::InvalidChunk, "event " + std::to_string(chunk.event_id) + " chunk " +
                                             std::to_string(chunk.seq) + " of " +
                                             std::to_string(chunk.total));
  }
  if (completed_.contains(chunk.event_id)) {
    throw Error(ErrorCode::DuplicateChunk,
                "event " + std::to_string(chunk.event_id) + " already completed");
  }
  auto& part = partial_[chunk.event_id];
  if (part.total == 0) {
    part.total = chunk.total;
  } else if (part.total != chunk.total) {
    throw Error(ErrorCode::ConflictingTotal, "event " + std::to_string(chunk.event_id) +
                                                 " declared " + std::to_string(part.total) +
                                                 " and " + std::to_string(chunk.total) +
                                                 " chunks");
  }
  if (auto it = part.chunks.find(chunk.seq); it != part.chunks.end()) {
    if (it->second != chunk.bytes) {
      throw Error(ErrorCode::DuplicateChunk, "event " + std::to_string(chunk.event_id) +
                                                 " chunk " + std::to_string(chunk.seq) +
                                                 " arrived twice with different bytes");
    }
    return std::nullopt;
  }
  part.chunks.emplace(chunk.seq, std::move(chunk.bytes));
  if (part.chunks.size() < part.total) return std::nullopt;

  CompletedEvent done;
  done.event_id = chunk.event_id;
  for (auto& [seq, bytes] : part.chunks) {
    done.payload.insert(done.payload.end(), bytes.begin(), bytes.end());
  }
  partial_.erase(chunk.event_id);
  completed_.insert(chunk.event_id);
  return done;
}

std::vector<IncompleteEvent> Reassembler::pending() const {
  std::vector<IncompleteEvent> out;
  for (const auto& [id, part] : partial_) {
    IncompleteEvent ev{id, part.total, {}};
    for (std::uint32_t seq = 0; seq < part.total; ++seq) {
      if (!part.chunks.contains(seq)) ev.missing.push_back(seq);
    }
    out.push_back(std::move(ev));
  }
  return out;
}

ReassemblyResult reassemble_chunks(std::vector<ChunkRecord> chunks) {
  Reassembler r;
  ReassemblyResult result;
  for (auto& c : chunks) {
    if (auto done = r.submit(std::move(c))) result.completed.push_back(std::move(*done));
  }
  result.incomplete = r.pending();
  return result;
}

std::string_view to_string(Policy policy) noexcept {
  return policy == Policy::Overwrite ? "overwrite" : "drop";
}

std::optional<Policy> parse_policy(std::string_view text) noexcept {
  if (text == "overwrite") return Policy::Overwrite;
  if (text == "drop") return Policy::Drop;
  return std::nullopt;
}

void validate(const BufferConfig& c, const Workload& w) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (c.cpu_count <= 0) bad("cpu_count must be positive");
  if (c.cache_capacity == 0) bad("cache_capacity must be positive");
  if (c.ring_capacity == 0) bad("ring_capacity must be positive");
  if (!(c.consumer_drain_rate > 0) || !std::isfinite(c.consumer_drain_rate)) {
    bad("consumer_drain_rate must be positive");
  }
  if (c.flush_threshold == 0 || c.flush_threshold > c.cache_capacity) {
    bad("flush_threshold must be in [1, cache_capacity]");
  }
  if (c.duration_ms <= 0) bad("duration_ms must be positive");
  if (w.rates.size() > static_cast<std::size_t>(c.cpu_count)) bad("more rates than CPUs");
  for (double r : w.rates) {
    if (!(r >= 0) || !std::isfinite(r)) bad("rates must be non-negative");
  }
  for (const auto& b : w.bursts) {
    if (b.cpu < 0 || b.cpu >= c.cpu_count) bad("burst CPU out of range");
    if (b.time_ms < 0 || b.time_ms >= c.duration_ms) bad("burst time outside the run");
  }
  if (w.priority_mix.empty() || w.priority_mix.size() > 3) bad("priority_mix needs 1-3 weights");
  double total = 0;
  for (double p : w.priority_mix) {
    if (!(p >= 0) || !std::isfinite(p)) bad("priority weights must be non-negative");
    total += p;
  }
  if (!(total > 0)) bad("priority weights sum to zero");
}

namespace {

// Portable uniform in [0, 1) from raw engine output.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t poisson(std::mt19937_64& rng, double lambda) {
  std::uint64_t total = 0;
  while (lambda > 0) {
    const double step = std::min(lambda, 30.0);
    lambda -= step;
    const double limit = std::exp(-step);
    double p = 1.0;
    std::uint64_t k = 0;
    do {
      ++k;
      p *= uniform01(rng);
    } while (p > limit);
    total += k - 1;
  }
  return total;
}

struct Event {
  std::uint64_t id;
  int priority;
};

class Simulator {
 public:
  Simulator(const BufferConfig& config, const SimulationOptions& options)
      : config_(config), options_(options), caches_(static_cast<std::size_t>(config.cpu_count)) {}

  void produce(int cpu, int priority) {
    ++report_.produced;
    auto& cache = caches_[static_cast<std::size_t>(cpu)];
    if (cache.size() >= config_.cache_capacity) {
      lose(Event{next_id_++, priority}, false);
      return;
    }
    cache.push_back(Event{next_id_++, priority});
    if (cache.size() >= config_.flush_threshold) flush(cpu);
  }

  void drain_tick() {
    budget_ += config_.consumer_drain_rate;
    auto n = static_cast<std::uint64_t>(std::floor(budget_));
    n = std::min<std::uint64_t>(n, ring_.size());
    deliver(n);
    budget_ -= static_cast<double>(n);
    if (ring_.empty()) budget_ -= std::floor(budget_);
  }

  void finish() {
    deliver(ring_.size());
    for (int cpu = 0; cpu < config_.cpu_count; ++cpu) {
      flush(cpu);
      deliver(ring_.size());
    }
  }

  LossReport report() && { return std::move(report_); }

 private:
  void deliver(std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) {
      if (options_.record_delivered_ids) report_.delivered_ids.push_back(ring_.front().id);
      ring_.pop_front();
      ++report_.delivered;
    }
  }

  void lose(const Event& e, bool overwritten) {
    (overwritten ? report_.lost_overwritten : report_.lost_dropped) += 1;
    report_.lost_by_priority[e.priority] += 1;
  }

  void push_ring(const Event& e) {
    ring_.push_back(e);
    report_.max_ring_occupancy = std::max<std::uint64_t>(report_.max_ring_occupancy, ring_.size());
  }

  void flush(int cpu) {
    auto& cache = caches_[static_cast<std::size_t>(cpu)];
    if (cache.empty()) return;
    if (config_.policy == Policy::Overwrite) {
      for (const auto& e : cache) {
        if (ring_.size() >= config_.ring_capacity) {
          lose(ring_.front(), true);
          ring_.pop_front();
        }
        push_ring(e);
      }
    } else if (ring_.size() + cache.size() <= config_.ring_capacity) {
      for (const auto& e : cache) push_ring(e);
    } else if (!config_.priority_eviction) {
      for (const auto& e : cache) lose(e, false);
    } else {
      evict_by_priority(cache);
    }
    cache.clear();
  }

  // Makes room for the incoming batch by dropping the lowest-priority events
  // across ring and batch; within a class, incoming events go first, newest first.
  void evict_by_priority(const std::deque<Event>& batch) {
    const std::size_t excess = ring_.size() + batch.size() - config_.ring_capacity;
    struct Candidate {
      int priority;
      bool in_ring;
      std::uint64_t id;
    };
    std::vector<Candidate> all;
    all.reserve(ring_.size() + batch.size());
    for (const auto& e : ring_) all.push_back({e.priority, true, e.id});
    for (const auto& e : batch) all.push_back({e.priority, false, e.id});
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(excess), all.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.priority != b.priority) return a.priority < b.priority;
                        if (a.in_ring != b.in_ring) return !a.in_ring;
                        return a.id > b.id;
                      });
    std::set<std::uint64_t> victims;
    for (std::size_t i = 0; i < excess; ++i) victims.insert(all[i].id);
    std::deque<Event> kept;
    for (const auto& e : ring_) {
      if (victims.contains(e.id)) {
        lose(e, false);
      } else {
        kept.push_back(e);
      }
    }
    ring_ = std::move(kept);
    for (const auto& e : batch) {
      if (victims.contains(e.id)) {
        lose(e, false);
      } else {
        push_ring(e);
      }
    }
  }

  const BufferConfig& config_;
  const SimulationOptions& options_;
  std::vector<std::deque<Event>> caches_;
  std::deque<Event> ring_;
  double budget_ = 0;
  std::uint64_t next_id_ = 0;
  LossReport report_;
};

}  // namespace

LossReport simulate_buffers(const BufferConfig& config, const Workload& workload,
                            std::uint64_t seed, const SimulationOptions& options) {
  validate(config, workload);
  std::mt19937_64 rng(seed);

  std::vector<double> cumulative;
  double sum = 0;
  for (double w : workload.priority_mix) cumulative.push_back(sum += w);
  auto pick_priority = [&]() -> int {
    if (cumulative.size() == 1) return 0;
    const double u = uniform01(rng) * sum;
    for (std::size_t i = 0; i < cumulative.size(); ++i) {
      if (u < cumulative[i]) return static_cast<int>(i);
    }
    return static_cast<int>(cumulative.size() - 1);
  };

  auto bursts = workload.bursts;
  std::stable_sort(bursts.begin(), bursts.end(),
                   [](const Burst& a, const Burst& b) { return a.time_ms < b.time_ms; });
  auto next_burst = bursts.begin();

  Simulator sim(config, options);
  std::vector<double> carry(static_cast<std::size_t>(config.cpu_count), 0.0);
  for (std::int64_t t = 0; t < config.duration_ms; ++t) {
    for (int cpu = 0; cpu < config.cpu_count; ++cpu) {
      const auto c = static_cast<std::size_t>(cpu);
      const double rate = c < workload.rates.size() ? workload.rates[c] : 0.0;
      std::uint64_t count = 0;
      if (workload.arrival == Arrival::Fixed) {
        carry[c] += rate;
        count = static_cast<std::uint64_t>(std::floor(carry[c]));
        carry[c] -= static_cast<double>(count);
      } else {
        count = poisson(rng, rate);
      }
      for (std::uint64_t i = 0; i < count; ++i) sim.produce(cpu, pick_priority());
    }
    for (; next_burst != bursts.end() && next_burst->time_ms == t; ++next_burst) {
      for (std::uint64_t i = 0; i < next_burst->count; ++i) {
        sim.produce(next_burst->cpu, pick_priority());
      }
    }
    sim.drain_tick();
  }
  sim.finish();
  return std::move(sim).report();
}

SimulationSpec parse_simulation_config(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be an object");
  SimulationSpec spec;
  auto& c = spec.config;
  try {
    c.cpu_count = doc.value("cpu_count", c.cpu_count);
    c.cache_capacity = doc.value("cache_capacity", c.cache_capacity);
    c.ring_capacity = doc.value("ring_capacity", c.ring_capacity);
    c.consumer_drain_rate = doc.value("consumer_drain_rate", c.consumer_drain_rate);
    c.flush_threshold = doc.value("flush_threshold", c.cache_capacity);
    c.priority_eviction = doc.value("priority_eviction", c.priority_eviction);
    c.duration_ms = doc.value("duration_ms", c.duration_ms);
    const auto policy = doc.value("policy", std::string("drop"));
    auto parsed = parse_policy(policy);
    if (!parsed) throw Error(ErrorCode::InvalidConfig, "unknown policy '" + policy + "'");
    c.policy = *parsed;

    auto& w = spec.workload;
    const auto wl = doc.value("workload", json::object());
    const auto arrival = wl.value("arrival", std::string("fixed"));
    if (arrival == "fixed") {
      w.arrival = Arrival::Fixed;
    } else if (arrival == "poisson") {
      w.arrival = Arrival::Poisson;
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown arrival '" + arrival + "'");
    }
    w.rates = wl.value("rates", std::vector<double>{});
    for (const auto& b : wl.value("bursts", json::array())) {
      if (!b.is_array() || b.size() != 3) {
        throw Error(ErrorCode::InvalidConfig, "bursts are [time_ms, cpu, count] triples");
      }
      w.bursts.push_back({b[0].get<std::int64_t>(), b[1].get<int>(), b[2].get<std::uint64_t>()});
    }
    w.priority_mix = wl.value("priority_mix", std::vector<double>{1.0});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad config field: ") + e.what());
  }
  validate(spec.config, spec.workload);
  return spec;
}

std::string to_json(const LossReport& r) {
  nlohmann::ordered_json out;
  out["produced"] = r.produced;
  out["delivered"] = r.delivered;
  out["lost_overwritten"] = r.lost_overwritten;
  out["lost_dropped"] = r.lost_dropped;
  for (int p = 0; p < 3; ++p) {
    auto it = r.lost_by_priority.find(p);
    out["lost_priority_" + std::to_string(p)] = it == r.lost_by_priority.end() ? 0 : it->second;
  }
  out["max_ring_occupancy"] = r.max_ring_occupancy;
  return out.dump();
}

}  // namespace droidaudit::pipeline
