#pragma once

// Userspace event-path mechanics: chunk reassembly, a discrete-event model of
// the per-CPU cache / shared ring buffer capture path, and MTE tag stripping.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "droidaudit/bytes.hpp"

namespace droidaudit::pipeline {

inline constexpr std::uint64_t kUserAddressMask = 0xffffffffffULL;

// Strips MTE tag bits: keeps the low 40 bits of a user pointer.
constexpr std::uint64_t mask_user_address(std::uint64_t addr) { return addr & kUserAddressMask; }

struct ChunkRecord {
  std::uint64_t event_id = 0;
  std::uint32_t seq = 0;
  std::uint32_t total = 0;
  Bytes bytes;
};

struct CompletedEvent {
  std::uint64_t event_id = 0;
  Bytes payload;
};

struct IncompleteEvent {
  std::uint64_t event_id = 0;
  std::uint32_t total = 0;
  std::vector<std::uint32_t> missing;
};

// Single-consumer reassembler. Submissions must be serialized by the caller;
// an event is emitted by the submit() call that delivers its last chunk.
class Reassembler {
 public:
  // Throws InvalidChunk (seq >= total, total == 0), ConflictingTotal, or
  // DuplicateChunk (same seq with different bytes, or a chunk for an event
  // that already completed). An exact duplicate of a pending chunk is ignored.
  std::optional<CompletedEvent> submit(ChunkRecord chunk);

  // Events still missing chunks, ordered by event id.
  std::vector<IncompleteEvent> pending() const;

 private:
  struct Partial {
    std::uint32_t total = 0;
    std::map<std::uint32_t, Bytes> chunks;
  };
  std::map<std::uint64_t, Partial> partial_;
  std::set<std::uint64_t> completed_;
};

struct ReassemblyResult {
  std::vector<CompletedEvent> completed;  // in completion order
  std::vector<IncompleteEvent> incomplete;
};

ReassemblyResult reassemble_chunks(std::vector<ChunkRecord> chunks);

enum class Policy { Overwrite, Drop };

std::string_view to_string(Policy policy) noexcept;
std::optional<Policy> parse_policy(std::string_view text) noexcept;

struct BufferConfig {
  int cpu_count = 4;
  std::uint64_t cache_capacity = 64;   // events per CPU cache
  std::uint64_t ring_capacity = 4096;  // events
  Policy policy = Policy::Drop;
  double consumer_drain_rate = 1000.0;  // events per ms
  std::uint64_t flush_threshold = 64;   // cache occupancy that triggers a flush
  bool priority_eviction = false;       // drop policy only
  std::int64_t duration_ms = 1000;
};

struct Burst {
  std::int64_t time_ms = 0;
  int cpu = 0;
  std::uint64_t count = 0;
};

enum class Arrival { Fixed, Poisson };

struct Workload {
  Arrival arrival = Arrival::Fixed;
  std::vector<double> rates;  // events per ms, one per CPU (missing CPUs produce nothing)
  std::vector<Burst> bursts;
  // Relative weights of priority classes low/medium/high for produced events.
  std::vector<double> priority_mix{1.0};
};

struct LossReport {
  std::uint64_t produced = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost_overwritten = 0;
  std::uint64_t lost_dropped = 0;
  std::map<int, std::uint64_t> lost_by_priority;
  std::uint64_t max_ring_occupancy = 0;
  std::vector<std::uint64_t> delivered_ids;  // filled when requested

  std::uint64_t lost() const { return lost_overwritten + lost_dropped; }
};

struct SimulationOptions {
  bool record_delivered_ids = false;
};

// Throws InvalidConfig for non-positive capacities/rates, flush_threshold
// outside [1, cache_capacity], or bursts naming a CPU out of range.
void validate(const BufferConfig& config, const Workload& workload);

// Deterministic for a given (config, workload, seed). Event ids are assigned
// in production order starting at 0. After duration_ms the caches are flushed
// and the consumer keeps draining until the ring is empty.
LossReport simulate_buffers(const BufferConfig& config, const Workload& workload,
                            std::uint64_t seed, const SimulationOptions& options = {});

struct SimulationSpec {
  BufferConfig config;
  Workload workload;
};

// Declarative JSON config; see README for the schema. Throws InvalidConfig.
SimulationSpec parse_simulation_config(std::string_view json_text);

std::string to_json(const LossReport& report);

}  // namespace droidaudit::pipeline
