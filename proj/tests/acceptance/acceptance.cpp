// One PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "droidaudit/compare.hpp"
#include "droidaudit/parcel.hpp"
#include "droidaudit/pipeline.hpp"
#include "droidaudit/sigtable.hpp"
#include "droidaudit/syscall_catalog.hpp"
#include "droidaudit/wire_binder.hpp"
#include "oracles.hpp"
#include "parcel_cases.hpp"

using namespace droidaudit;

namespace {

// Collects the first failed expectation of a criterion.
struct Check {
  std::ostringstream why;
  bool ok = true;

  template <typename A, typename B>
  void eq(const A& actual, const B& expected, const char* what) {
    if (ok && !(actual == expected)) {
      ok = false;
      why << what;
    }
  }
  void that(bool cond, const std::string& what) {
    if (ok && !cond) {
      ok = false;
      why << what;
    }
  }
};

bool golden_sms_decode(Check& c) {
  using namespace parcel;
  const auto table = sigtable::parse_table(sigtable::sample_table_text());
  binder::TransactionRecord txn;
  txn.code = 5;
  txn.flags = 0x12;
  txn.buffer = oracle::golden_sms_buffer();
  txn.data_size = txn.buffer.size();
  const auto rec = decode_transaction(txn, table, {0, 10119, 10188});

  c.eq(txn.buffer.size(), 200u, "golden buffer is not 200 bytes");
  c.eq(rec.status, DecodeStatus::Ok, "status not Ok");
  c.eq(rec.consumed, 200u, "cursor did not consume 200 bytes");
  c.eq(rec.interface_token, std::string("com.android.internal.telephony.ISms"), "token");
  c.eq(rec.code, 5u, "code");
  c.eq(rec.method_name, std::optional<std::string>("sendTextForSubscriber"), "method name");
  if (!c.ok) return false;
  c.eq(rec.args.size(), 10u, "argument count");
  if (!c.ok) return false;
  using S = std::optional<std::string>;
  const std::vector<DecodedValue> expected{
      IntValue{2, 32},
      S{},
      S{},
      S{"057623690820"},
      S{""},
      S{"ABC"},
      FlatBinderObject{0x73682a85, 0x13, 0x77, 0, 12},
      NullObject{},
      true,
      IntValue{static_cast<std::int64_t>(0x8bfcbd88fced275cULL), 64},
  };
  for (std::size_t i = 0; i < expected.size(); ++i) {
    c.that(oracle::same_value(rec.args[i].value, expected[i]), "argument " + rec.args[i].name);
  }
  const Bytes id_bytes{0x5c, 0x27, 0xed, 0xfc, 0x88, 0xbd, 0xfc, 0x8b};
  c.that(std::equal(id_bytes.begin(), id_bytes.end(), rec.raw_buffer.begin() + 192),
         "messageId bytes");
  return c.ok;
}

bool syscall_counts(Check& c) {
  using syscalls::Arch;
  const auto arm = syscalls::traced_set(Arch::Arm64);
  const auto x86 = syscalls::traced_set(Arch::X86_64);
  c.eq(arm.size(), 64u, "arm64 traced set size");
  c.eq(x86.size(), 81u, "x86_64 traced set size");
  std::vector<std::string> x86_only, arm_only;
  std::set_difference(x86.begin(), x86.end(), arm.begin(), arm.end(), std::back_inserter(x86_only));
  std::set_difference(arm.begin(), arm.end(), x86.begin(), x86.end(), std::back_inserter(arm_only));
  c.eq(x86_only.size(), 19u, "x86-only count");
  c.eq(arm_only, std::vector<std::string>{"preadv2", "pwritev2"}, "arm64-only set");
  return c.ok;
}

bool uer_worked_example(Check& c) {
  compare::MatchResult m;
  m.matched = 40;
  m.unique_a = 50;
  m.unique_b = 10;
  const auto u = compare::uer(m);
  c.eq(m.union_size(), 100u, "union");
  c.eq(u.a, 0.5, "uer_a");
  c.eq(u.b, 0.1, "uer_b");
  c.eq(m.total_a(), 90u, "total A");
  c.eq(m.total_b(), 50u, "total B");

  // The same counts reached through the full pipeline on the fixture logs.
  const auto a = compare::load_log(oracle::data_path("fixtures/uer_worked_a.jsonl"), {});
  const auto b = compare::load_log(oracle::data_path("fixtures/uer_worked_b.jsonl"), {});
  const auto report = compare::compare_logs(a, b, compare::default_match_config(syscalls::Arch::Arm64));
  c.eq(report.result.matched, 40u, "fixture matched");
  c.eq(report.result.unique_a, 50u, "fixture unique_a");
  c.eq(report.result.unique_b, 10u, "fixture unique_b");
  c.eq(report.rates.a, 0.5, "fixture uer_a");
  c.eq(report.rates.b, 0.1, "fixture uer_b");
  return c.ok;
}

bool uer_target_range(Check& c) {
  constexpr int kSeeds = 40;
  double sum_truth_a = 0, sum_truth_b = 0, worst = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    oracle::SyntheticSpec spec;
    spec.seed = static_cast<std::uint64_t>(seed);
    spec.events = 2000;
    const auto pair = oracle::make_two_tracer_logs(spec);
    compare::NormalizeOptions opts;
    opts.excluded_pids = {spec.tracer_pid};
    const auto a = compare::parse_log(pair.wdsys_jsonl, opts);
    const auto b = compare::parse_log(pair.ftrace_text, opts);
    const auto report = compare::compare_logs(a, b, compare::default_match_config(syscalls::Arch::Arm64));
    worst = std::max({worst, std::abs(report.rates.a - pair.uer_a()), std::abs(report.rates.b - pair.uer_b())});
    sum_truth_a += pair.uer_a();
    sum_truth_b += pair.uer_b();
  }
  c.that(worst <= 0.005, "recovered UER off ground truth by " + std::to_string(worst * 100) + "pp");
  // The generator itself lands on the targeted means.
  c.that(std::abs(sum_truth_a / kSeeds - 0.3775) <= 0.005, "generator mean WD UER off target");
  c.that(std::abs(sum_truth_b / kSeeds - 0.0427) <= 0.005, "generator mean FT UER off target");
  return c.ok;
}

bool parcel_round_trip(Check& c) {
  std::mt19937_64 rng(1000);
  for (int i = 0; i < 1000 && c.ok; ++i) {
    const auto pc = oracle::random_parcel_case(rng);
    sigtable::SignatureTable table;
    table.insert(pc.signature);
    binder::TransactionRecord txn;
    txn.code = pc.signature.code;
    txn.buffer = pc.buffer;
    txn.data_size = pc.buffer.size();
    parcel::DecodeOptions options;
    options.stability_footer = pc.stability_footer;
    const auto rec = parcel::decode_transaction(txn, table, {}, options);
    bool same = rec.status == parcel::DecodeStatus::Ok && rec.consumed == pc.buffer.size() &&
                rec.args.size() == pc.values.size();
    for (std::size_t k = 0; same && k < pc.values.size(); ++k) {
      same = oracle::same_value(rec.args[k].value, pc.values[k]);
    }
    c.that(same, "case " + std::to_string(i) + " differs");
  }
  return c.ok;
}

bool simulator(Check& c) {
  using namespace pipeline;
  std::mt19937 rng(6);
  for (int round = 0; round < 200 && c.ok; ++round) {
    BufferConfig cfg;
    cfg.cpu_count = 1 + static_cast<int>(rng() % 6);
    cfg.cache_capacity = 1 + rng() % 128;
    cfg.flush_threshold = 1 + rng() % cfg.cache_capacity;
    cfg.ring_capacity = 1 + rng() % 2000;
    cfg.policy = rng() % 2 ? Policy::Drop : Policy::Overwrite;
    cfg.priority_eviction = rng() % 2;
    cfg.consumer_drain_rate = 0.5 + static_cast<double>(rng() % 500) / 10.0;
    cfg.duration_ms = 100;
    Workload w;
    w.arrival = rng() % 2 ? Arrival::Poisson : Arrival::Fixed;
    for (int cpu = 0; cpu < cfg.cpu_count; ++cpu) w.rates.push_back(static_cast<double>(rng() % 60));
    w.bursts = {{static_cast<std::int64_t>(rng() % 100), 0, rng() % 4000}};
    w.priority_mix = {3, 2, 1};
    const auto r = simulate_buffers(cfg, w, rng());
    c.that(r.produced == r.delivered + r.lost(), "conservation broken in round " + std::to_string(round));
  }

  BufferConfig burst;
  burst.cpu_count = 1;
  burst.cache_capacity = 1;
  burst.flush_threshold = 1;
  burst.ring_capacity = 100;
  burst.consumer_drain_rate = 1;
  burst.duration_ms = 1;
  Workload w;
  w.rates = {0.0};
  w.bursts = {{0, 0, 1000}};
  SimulationOptions ids;
  ids.record_delivered_ids = true;
  std::vector<std::uint64_t> oldest(100), newest(100);
  std::iota(oldest.begin(), oldest.end(), 0);
  std::iota(newest.begin(), newest.end(), 900);
  burst.policy = Policy::Overwrite;
  const auto over = simulate_buffers(burst, w, 1, ids);
  burst.policy = Policy::Drop;
  const auto drop = simulate_buffers(burst, w, 1, ids);
  c.eq(over.delivered, 100u, "overwrite delivered");
  c.eq(drop.delivered, 100u, "drop delivered");
  c.eq(over.delivered_ids, newest, "overwrite keeps the newest ids");
  c.eq(drop.delivered_ids, oldest, "drop keeps the oldest ids");

  // Drain rate at or above production: nothing is lost once the ring can hold
  // one tick of production plus a flush from every CPU cache.
  for (int round = 0; round < 200 && c.ok; ++round) {
    BufferConfig cfg;
    cfg.cpu_count = 1 + static_cast<int>(rng() % 8);
    cfg.cache_capacity = 1 + rng() % 64;
    cfg.flush_threshold = 1 + rng() % cfg.cache_capacity;
    cfg.policy = rng() % 2 ? Policy::Drop : Policy::Overwrite;
    cfg.duration_ms = 200;
    Workload load;
    double total = 0;
    for (int cpu = 0; cpu < cfg.cpu_count; ++cpu) {
      load.rates.push_back(static_cast<double>(1 + rng() % 2000) / 100.0);
      total += load.rates.back();
    }
    cfg.consumer_drain_rate = total + static_cast<double>(rng() % 3);
    cfg.ring_capacity = static_cast<std::uint64_t>(std::ceil(total)) +
                        2 * static_cast<std::uint64_t>(cfg.cpu_count) * cfg.flush_threshold;
    const auto r = simulate_buffers(cfg, load, rng());
    c.that(r.lost() == 0, "loss despite sufficient drain in round " + std::to_string(round));
  }
  return c.ok;
}

bool reassembly(Check& c) {
  const auto golden = oracle::golden_sms_buffer();
  std::mt19937 rng(8);
  for (std::uint32_t parts = 2; parts <= 8 && c.ok; ++parts) {
    std::vector<std::size_t> cuts{0, golden.size()};
    while (cuts.size() < parts + 1) {
      const std::size_t cut = 1 + rng() % (golden.size() - 1);
      if (std::find(cuts.begin(), cuts.end(), cut) == cuts.end()) cuts.push_back(cut);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<pipeline::ChunkRecord> chunks;
    for (std::uint32_t i = 0; i < parts; ++i) {
      chunks.push_back({parts, i, parts,
                        Bytes(golden.begin() + static_cast<std::ptrdiff_t>(cuts[i]),
                              golden.begin() + static_cast<std::ptrdiff_t>(cuts[i + 1]))});
    }
    for (int perm = 0; perm < 100 && c.ok; ++perm) {
      std::shuffle(chunks.begin(), chunks.end(), rng);
      const auto result = pipeline::reassemble_chunks(chunks);
      c.that(result.completed.size() == 1 && result.completed[0].payload == golden,
             std::to_string(parts) + " chunks, permutation " + std::to_string(perm));
    }
  }
  return c.ok;
}

bool mte_mask(Check& c) {
  std::mt19937_64 rng(0xfffff);
  for (int i = 0; i < 10000 && c.ok; ++i) {
    const auto a = rng();
    const auto m = pipeline::mask_user_address(a);
    c.that(m == a % (std::uint64_t{1} << 40), "mask differs from the arithmetic oracle");
    c.that(pipeline::mask_user_address(m) == m, "mask is not idempotent");
  }
  return c.ok;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<bool(Check&)>>> criteria{
      {"golden SMS decode", golden_sms_decode},
      {"syscall set counts", syscall_counts},
      {"UER worked example", uer_worked_example},
      {"UER target-range recovery on synthetic logs", uer_target_range},
      {"parcel round-trip (1000 random signatures)", parcel_round_trip},
      {"simulator conservation and policy contrast", simulator},
      {"chunk reassembly permutation invariance", reassembly},
      {"MTE address mask", mte_mask},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = run(check);
    } catch (const std::exception& e) {
      check.why << "exception: " << e.what();
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start).count();
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  (" << ms << " ms)";
    if (!ok) std::cout << ": " << check.why.str();
    std::cout << "\n";
    failed += ok ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
