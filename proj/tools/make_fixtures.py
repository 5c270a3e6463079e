#!/usr/bin/env python3
"""Regenerates the compare and simulate fixtures under data/.

Compare fixtures are normalized logs with hand-counted outcomes: every event
is either shared (identical content in both logs) or present on one side
only, so the expected matched/unique counts are known by construction.
"""
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
NR = {"execve": 221, "mmap": 222, "write": 64, "read": 63, "close": 57}
PID = 4242


def event(ts, name, args, ret=0, pid=PID):
    args = list(args) + [0] * (6 - len(args))
    return {"ts_ns": ts, "pid": pid, "tgid": PID, "nr": NR[name], "args": args, "ret": ret,
            "phase": "joined"}


def pair(matched, only_a, only_b, offset_b=0):
    """Log A and B with the given class sizes; B runs on a shifted clock."""
    a, b = [], []
    ts = 1_000_000
    anchor = [("execve", [0x1000, 0x2000, 0x3000]), ("mmap", [0, 4096, 3, 0x22, 0xffffffff, 0])]
    sequence = ["both"] * (matched - 3) + ["a"] * only_a + ["b"] * only_b
    # Deterministic interleave: spread the one-sided events through the shared ones.
    interleaved = []
    buckets = {"both": [k for k in sequence if k == "both"],
               "a": [k for k in sequence if k == "a"],
               "b": [k for k in sequence if k == "b"]}
    while any(buckets.values()):
        for kind in ("both", "a", "both", "b"):
            if buckets[kind]:
                interleaved.append(buckets[kind].pop())
    for name, args in anchor:
        a.append(event(ts, name, args))
        b.append(event(ts - offset_b, name, args))
        ts += 1000
    for i, kind in enumerate(interleaved):
        e = event(ts, "write", [3 + i % 7, 0x7000 + 16 * i, 1 + i])
        if kind in ("both", "a"):
            a.append(e)
        if kind in ("both", "b"):
            b.append(dict(e, ts_ns=ts - offset_b))
        ts += 1000
    closing = event(ts, "close", [3])
    a.append(closing)
    b.append(dict(closing, ts_ns=ts - offset_b))
    return a, b


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records))


def main():
    fixtures = ROOT / "data" / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    # Union 100: 40 matched, 50 only in A, 10 only in B.
    a, b = pair(40, 50, 10, offset_b=250_000)
    write_jsonl(fixtures / "uer_worked_a.jsonl", a)
    write_jsonl(fixtures / "uer_worked_b.jsonl", b)
    # Union 400: 151/400 = 0.3775 only in A, 17/400 = 0.0425 only in B.
    a, b = pair(232, 151, 17, offset_b=-3_000_000)
    write_jsonl(fixtures / "uer_3775_a.jsonl", a)
    write_jsonl(fixtures / "uer_3775_b.jsonl", b)

    sim = ROOT / "data" / "sim"
    sim.mkdir(parents=True, exist_ok=True)
    (sim / "burst.json").write_text(json.dumps({
        "cpu_count": 1, "cache_capacity": 1, "flush_threshold": 1, "ring_capacity": 100,
        "policy": "overwrite", "consumer_drain_rate": 1, "duration_ms": 1,
        "workload": {"arrival": "fixed", "rates": [0], "bursts": [[0, 0, 1000]]},
    }, indent=2) + "\n")
    (sim / "sufficient.json").write_text(json.dumps({
        "cpu_count": 4, "cache_capacity": 64, "flush_threshold": 32, "ring_capacity": 512,
        "policy": "drop", "consumer_drain_rate": 200, "duration_ms": 500,
        "workload": {"arrival": "fixed", "rates": [40, 40, 40, 40]},
    }, indent=2) + "\n")
    (sim / "mixed.json").write_text(json.dumps({
        "cpu_count": 4, "cache_capacity": 64, "flush_threshold": 48, "ring_capacity": 1024,
        "policy": "drop", "priority_eviction": True, "consumer_drain_rate": 90, "duration_ms": 400,
        "workload": {"arrival": "poisson", "rates": [30, 25, 20, 20],
                     "bursts": [[50, 0, 3000], [200, 2, 1500]], "priority_mix": [6, 3, 1]},
    }, indent=2) + "\n")


if __name__ == "__main__":
    main()
