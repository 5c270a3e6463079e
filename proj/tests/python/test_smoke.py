import json
import os
import pathlib

import pytest

import droidaudit

DATA = pathlib.Path(os.environ.get("DROIDAUDIT_DATA", pathlib.Path(__file__).resolve().parents[2] / "data"))


def read(rel):
    return (DATA / rel).read_text()


def test_golden_decode_matches_expected_text():
    assert droidaudit.decode_capture(read("golden/sms_capture.jsonl")) == read("golden/sms_expected.txt")


def test_records_carry_typed_params():
    (rec,) = droidaudit.decode_records(read("golden/sms_ioctl_capture.jsonl"), droidaudit.sample_table())
    assert rec["method_name"] == "sendTextForSubscriber"
    assert [p["name"] for p in rec["params"]][:2] == ["subId", "callingPkg"]
    assert rec["params"][0]["value"] == 2


def test_compare_worked_example():
    report = droidaudit.compare(read("fixtures/uer_worked_a.jsonl"), read("fixtures/uer_worked_b.jsonl"))
    assert (report["matched"], report["unique_a"], report["unique_b"]) == (40, 50, 10)
    assert report["uer_a_pct"] == pytest.approx(50.0)
    assert report["uer_b_pct"] == pytest.approx(10.0)
    assert droidaudit.uer(40, 50, 10) == (0.5, 0.1)


def test_errors_carry_codes():
    with pytest.raises(droidaudit.Error) as info:
        droidaudit.uer(0, 0, 0)
    assert info.value.code == "EmptyUnion"
    with pytest.raises(droidaudit.Error) as info:
        droidaudit.simulate({"ring_capacity": 0, "workload": {"rates": [1]}}, 1)
    assert info.value.code == "InvalidConfig"


def test_simulate_burst():
    report = droidaudit.simulate(json.loads(read("sim/burst.json")), 3)
    assert report["produced"] == 1000
    assert report["delivered"] == 100
    assert report["produced"] == report["delivered"] + report["lost_overwritten"] + report["lost_dropped"]


def test_reassemble_and_mask():
    payload = bytes(range(50))
    done, missing = droidaudit.reassemble([(9, 1, 2, payload[20:]), (9, 0, 2, payload[:20]), (4, 0, 3, b"x")])
    assert done == {9: payload}
    assert missing == {4: [1, 2]}
    assert droidaudit.mask_user_address(0xB400007FE0001000) == 0x7FE0001000


def test_traced_sets():
    arm, x86 = droidaudit.traced_set("arm64"), droidaudit.traced_set("x86_64")
    assert (len(arm), len(x86)) == (64, 81)
    assert arm - x86 == {"preadv2", "pwritev2"}
