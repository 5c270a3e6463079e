"""Binder transaction decoding and syscall-trace tooling."""

import json as _json

from . import _core
from ._core import Error, mask_user_address, sample_table, traced_set, uer

__all__ = [
    "Error",
    "compare",
    "decode_capture",
    "decode_records",
    "mask_user_address",
    "reassemble",
    "sample_table",
    "simulate",
    "traced_set",
    "uer",
]


def decode_capture(capture, table=None, *, stability_footer=True, arch="arm64"):
    """Text rendering of a capture, followed by its summary line."""
    log, summary, _warning = _core.decode_capture(capture, table, "text", stability_footer, arch)
    return log + ("\n" if log else "") + summary + "\n"


def decode_records(capture, table=None, *, stability_footer=True, arch="arm64"):
    """Audit entries of a capture as a list of dicts."""
    log, _summary, _warning = _core.decode_capture(capture, table, "records", stability_footer, arch)
    return [_json.loads(line) for line in log.splitlines() if line]


def compare(a, b, *, offset=None, app_id="", exclude_pids=(), arch="arm64"):
    """Compare two trace logs (text); returns the report dict plus the offset used."""
    report, used_offset, _line = _core.compare(a, b, offset, app_id, list(exclude_pids), arch)
    result = _json.loads(report)
    result["offset"] = used_offset
    return result


def simulate(config, seed):
    """Run the buffer simulator; `config` is a dict or a JSON string."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_core.simulate(text, seed))


def reassemble(chunks):
    """Reassemble (event_id, seq, total, bytes) chunks into ({id: payload}, {id: missing seqs})."""
    return _core.reassemble(list(chunks))
