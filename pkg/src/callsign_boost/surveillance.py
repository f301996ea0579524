"""Surveillance context records: which callsigns were in the airspace
when each utterance was spoken.

Interchange format is JSONL, one object per utterance:

    {"utt": "id", "ts": 1650000000, "callsigns": ["SWR2689", ...],
     "truth": "SWR2689", "ref": "swiss two six eight nine", "out_of_list": false}

``truth`` and ``ref`` are optional. A ground-truth callsign that is not
in the surveillance list must be flagged ``out_of_list`` explicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import SchemaError
from .expansion import CALLSIGN_RE

_FIELDS = {"utt", "ts", "callsigns", "truth", "ref", "out_of_list"}


@dataclass
class UtteranceContext:
    utterance_id: str
    timestamp: int
    callsigns: list[str] = field(default_factory=list)
    ground_truth_callsign: Optional[str] = None
    reference: Optional[list[str]] = None
    out_of_list: bool = False


@dataclass
class ContextStats:
    count: int
    with_callsign: int
    without_callsign: int
    median_callsigns: Optional[int]


def load_surveillance(path: Union[str, Path]) -> list[UtteranceContext]:
    """Load and validate a JSONL manifest; order preserved."""
    contexts: list[UtteranceContext] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            ctx = _validate(obj, f"{path}:{lineno}")
            if ctx.utterance_id in seen:
                raise SchemaError(f"{path}:{lineno}: duplicate utterance id {ctx.utterance_id!r}")
            seen.add(ctx.utterance_id)
            contexts.append(ctx)
    return contexts


def _validate(obj, where: str) -> UtteranceContext:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected a JSON object")
    unknown = sorted(set(obj) - _FIELDS)
    if unknown:
        raise SchemaError(f"{where}: unknown fields {unknown}")
    for name in ("utt", "ts", "callsigns"):
        if name not in obj:
            raise SchemaError(f"{where}: missing field {name!r}")
    utt = obj["utt"]
    if not isinstance(utt, str) or not utt:
        raise SchemaError(f"{where}: 'utt' must be a non-empty string")
    ts = obj["ts"]
    if not isinstance(ts, int) or isinstance(ts, bool):
        raise SchemaError(f"{where}: 'ts' must be an integer")
    callsigns = obj["callsigns"]
    if not isinstance(callsigns, list) or not all(isinstance(c, str) for c in callsigns):
        raise SchemaError(f"{where}: 'callsigns' must be a list of strings")
    for c in callsigns:
        if not CALLSIGN_RE.match(c):
            raise SchemaError(f"{where}: malformed callsign {c!r}")
    truth = obj.get("truth")
    if truth is not None:
        if not isinstance(truth, str) or not CALLSIGN_RE.match(truth):
            raise SchemaError(f"{where}: malformed ground-truth callsign {truth!r}")
    out_of_list = obj.get("out_of_list", False)
    if not isinstance(out_of_list, bool):
        raise SchemaError(f"{where}: 'out_of_list' must be a boolean")
    if truth is not None and truth not in callsigns and not out_of_list:
        raise SchemaError(
            f"{where}: ground truth {truth!r} is not in the surveillance list; "
            "flag it with \"out_of_list\": true"
        )
    ref = obj.get("ref")
    reference = None
    if ref is not None:
        if not isinstance(ref, str):
            raise SchemaError(f"{where}: 'ref' must be a string of words")
        reference = ref.split()
    return UtteranceContext(utt, ts, list(callsigns), truth, reference, out_of_list)


def save_surveillance(contexts: Iterable[UtteranceContext], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ctx in contexts:
            obj = {"utt": ctx.utterance_id, "ts": ctx.timestamp, "callsigns": list(ctx.callsigns)}
            if ctx.ground_truth_callsign is not None:
                obj["truth"] = ctx.ground_truth_callsign
            if ctx.reference is not None:
                obj["ref"] = " ".join(ctx.reference)
            if ctx.out_of_list:
                obj["out_of_list"] = True
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def context_stats(contexts: Iterable[UtteranceContext]) -> ContextStats:
    """Counts and the lower median of callsigns per utterance."""
    sizes = []
    with_cs = 0
    for ctx in contexts:
        sizes.append(len(ctx.callsigns))
        if ctx.ground_truth_callsign is not None:
            with_cs += 1
    if not sizes:
        return ContextStats(0, 0, 0, None)
    sizes.sort()
    median = sizes[(len(sizes) - 1) // 2]
    return ContextStats(len(sizes), with_cs, len(sizes) - with_cs, median)
