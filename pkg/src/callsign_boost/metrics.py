"""Word error rate and callsign recognition metrics.

Utterance WER is the standard pooled Levenshtein rate. Callsign metrics
locate, per utterance, the contiguous hypothesis span closest to the
best-matching ground-truth callsign expansion; callsign WER pools the
span edit counts over reference callsign lengths, and accuracy is the
percentage of utterances whose callsign comes out with zero edits.
Utterances without a ground-truth callsign stay out of the accuracy
denominator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

from .errors import SchemaError

WordSeq = Sequence[str]


@dataclass
class WerStats:
    n_ref_words: int = 0
    substitutions: int = 0
    insertions: int = 0
    deletions: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        if self.n_ref_words == 0:
            return 0.0
        return 100.0 * self.errors / self.n_ref_words

    def add(self, other: "WerStats") -> None:
        self.n_ref_words += other.n_ref_words
        self.substitutions += other.substitutions
        self.insertions += other.insertions
        self.deletions += other.deletions


@dataclass
class CallsignEvalRecord:
    utterance_id: str
    ref_callsign_words: list[str]
    hyp_span_words: list[str]
    counts: WerStats = field(default_factory=WerStats)

    @property
    def exact_match(self) -> bool:
        return self.counts.errors == 0


def align(ref: WordSeq, hyp: WordSeq) -> list[tuple[str, int, int]]:
    """Minimal-edit alignment as (op, ref_index, hyp_index) triples.

    Ops are match/sub/ins/del with unit costs; ties prefer sub over ins
    over del. Indices are -1 on the side an ins/del does not touch.
    """
    m, n = len(ref), len(hyp)
    d = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        d[i][0] = i
    for j in range(n + 1):
        d[0][j] = j
    for i in range(1, m + 1):
        ri = ref[i - 1]
        for j in range(1, n + 1):
            same = 0 if ri == hyp[j - 1] else 1
            d[i][j] = min(d[i - 1][j - 1] + same, d[i][j - 1] + 1, d[i - 1][j] + 1)
    ops: list[tuple[str, int, int]] = []
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1):
            ops.append(("match" if ref[i - 1] == hyp[j - 1] else "sub", i - 1, j - 1))
            i -= 1
            j -= 1
        elif j > 0 and d[i][j] == d[i][j - 1] + 1:
            ops.append(("ins", -1, j - 1))
            j -= 1
        else:
            ops.append(("del", i - 1, -1))
            i -= 1
    ops.reverse()
    return ops


def edit_counts(ref: WordSeq, hyp: WordSeq) -> WerStats:
    stats = WerStats(n_ref_words=len(ref))
    for op, _, _ in align(ref, hyp):
        if op == "sub":
            stats.substitutions += 1
        elif op == "ins":
            stats.insertions += 1
        elif op == "del":
            stats.deletions += 1
    return stats


def utterance_wer(refs: dict[str, WordSeq], hyps: dict[str, WordSeq]) -> WerStats:
    """Corpus-level pooled WER; reference and hypothesis ids must match."""
    missing_hyp = sorted(set(refs) - set(hyps))
    missing_ref = sorted(set(hyps) - set(refs))
    if missing_hyp or missing_ref:
        raise SchemaError(
            "utterance id mismatch: "
            f"missing hypotheses for {missing_hyp}, missing references for {missing_ref}"
        )
    pooled = WerStats()
    for utt in sorted(refs):
        pooled.add(edit_counts(refs[utt], hyps[utt]))
    return pooled


def _span_distances(exp: WordSeq, hyp: WordSeq, start: int) -> list[int]:
    """dist(exp, hyp[start:start+l]) for every span length l."""
    e = len(exp)
    prev = list(range(e + 1))
    out = [e]  # empty span: delete everything
    for l in range(1, len(hyp) - start + 1):
        word = hyp[start + l - 1]
        row = [l]
        for i in range(1, e + 1):
            same = 0 if exp[i - 1] == word else 1
            row.append(min(prev[i - 1] + same, prev[i] + 1, row[i - 1] + 1))
        out.append(row[e])
        prev = row
    return out


def best_callsign_span(
    hyp: WordSeq, expansions: Sequence[WordSeq]
) -> tuple[WordSeq, WordSeq, WerStats]:
    """Locate the hypothesis span closest to any ground-truth expansion.

    Considers every contiguous sub-sequence of the hypothesis (lengths 0
    through len(hyp)); ties go to the smallest edit distance, then the
    shortest span, then the leftmost one, then expansion order.
    """
    if not expansions:
        raise ValueError("at least one ground-truth expansion is required")
    best_key = None
    best = None
    for exp_idx, exp in enumerate(expansions):
        for start in range(len(hyp) + 1):
            for length, dist in enumerate(_span_distances(exp, hyp, start)):
                key = (dist, length, start, exp_idx)
                if best_key is None or key < best_key:
                    best_key = key
                    best = (exp, start, length)
    exp, start, length = best
    span = list(hyp[start : start + length])
    counts = edit_counts(exp, span)
    return list(exp), span, counts


def callsign_metrics(
    hyps: dict[str, WordSeq],
    ref_callsigns: dict[str, Sequence[WordSeq]],
) -> tuple[WerStats, float, list[CallsignEvalRecord]]:
    """Pooled callsign WER, exact-match accuracy, per-utterance records.

    ref_callsigns maps utterance id to the expanded ground-truth word
    sequences (several when the callsign has multiple realizations).
    Only utterances present in ref_callsigns count toward accuracy.
    """
    missing = sorted(set(ref_callsigns) - set(hyps))
    if missing:
        raise SchemaError(f"utterance id mismatch: no hypotheses for {missing}")
    pooled = WerStats()
    records = []
    exact = 0
    for utt in sorted(ref_callsigns):
        expansions = ref_callsigns[utt]
        if not expansions:
            raise SchemaError(f"utterance {utt!r} listed without any callsign expansion")
        ref_words, span, counts = best_callsign_span(hyps[utt], expansions)
        record = CallsignEvalRecord(utt, ref_words, span, counts)
        records.append(record)
        pooled.add(counts)
        if record.exact_match:
            exact += 1
    accuracy = 100.0 * exact / len(records) if records else 0.0
    return pooled, accuracy, records


# -- file formats -------------------------------------------------------------


def read_trans_file(path: Union[str, Path]) -> dict[str, list[str]]:
    """Lines of ``<utt_id><TAB><words...>``; empty word part allowed."""
    table: dict[str, list[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            utt, _, words = line.partition("\t")
            utt = utt.strip()
            if not utt:
                raise SchemaError(f"{path}:{lineno}: missing utterance id")
            if utt in table:
                raise SchemaError(f"{path}:{lineno}: duplicate utterance id {utt!r}")
            table[utt] = words.lower().split()
    return table


def read_callsign_file(path: Union[str, Path]) -> dict[str, list[str]]:
    """Lines of ``<utt_id><TAB><raw_callsign>``; repeats accumulate."""
    table: dict[str, list[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise SchemaError(f"{path}:{lineno}: expected '<utt_id><TAB><raw_callsign>'")
            table.setdefault(parts[0].strip(), []).append(parts[1].strip())
    return table
