"""Report rows and their delimited / pretty renderings."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO, Union


@dataclass
class ReportRow:
    label: str
    wer: float
    callsign_wer: float
    accuracy: float


@dataclass
class DiagnosticRow:
    utterance_id: str
    model: str
    cost: float
    exact_match: bool
    callsign_errors: int
    hypothesis: str


def format_report_table(rows: Iterable[ReportRow]) -> str:
    """Fixed-width table with the WER / CallWER / Acc layout."""
    rows = list(rows)
    width = max([len("Model")] + [len(r.label) for r in rows]) + 2
    lines = [f"{'Model':<{width}}{'WER':>8}{'CallWER':>10}{'Acc':>8}"]
    for r in rows:
        lines.append(
            f"{r.label:<{width}}{r.wer:>8.1f}{r.callsign_wer:>10.1f}{r.accuracy:>8.1f}"
        )
    return "\n".join(lines) + "\n"


def write_report_tsv(rows: Iterable[ReportRow], out: Union[str, Path, TextIO]) -> None:
    own = isinstance(out, (str, Path))
    fh = open(out, "w", encoding="utf-8", newline="\n") if own else out
    try:
        fh.write("model\twer\tcallwer\tacc\n")
        for r in rows:
            fh.write(f"{r.label}\t{r.wer:.2f}\t{r.callsign_wer:.2f}\t{r.accuracy:.2f}\n")
    finally:
        if own:
            fh.close()


def write_diagnostics_tsv(rows: Iterable[DiagnosticRow], out: Union[str, Path, TextIO]) -> None:
    own = isinstance(out, (str, Path))
    fh = open(out, "w", encoding="utf-8", newline="\n") if own else out
    try:
        fh.write("utt\tmodel\tcost\texact\tcallsign_errors\thypothesis\n")
        for r in sorted(rows, key=lambda r: (r.utterance_id, r.model)):
            fh.write(
                f"{r.utterance_id}\t{r.model}\t{r.cost:.6f}\t{int(r.exact_match)}"
                f"\t{r.callsign_errors}\t{r.hypothesis}\n"
            )
    finally:
        if own:
            fh.close()
