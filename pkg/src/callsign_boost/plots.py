"""Matplotlib renderings of report tables, written next to the TSVs."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .report import ReportRow


def save_report_figure(rows: Iterable[ReportRow], path: Union[str, Path]) -> None:
    """Two panels: error rates (WER, CallWER) and callsign accuracy."""
    rows = list(rows)
    labels = [r.label for r in rows]
    x = range(len(rows))
    fig, (ax_err, ax_acc) = plt.subplots(
        1, 2, figsize=(max(7.0, 1.6 * len(rows) + 3.0), 3.8), constrained_layout=True
    )
    width = 0.38
    ax_err.bar([i - width / 2 for i in x], [r.wer for r in rows], width, label="WER")
    ax_err.bar([i + width / 2 for i in x], [r.callsign_wer for r in rows], width, label="CallWER")
    ax_err.set_ylabel("percent")
    ax_err.set_title("error rates")
    ax_err.legend(frameon=False)
    ax_acc.bar(list(x), [r.accuracy for r in rows], 0.55, color="tab:green")
    ax_acc.set_ylabel("percent")
    ax_acc.set_ylim(0, 100)
    ax_acc.set_title("callsign accuracy")
    for ax in (ax_err, ax_acc):
        ax.set_xticks(list(x))
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_figure(
    points: Sequence[tuple[int, float]], path: Union[str, Path], ylabel: str = "mean callsign accuracy"
) -> None:
    """Accuracy as a function of the per-utterance distractor count."""
    ks = [k for k, _ in points]
    ys = [y for _, y in points]
    fig, ax = plt.subplots(figsize=(4.8, 3.4), constrained_layout=True)
    ax.plot(ks, ys, marker="o")
    ax.set_xlabel("callsigns per utterance")
    ax.set_ylabel(ylabel)
    ax.set_ylim(0, 100)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=120)
    plt.close(fig)
