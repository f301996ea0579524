"""Expand compressed callsigns into their spoken word-sequence variants.

A compressed callsign like ``DLH5KX`` splits into an airline designator
(``DLH``) and a flight-number tail (``5KX``). The designator maps to one
or more spoken telephony names (``lufthansa``, ``hansa``); the tail is
spelled character by character with digit words and the ICAO spelling
alphabet, giving ``hansa five kilo x-ray`` and ``lufthansa five kilo
x-ray``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .errors import ParseError, SchemaError, UnknownAirline

Variant = tuple[str, ...]

CALLSIGN_RE = re.compile(r"^([A-Z]{2,3})([0-9][A-Z0-9]{0,3})$")

DIGIT_WORDS = {
    "0": "zero",
    "1": "one",
    "2": "two",
    "3": "three",
    "4": "four",
    "5": "five",
    "6": "six",
    "7": "seven",
    "8": "eight",
    "9": "nine",
}

# ICAO orthography: "alfa" and "juliett".
NATO_WORDS = {
    "A": "alfa",
    "B": "bravo",
    "C": "charlie",
    "D": "delta",
    "E": "echo",
    "F": "foxtrot",
    "G": "golf",
    "H": "hotel",
    "I": "india",
    "J": "juliett",
    "K": "kilo",
    "L": "lima",
    "M": "mike",
    "N": "november",
    "O": "oscar",
    "P": "papa",
    "Q": "quebec",
    "R": "romeo",
    "S": "sierra",
    "T": "tango",
    "U": "uniform",
    "V": "victor",
    "W": "whiskey",
    "X": "x-ray",
    "Y": "yankee",
    "Z": "zulu",
}


@dataclass(frozen=True)
class ExpansionOptions:
    # "niner" is the radiotelephony alternative for 9; off by default.
    niner: bool = False


@dataclass
class AirlineEntry:
    icao: str
    telephony: list[tuple[str, ...]] = field(default_factory=list)


class AirlineTable:
    """ICAO designator -> spoken telephony name variants."""

    def __init__(self):
        self._entries: dict[str, AirlineEntry] = {}

    def add(self, icao: str, name_words: tuple[str, ...]) -> None:
        entry = self._entries.setdefault(icao, AirlineEntry(icao))
        if name_words not in entry.telephony:
            entry.telephony.append(name_words)

    def __contains__(self, icao: str) -> bool:
        return icao in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, icao: str) -> AirlineEntry:
        return self._entries[icao]

    def codes(self) -> list[str]:
        return sorted(self._entries)


def load_airline_table(path: Union[str, Path]) -> AirlineTable:
    """Load a CSV of ``ICAO,name1;name2;...`` rows.

    Lines starting with ``#`` are comments. Duplicate ICAO codes merge
    their telephony lists. Malformed rows fail with the line number.
    """
    table = AirlineTable()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise SchemaError(f"{path}:{lineno}: expected 'ICAO,name1;name2;...'")
            icao = parts[0].strip()
            if not re.fullmatch(r"[A-Z]{2,3}", icao):
                raise SchemaError(f"{path}:{lineno}: bad designator {icao!r}")
            names = []
            for chunk in parts[1].split(";"):
                words = tuple(chunk.strip().lower().split())
                if not words:
                    raise SchemaError(f"{path}:{lineno}: empty telephony name")
                names.append(words)
            for words in names:
                table.add(icao, words)
    return table


def default_airline_table() -> AirlineTable:
    """Table shipped with the package (data/airlines.csv)."""
    return load_airline_table(Path(__file__).parent / "data" / "airlines.csv")


def parse_callsign(raw: str, table: AirlineTable) -> tuple[str, str]:
    """Split a compressed callsign into (designator, tail).

    The designator is the leading run of letters (2 or 3 of them) and
    must be present in the airline table; the tail starts at the first
    digit.
    """
    m = CALLSIGN_RE.match(raw)
    if m is None:
        raise ParseError(f"malformed callsign {raw!r}")
    designator, tail = m.group(1), m.group(2)
    if designator not in table:
        raise UnknownAirline(raw, designator)
    return designator, tail


def spell_tail(tail: str, opts: ExpansionOptions = ExpansionOptions()) -> list[Variant]:
    """Character-by-character spellings of a flight-number tail."""
    spellings: list[tuple[str, ...]] = [()]
    for ch in tail:
        if ch.isdigit():
            choices = [DIGIT_WORDS[ch]]
            if ch == "9" and opts.niner:
                choices.append("niner")
        else:
            choices = [NATO_WORDS[ch]]
        spellings = [s + (c,) for s in spellings for c in choices]
    return spellings


def expand(raw: str, table: AirlineTable, opts: ExpansionOptions = ExpansionOptions()) -> list[Variant]:
    """All spoken variants of a compressed callsign, sorted, deduplicated."""
    designator, tail = parse_callsign(raw, table)
    tails = spell_tail(tail, opts)
    variants = {
        name + t
        for name in table.get(designator).telephony
        for t in tails
    }
    return sorted(variants)
