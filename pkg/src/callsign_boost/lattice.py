"""First-pass lattices and second-pass rescoring against a biasing FST.

A lattice is an acyclic word-labeled machine with separate acoustic and
graph costs per arc. Rescoring composes it with a per-utterance biasing
acceptor; weight deltas from the composition land on the graph channel
(biasing is language-model-side knowledge), acoustic costs ride along
unchanged.

Text format, one lattice per ``# utt`` header:

    # utt <utterance id>
    src<TAB>dst<TAB>word<TAB>acoustic<TAB>graph
    state<TAB>acoustic<TAB>graph

The first non-comment line names the start state. A batch is either a
directory of ``<utt_id>.lat`` files or one concatenated stream split on
the headers.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path as FilePath
from typing import NamedTuple, Optional, TextIO, Union

from .errors import EmptyLattice, EmptyRescore, SchemaError
from .fst import EPSILON, EPSILON_WORD, NO_STATE, Fst, SymbolTable, shortest_path


@dataclass
class LatticeArc:
    word: str
    acoustic: float
    graph: float
    dst: int


class Lattice:
    """Acyclic hypothesis graph for one utterance."""

    def __init__(self, utterance_id: str = ""):
        self.utterance_id = utterance_id
        self.arcs: list[list[LatticeArc]] = []
        self.start: int = NO_STATE
        self.finals: dict[int, tuple[float, float]] = {}

    def add_state(self) -> int:
        self.arcs.append([])
        return len(self.arcs) - 1

    def add_states(self, n: int) -> None:
        for _ in range(n):
            self.add_state()

    def set_start(self, s: int) -> None:
        self.start = s

    def set_final(self, s: int, acoustic: float = 0.0, graph: float = 0.0) -> None:
        self.finals[s] = (acoustic, graph)

    def add_arc(self, src: int, word: str, acoustic: float, graph: float, dst: int) -> None:
        self.arcs[src].append(LatticeArc(word, acoustic, graph, dst))

    @property
    def num_states(self) -> int:
        return len(self.arcs)

    @property
    def num_arcs(self) -> int:
        return sum(len(a) for a in self.arcs)

    def states(self) -> range:
        return range(len(self.arcs))

    def words(self) -> list[str]:
        """Sorted vocabulary of the lattice, epsilon excluded."""
        seen = set()
        for arcs in self.arcs:
            for a in arcs:
                if a.word != EPSILON_WORD:
                    seen.add(a.word)
        return sorted(seen)

    def copy(self) -> "Lattice":
        out = Lattice(self.utterance_id)
        out.arcs = [[LatticeArc(a.word, a.acoustic, a.graph, a.dst) for a in arcs] for arcs in self.arcs]
        out.start = self.start
        out.finals = dict(self.finals)
        return out


class Hypothesis(NamedTuple):
    words: list[str]
    cost: float


def lattice_to_fst(lat: Lattice, scale_acoustic: float, scale_graph: float) -> Fst:
    """Acceptor with arc weights scale_acoustic*a + scale_graph*g."""
    syms = SymbolTable(lat.words())
    fst = Fst(syms, syms)
    fst.add_states(lat.num_states)
    if lat.start != NO_STATE:
        fst.set_start(lat.start)
    for s in lat.states():
        for a in lat.arcs[s]:
            lbl = EPSILON if a.word == EPSILON_WORD else syms.id(a.word)
            fst.add_arc(s, lbl, lbl, scale_acoustic * a.acoustic + scale_graph * a.graph, a.dst)
    for s, (fa, fg) in lat.finals.items():
        fst.set_final(s, scale_acoustic * fa + scale_graph * fg)
    return fst


def best_hypothesis(lat: Lattice, scale_acoustic: float = 1.0, scale_graph: float = 1.0) -> Hypothesis:
    """1-best word sequence and its total cost, epsilons removed."""
    if lat.num_states == 0 or lat.start == NO_STATE:
        raise EmptyLattice(f"lattice {lat.utterance_id!r} has no states")
    path = shortest_path(lattice_to_fst(lat, scale_acoustic, scale_graph))
    if path is None:
        raise EmptyLattice(f"lattice {lat.utterance_id!r} has no complete path")
    return Hypothesis(path.words, path.cost)


def rescore(lat: Lattice, bias: Fst) -> Lattice:
    """Compose a lattice with a biasing acceptor.

    The bias must be built over a symbol table covering the lattice
    vocabulary; its self-loop construction then guarantees the
    composition is non-empty. Bias weights (including those on its
    epsilon bookkeeping arcs) are attributed to the graph channel.
    """
    if lat.num_states == 0 or lat.start == NO_STATE:
        raise EmptyLattice(f"lattice {lat.utterance_id!r} has no states")
    if bias.start == NO_STATE:
        raise EmptyRescore("biasing FST has no start state")

    b_index: list[dict[int, list]] = []
    for arcs in bias.arcs:
        idx: dict[int, list] = {}
        for arc in arcs:
            idx.setdefault(arc.ilabel, []).append(arc)
        b_index.append(idx)

    def bias_label(word: str) -> Optional[int]:
        try:
            return bias.isyms.id(word)
        except KeyError:
            return None

    out = Lattice(lat.utterance_id)
    state_id: dict[tuple[int, int, int], int] = {}
    queue: list[tuple[int, int, int]] = []

    def state_of(key) -> int:
        sid = state_id.get(key)
        if sid is None:
            sid = out.add_state()
            state_id[key] = sid
            queue.append(key)
        return sid

    out.set_start(state_of((lat.start, bias.start, 0)))
    head = 0
    while head < len(queue):
        sl, sb, q = queue[head]
        src = state_id[(sl, sb, q)]
        head += 1
        b_eps = b_index[sb].get(EPSILON, ())
        for la in lat.arcs[sl]:
            if la.word != EPSILON_WORD:
                lbl = bias_label(la.word)
                if lbl is None:
                    continue
                for ba in b_index[sb].get(lbl, ()):
                    dst = state_of((la.dst, ba.dst, 0))
                    out.add_arc(src, la.word, la.acoustic, la.graph + ba.weight, dst)
            else:
                if q != 2:  # lattice epsilon arc, bias stays put
                    dst = state_of((la.dst, sb, 1))
                    out.add_arc(src, EPSILON_WORD, la.acoustic, la.graph, dst)
                if q == 0:  # paired epsilon move
                    for ba in b_eps:
                        dst = state_of((la.dst, ba.dst, 0))
                        out.add_arc(src, EPSILON_WORD, la.acoustic, la.graph + ba.weight, dst)
        if q != 1:  # bias epsilon arc, lattice stays put
            for ba in b_eps:
                dst = state_of((sl, ba.dst, 2))
                out.add_arc(src, EPSILON_WORD, 0.0, ba.weight, dst)
        if sl in lat.finals and sb in bias.finals:
            fa, fg = lat.finals[sl]
            out.set_final(src, fa, fg + bias.finals[sb])

    trimmed = trim(out)
    if trimmed.num_states == 0:
        raise EmptyRescore(
            f"composition of lattice {lat.utterance_id!r} with the biasing FST is empty; "
            "the bias vocabulary does not cover the lattice"
        )
    return trimmed


def trim(lat: Lattice) -> Lattice:
    """Drop states not on any start-to-final path."""
    n = lat.num_states
    if lat.start == NO_STATE or n == 0:
        return Lattice(lat.utterance_id)
    fwd = [False] * n
    fwd[lat.start] = True
    stack = [lat.start]
    while stack:
        s = stack.pop()
        for a in lat.arcs[s]:
            if not fwd[a.dst]:
                fwd[a.dst] = True
                stack.append(a.dst)
    rev: list[list[int]] = [[] for _ in range(n)]
    for s in lat.states():
        for a in lat.arcs[s]:
            rev[a.dst].append(s)
    bwd = [False] * n
    stack = [s for s in lat.finals if s < n]
    for s in stack:
        bwd[s] = True
    while stack:
        s = stack.pop()
        for p in rev[s]:
            if not bwd[p]:
                bwd[p] = True
                stack.append(p)
    keep = [s for s in lat.states() if fwd[s] and bwd[s]]
    if lat.start not in keep:
        return Lattice(lat.utterance_id)
    remap = {old: new for new, old in enumerate(keep)}
    out = Lattice(lat.utterance_id)
    out.add_states(len(keep))
    out.set_start(remap[lat.start])
    for old in keep:
        for a in lat.arcs[old]:
            if a.dst in remap:
                out.add_arc(remap[old], a.word, a.acoustic, a.graph, remap[a.dst])
        if old in lat.finals:
            fa, fg = lat.finals[old]
            out.set_final(remap[old], fa, fg)
    return out


def is_acyclic(lat: Lattice) -> bool:
    color = [0] * lat.num_states
    for root in lat.states():
        if color[root]:
            continue
        stack = [(root, 0)]
        color[root] = 1
        while stack:
            s, i = stack[-1]
            if i < len(lat.arcs[s]):
                stack[-1] = (s, i + 1)
                t = lat.arcs[s][i].dst
                if color[t] == 1:
                    return False
                if color[t] == 0:
                    color[t] = 1
                    stack.append((t, 0))
            else:
                color[s] = 2
                stack.pop()
    return True


# -- text serialization -----------------------------------------------------


def write_lattice_text(lat: Lattice, out: Union[str, FilePath, TextIO]) -> None:
    own = isinstance(out, (str, FilePath))
    fh = open(out, "w", encoding="utf-8", newline="\n") if own else out
    try:
        fh.write(f"# utt {lat.utterance_id}\n")
        if lat.start == NO_STATE:
            return
        order = [lat.start] + [s for s in lat.states() if s != lat.start]
        for s in order:
            for a in lat.arcs[s]:
                fh.write(f"{s}\t{a.dst}\t{a.word}\t{a.acoustic!r}\t{a.graph!r}\n")
            if s in lat.finals:
                fa, fg = lat.finals[s]
                fh.write(f"{s}\t{fa!r}\t{fg!r}\n")
    finally:
        if own:
            fh.close()


def read_lattice_text(src: Union[str, FilePath, TextIO], utterance_id: str = "") -> Lattice:
    """Parse one lattice from a file path or stream; trims, checks acyclicity."""
    if isinstance(src, (str, FilePath)):
        with open(src, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        lines = src.read().splitlines()
    return _parse_lattice(lines, utterance_id, offset=0)


def _parse_lattice(lines: list[str], utterance_id: str, offset: int) -> Lattice:
    lat = Lattice(utterance_id)
    first = True
    for i, line in enumerate(lines):
        lineno = offset + i + 1
        if not line.strip():
            continue
        if line.startswith("#"):
            fields = line[1:].split()
            if len(fields) >= 2 and fields[0] == "utt":
                lat.utterance_id = fields[1]
            continue
        parts = line.split("\t")
        try:
            if len(parts) == 5:
                src_s, dst_s = int(parts[0]), int(parts[1])
                word = parts[2]
                ac, gr = float(parts[3]), float(parts[4])
                _grow(lat, max(src_s, dst_s))
                lat.add_arc(src_s, word, ac, gr, dst_s)
            elif len(parts) == 3:
                src_s = int(parts[0])
                ac, gr = float(parts[1]), float(parts[2])
                _grow(lat, src_s)
                lat.set_final(src_s, ac, gr)
            else:
                raise ValueError(f"expected 5 arc fields or 3 final fields, got {len(parts)}")
        except ValueError as exc:
            raise SchemaError(f"lattice line {lineno}: {exc}") from None
        if first:
            lat.set_start(src_s)
            first = False
    for s, (fa, fg) in lat.finals.items():
        if not (_finite(fa) and _finite(fg)):
            raise SchemaError(f"lattice {lat.utterance_id!r}: non-finite final cost at state {s}")
    lat = trim(lat)
    if not is_acyclic(lat):
        raise SchemaError(f"lattice {lat.utterance_id!r} is cyclic")
    return lat


def _finite(x: float) -> bool:
    return x == x and abs(x) != float("inf")


def _grow(lat: Lattice, sid: int) -> None:
    while lat.num_states <= sid:
        lat.add_state()


def load_lattices(path: Union[str, FilePath]) -> list[Lattice]:
    """Load a batch: a directory of .lat files or one concatenated stream."""
    p = FilePath(path)
    lattices: list[Lattice] = []
    if p.is_dir():
        for f in sorted(p.glob("*.lat")):
            lattices.append(read_lattice_text(f, utterance_id=f.stem))
    else:
        with open(p, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        blocks: list[tuple[int, list[str]]] = []
        current: Optional[list[str]] = None
        start_line = 0
        for i, line in enumerate(lines):
            if line.startswith("# utt"):
                if current is not None:
                    blocks.append((start_line, current))
                current = [line]
                start_line = i
            elif current is not None:
                current.append(line)
            elif line.strip():
                raise SchemaError(f"lattice stream line {i + 1}: content before first '# utt' header")
        if current is not None:
            blocks.append((start_line, current))
        for start_line, block in blocks:
            lattices.append(_parse_lattice(block, "", offset=start_line))
    seen = set()
    for lat in lattices:
        if lat.utterance_id in seen:
            raise SchemaError(f"duplicate utterance id {lat.utterance_id!r} in lattice batch")
        seen.add(lat.utterance_id)
    return lattices


def save_lattices(lattices: list[Lattice], out: Union[str, FilePath, TextIO]) -> None:
    """Write a concatenated lattice stream, sorted by utterance id."""
    own = isinstance(out, (str, FilePath))
    fh = open(out, "w", encoding="utf-8", newline="\n") if own else out
    try:
        for lat in sorted(lattices, key=lambda l: l.utterance_id):
            write_lattice_text(lat, fh)
    finally:
        if own:
            fh.close()
