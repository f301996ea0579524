"""Weighted finite-state machines over the tropical semiring.

The Fst here is deliberately small: mutable while being built, treated
as immutable afterwards. All operations (compose, shortest_path,
connect, arc_sort) are pure and return new machines, so shared
read-only Fsts are safe to use from any number of threads.

Text serialization follows the AT&T convention: one arc per line
``src<TAB>dst<TAB>ilabel<TAB>olabel<TAB>weight`` with the weight field
optional (default 0.0), final states as ``state<TAB>weight`` lines, and
the first non-comment line's source naming the start state. Labels are
integer ids resolved against a symbol-table file of ``word<TAB>id``
lines. Lines starting with ``#`` carry metadata and are skipped by the
reader.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path as FilePath
from typing import Iterable, Iterator, Optional, TextIO, Union

from . import semiring
from .errors import NegativeCycleError, ParseError, SymbolTableMismatch

EPSILON = 0
EPSILON_WORD = "<eps>"
NO_STATE = -1


class SymbolTable:
    """Bijective word <-> id map; id 0 is reserved for epsilon."""

    def __init__(self, words: Iterable[str] = ()):
        self._id_of = {EPSILON_WORD: EPSILON}
        self._word_of = {EPSILON: EPSILON_WORD}
        for w in words:
            self.add(w)

    def add(self, word: str) -> int:
        """Return the id of word, assigning the next free id if new."""
        wid = self._id_of.get(word)
        if wid is None:
            wid = len(self._id_of)
            while wid in self._word_of:  # tables read from disk may have gaps
                wid += 1
            self._id_of[word] = wid
            self._word_of[wid] = word
        return wid

    def id(self, word: str) -> int:
        return self._id_of[word]

    def word(self, wid: int) -> str:
        return self._word_of[wid]

    def __contains__(self, word: str) -> bool:
        return word in self._id_of

    def __len__(self) -> int:
        return len(self._id_of)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymbolTable) and self._id_of == other._id_of

    def ids(self) -> Iterator[int]:
        """All non-epsilon symbol ids, ascending."""
        return iter(sorted(self._word_of.keys() - {EPSILON}))

    def items(self) -> list[tuple[str, int]]:
        return sorted(self._id_of.items(), key=lambda kv: kv[1])

    def consistent_with(self, other: "SymbolTable") -> bool:
        """True when the tables never disagree on a shared word or id."""
        if self is other:
            return True
        for word, wid in self._id_of.items():
            if word in other._id_of and other._id_of[word] != wid:
                return False
        for wid, word in self._word_of.items():
            if wid in other._word_of and other._word_of[wid] != word:
                return False
        return True

    def write(self, out: Union[str, FilePath, TextIO]) -> None:
        with _ensure_writable(out) as fh:
            for word, wid in self.items():
                fh.write(f"{word}\t{wid}\n")

    @classmethod
    def read(cls, src: Union[str, FilePath, TextIO]) -> "SymbolTable":
        table = cls()
        with _ensure_readable(src) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ParseError(f"symbol table line {lineno}: expected 'word<TAB>id'")
                word, wid_text = parts
                try:
                    wid = int(wid_text)
                except ValueError:
                    raise ParseError(f"symbol table line {lineno}: bad id {wid_text!r}") from None
                if word in table._id_of and table._id_of[word] != wid:
                    raise ParseError(f"symbol table line {lineno}: conflicting id for {word!r}")
                if wid in table._word_of and table._word_of[wid] != word:
                    raise ParseError(f"symbol table line {lineno}: id {wid} already assigned")
                table._id_of[word] = wid
                table._word_of[wid] = word
        return table


@dataclass
class Arc:
    ilabel: int
    olabel: int
    weight: float
    dst: int


@dataclass
class Path:
    """A start-to-final path: visited states, traversed arcs, total cost."""

    states: list[int]
    arcs: list[Arc]
    cost: float
    words: list[str]  # output labels, epsilons removed


class Fst:
    """Weighted transducer: per-state arc lists, one start, weighted finals."""

    def __init__(self, isyms: Optional[SymbolTable] = None, osyms: Optional[SymbolTable] = None):
        self.arcs: list[list[Arc]] = []
        self.start: int = NO_STATE
        self.finals: dict[int, float] = {}
        self.isyms = isyms
        self.osyms = osyms if osyms is not None else isyms
        self.metadata: dict[str, str] = {}

    # -- construction ----------------------------------------------------

    def add_state(self) -> int:
        self.arcs.append([])
        return len(self.arcs) - 1

    def add_states(self, n: int) -> None:
        for _ in range(n):
            self.add_state()

    def set_start(self, s: int) -> None:
        self.start = s

    def set_final(self, s: int, weight: float = semiring.ONE) -> None:
        self.finals[s] = weight

    def add_arc(self, src: int, ilabel: int, olabel: int, weight: float, dst: int) -> None:
        self.arcs[src].append(Arc(ilabel, olabel, weight, dst))

    # -- inspection ------------------------------------------------------

    @property
    def num_states(self) -> int:
        return len(self.arcs)

    @property
    def num_arcs(self) -> int:
        return sum(len(a) for a in self.arcs)

    def states(self) -> range:
        return range(len(self.arcs))

    def is_final(self, s: int) -> bool:
        return s in self.finals

    def is_acyclic(self) -> bool:
        color = [0] * self.num_states  # 0 white, 1 on stack, 2 done
        for root in self.states():
            if color[root]:
                continue
            stack = [(root, 0)]
            color[root] = 1
            while stack:
                s, i = stack[-1]
                if i < len(self.arcs[s]):
                    stack[-1] = (s, i + 1)
                    t = self.arcs[s][i].dst
                    if color[t] == 1:
                        return False
                    if color[t] == 0:
                        color[t] = 1
                        stack.append((t, 0))
                else:
                    color[s] = 2
                    stack.pop()
        return True

    def copy(self) -> "Fst":
        out = Fst(self.isyms, self.osyms)
        out.arcs = [[Arc(a.ilabel, a.olabel, a.weight, a.dst) for a in arcs] for arcs in self.arcs]
        out.start = self.start
        out.finals = dict(self.finals)
        out.metadata = dict(self.metadata)
        return out

    def structurally_equal(self, other: "Fst", tol: float = 0.0) -> bool:
        """Same states, same arc multisets per state, same finals and start."""
        if self.num_states != other.num_states or self.start != other.start:
            return False
        if set(self.finals) != set(other.finals):
            return False
        for s, w in self.finals.items():
            if abs(w - other.finals[s]) > tol:
                return False
        for s in self.states():
            a = sorted((x.ilabel, x.olabel, x.dst, round(x.weight, 12)) for x in self.arcs[s])
            b = sorted((x.ilabel, x.olabel, x.dst, round(x.weight, 12)) for x in other.arcs[s])
            if len(a) != len(b):
                return False
            for (i1, o1, d1, w1), (i2, o2, d2, w2) in zip(a, b):
                if (i1, o1, d1) != (i2, o2, d2) or abs(w1 - w2) > tol:
                    return False
        return True


def identity_acceptor(syms: SymbolTable) -> Fst:
    """Single-state acceptor looping every vocabulary word at cost 0."""
    fst = Fst(syms, syms)
    s0 = fst.add_state()
    fst.set_start(s0)
    fst.set_final(s0, semiring.ONE)
    for wid in syms.ids():
        fst.add_arc(s0, wid, wid, semiring.ONE, s0)
    return fst


# -- operations ----------------------------------------------------------


def arc_sort(f: Fst, side: str = "input") -> Fst:
    """Return a copy with each state's arcs ordered by the chosen label."""
    if side not in ("input", "output"):
        raise ValueError(f"side must be 'input' or 'output', got {side!r}")
    out = f.copy()
    key = (lambda a: a.ilabel) if side == "input" else (lambda a: a.olabel)
    for arcs in out.arcs:
        arcs.sort(key=key)
    return out


def connect(f: Fst) -> Fst:
    """Drop states that are not on any start-to-final path."""
    n = f.num_states
    if f.start == NO_STATE or n == 0:
        return Fst(f.isyms, f.osyms)
    forward = _reachable(f.start, n, lambda s: (a.dst for a in f.arcs[s]))
    rev: list[list[int]] = [[] for _ in range(n)]
    for s in f.states():
        for a in f.arcs[s]:
            rev[a.dst].append(s)
    backward = [False] * n
    stack = [s for s in f.finals if s < n]
    for s in stack:
        backward[s] = True
    while stack:
        s = stack.pop()
        for p in rev[s]:
            if not backward[p]:
                backward[p] = True
                stack.append(p)
    keep = [s for s in f.states() if forward[s] and backward[s]]
    if f.start not in keep:
        return Fst(f.isyms, f.osyms)
    remap = {old: new for new, old in enumerate(keep)}
    out = Fst(f.isyms, f.osyms)
    out.metadata = dict(f.metadata)
    out.add_states(len(keep))
    out.set_start(remap[f.start])
    for old in keep:
        for a in f.arcs[old]:
            if a.dst in remap:
                out.add_arc(remap[old], a.ilabel, a.olabel, a.weight, remap[a.dst])
        if old in f.finals:
            out.set_final(remap[old], f.finals[old])
    return out


def _reachable(start: int, n: int, succ) -> list[bool]:
    seen = [False] * n
    seen[start] = True
    stack = [start]
    while stack:
        s = stack.pop()
        for t in succ(s):
            if not seen[t]:
                seen[t] = True
                stack.append(t)
    return seen


def _has_epsilon_cycle(f: Fst, side: str) -> bool:
    """Cycle made purely of epsilon arcs on the given side."""
    pick = (lambda a: a.ilabel) if side == "input" else (lambda a: a.olabel)
    color = [0] * f.num_states  # 0 white, 1 on stack, 2 done
    for root in f.states():
        if color[root]:
            continue
        stack = [(root, 0)]
        color[root] = 1
        while stack:
            s, i = stack[-1]
            advanced = False
            while i < len(f.arcs[s]):
                a = f.arcs[s][i]
                i += 1
                if pick(a) != EPSILON:
                    continue
                stack[-1] = (s, i)
                if color[a.dst] == 1:
                    return True
                if color[a.dst] == 0:
                    color[a.dst] = 1
                    stack.append((a.dst, 0))
                advanced = True
                break
            if not advanced:
                color[s] = 2
                stack.pop()
    return False


def compose(a: Fst, b: Fst) -> Fst:
    """Compose two transducers over the tropical semiring.

    Epsilons are handled with a sequencing filter (three filter states
    plus a paired epsilon move) so every path of the relation is matched
    exactly once. Pure epsilon loops in either operand are rejected.
    """
    if a.osyms is not None and b.isyms is not None and not a.osyms.consistent_with(b.isyms):
        raise SymbolTableMismatch("output symbols of the left operand disagree with input symbols of the right")
    if a.start == NO_STATE or b.start == NO_STATE:
        return Fst(a.isyms, b.osyms)
    if _has_epsilon_cycle(a, "output"):
        raise ParseError("left operand has an epsilon cycle on its output side")
    if _has_epsilon_cycle(b, "input"):
        raise ParseError("right operand has an epsilon cycle on its input side")

    # Index right-operand arcs by input label per state.
    b_index: list[dict[int, list[Arc]]] = []
    for arcs in b.arcs:
        idx: dict[int, list[Arc]] = {}
        for arc in arcs:
            idx.setdefault(arc.ilabel, []).append(arc)
        b_index.append(idx)

    out = Fst(a.isyms, b.osyms)
    state_id: dict[tuple[int, int, int], int] = {}

    def state_of(key: tuple[int, int, int]) -> int:
        sid = state_id.get(key)
        if sid is None:
            sid = out.add_state()
            state_id[key] = sid
            queue.append(key)
        return sid

    queue: list[tuple[int, int, int]] = []
    start_key = (a.start, b.start, 0)
    out.set_start(state_of(start_key))
    head = 0
    while head < len(queue):
        sa, sb, q = queue[head]
        src = state_id[(sa, sb, q)]
        head += 1
        b_eps = b_index[sb].get(EPSILON, ())
        for aa in a.arcs[sa]:
            if aa.olabel != EPSILON:
                for ba in b_index[sb].get(aa.olabel, ()):
                    dst = state_of((aa.dst, ba.dst, 0))
                    out.add_arc(src, aa.ilabel, ba.olabel, aa.weight + ba.weight, dst)
            else:
                if q != 2:  # left moves alone
                    dst = state_of((aa.dst, sb, 1))
                    out.add_arc(src, aa.ilabel, EPSILON, aa.weight, dst)
                if q == 0:  # paired epsilon move, both advance
                    for ba in b_eps:
                        dst = state_of((aa.dst, ba.dst, 0))
                        out.add_arc(src, aa.ilabel, ba.olabel, aa.weight + ba.weight, dst)
        if q != 1:  # right moves alone
            for ba in b_eps:
                dst = state_of((sa, ba.dst, 2))
                out.add_arc(src, EPSILON, ba.olabel, ba.weight, dst)
        if sa in a.finals and sb in b.finals:
            out.set_final(src, a.finals[sa] + b.finals[sb])
    return out


def _topological_order(f: Fst) -> Optional[list[int]]:
    """States in topological order, or None when the machine is cyclic."""
    n = f.num_states
    indeg = [0] * n
    for s in f.states():
        for a in f.arcs[s]:
            indeg[a.dst] += 1
    ready = [s for s in range(n) if indeg[s] == 0]
    order = []
    while ready:
        s = ready.pop()
        order.append(s)
        for a in f.arcs[s]:
            indeg[a.dst] -= 1
            if indeg[a.dst] == 0:
                ready.append(a.dst)
    return order if len(order) == n else None


def shortest_path(f: Fst) -> Optional[Path]:
    """Minimum-cost start-to-final path, or None when the language is empty.

    Ties between equal-cost paths go to the arc sequence that is
    lexicographically smallest by (state id, arc index). Acyclic inputs
    (the only kind the toolkit guarantees) get that tie-break exactly;
    cyclic inputs break ties by hop count first so extraction terminates,
    and a negative-cost cycle on a useful path raises NegativeCycleError.
    """
    if f.start == NO_STATE or f.num_states == 0 or not f.finals:
        return None
    order = _topological_order(f)
    if order is not None:
        best = _best_from_acyclic(f, order)
    else:
        best = _best_from_cyclic(f)
    if best[f.start] == semiring.ZERO:
        return None
    return _extract_path(f, best, lexicographic=order is not None)


def _best_from_acyclic(f: Fst, order: list[int]) -> list[float]:
    best = [semiring.ZERO] * f.num_states
    for s in reversed(order):
        w = f.finals.get(s, semiring.ZERO)
        for a in f.arcs[s]:
            cand = a.weight + best[a.dst]
            if cand < w:
                w = cand
        best[s] = w
    return best


def _best_from_cyclic(f: Fst) -> list[float]:
    # Bellman-Ford toward the finals; only states on useful paths matter.
    n = f.num_states
    forward = _reachable(f.start, n, lambda s: (a.dst for a in f.arcs[s]))
    best = [semiring.ZERO] * n
    for s, w in f.finals.items():
        best[s] = w
    for _ in range(n):
        changed = False
        for s in range(n):
            w = f.finals.get(s, semiring.ZERO)
            for a in f.arcs[s]:
                cand = a.weight + best[a.dst]
                if cand < w:
                    w = cand
            if w < best[s]:
                best[s] = w
                changed = True
        if not changed:
            return best
    for s in range(n):
        if not forward[s]:
            continue
        for a in f.arcs[s]:
            if a.weight + best[a.dst] < best[s]:
                raise NegativeCycleError("negative-cost cycle on a start-to-final path")
    return best


def _extract_path(f: Fst, best: list[float], lexicographic: bool) -> Path:
    hops: Optional[list[float]] = None
    if not lexicographic:
        hops = _min_hops(f, best)
    states = [f.start]
    arcs: list[Arc] = []
    labels: list[int] = []
    s = f.start
    while True:
        resid = best[s]
        if s in f.finals and f.finals[s] == resid:
            break
        chosen = None
        for a in f.arcs[s]:
            if a.weight + best[a.dst] == resid:
                if hops is not None and hops[a.dst] != hops[s] - 1:
                    continue
                chosen = a
                break
        if chosen is None:
            # Converged costs can miss exact float equality only through
            # an inconsistent relaxation order; re-check with tolerance.
            for a in f.arcs[s]:
                if semiring.approx_equal(a.weight + best[a.dst], resid, 1e-12):
                    chosen = a
                    break
        assert chosen is not None, "path extraction lost the optimum"
        arcs.append(chosen)
        labels.append(chosen.olabel)
        s = chosen.dst
        states.append(s)
    words = []
    for lab in labels:
        if lab == EPSILON:
            continue
        words.append(f.osyms.word(lab) if f.osyms is not None else str(lab))
    return Path(states=states, arcs=arcs, cost=best[f.start] if f.start != NO_STATE else semiring.ZERO, words=words)


def _min_hops(f: Fst, best: list[float]) -> list[float]:
    # BFS over the subgraph of optimal moves, measured from the finals.
    import collections

    n = f.num_states
    hops = [semiring.ZERO] * n
    queue = collections.deque()
    for s, w in f.finals.items():
        if best[s] == w:
            hops[s] = 0
            queue.append(s)
    rev: list[list[int]] = [[] for _ in range(n)]
    for s in range(n):
        for a in f.arcs[s]:
            if a.weight + best[a.dst] == best[s]:
                rev[a.dst].append(s)
    while queue:
        s = queue.popleft()
        for p in rev[s]:
            if hops[p] == semiring.ZERO:
                hops[p] = hops[s] + 1
                queue.append(p)
    return hops


# -- text serialization ---------------------------------------------------


def write_fst_text(f: Fst, out: Union[str, FilePath, TextIO]) -> None:
    with _ensure_writable(out) as fh:
        for key in sorted(f.metadata):
            fh.write(f"# {key}={f.metadata[key]}\n")
        if f.start == NO_STATE:
            return
        state_order = [f.start] + [s for s in f.states() if s != f.start]
        for s in state_order:
            for a in f.arcs[s]:
                fh.write(f"{s}\t{a.dst}\t{a.ilabel}\t{a.olabel}\t{a.weight!r}\n")
            if s in f.finals:
                fh.write(f"{s}\t{f.finals[s]!r}\n")


def read_fst_text(
    src: Union[str, FilePath, TextIO],
    isyms: Optional[SymbolTable] = None,
    osyms: Optional[SymbolTable] = None,
) -> Fst:
    fst = Fst(isyms, osyms)
    with _ensure_readable(src) as fh:
        first = True
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    fst.metadata[key.strip()] = value.strip()
                continue
            parts = line.split("\t")
            try:
                if len(parts) in (4, 5):
                    src_s, dst_s, il, ol = (int(p) for p in parts[:4])
                    w = float(parts[4]) if len(parts) == 5 else 0.0
                    _grow(fst, max(src_s, dst_s))
                    fst.add_arc(src_s, il, ol, w, dst_s)
                elif len(parts) in (1, 2):
                    src_s = int(parts[0])
                    w = float(parts[1]) if len(parts) == 2 else 0.0
                    _grow(fst, src_s)
                    fst.set_final(src_s, w)
                else:
                    raise ValueError("wrong field count")
            except ValueError as exc:
                raise ParseError(f"fst text line {lineno}: {exc}") from None
            if first:
                fst.set_start(src_s)
                first = False
    return fst


def _grow(fst: Fst, sid: int) -> None:
    while fst.num_states <= sid:
        fst.add_state()


class _ensure_writable:
    def __init__(self, out):
        self._out = out
        self._own = isinstance(out, (str, FilePath))

    def __enter__(self) -> TextIO:
        if self._own:
            self._fh = open(self._out, "w", encoding="utf-8", newline="\n")
        else:
            self._fh = self._out
        return self._fh

    def __exit__(self, *exc):
        if self._own:
            self._fh.close()
        return False


class _ensure_readable:
    def __init__(self, src):
        self._src = src
        self._own = isinstance(src, (str, FilePath))

    def __enter__(self) -> TextIO:
        if self._own:
            self._fh = open(self._src, "r", encoding="utf-8")
        else:
            self._fh = self._src
        return self._fh

    def __exit__(self, *exc):
        if self._own:
            self._fh.close()
        return False
