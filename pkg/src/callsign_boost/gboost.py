"""Grammar-level boosting: make callsign word arcs cheaper in G.

Word mode (the default) discounts every arc whose label is one of the
variant words and, at states that have a backoff (epsilon) arc but no
arc for a needed word, creates a cheap arc toward the grammar's
unigram-context state. Sequence mode walks the variant trie along the
grammar instead, so only arcs whose label history matches a variant
prefix are touched; that avoids over-boosting digit words that are
common outside callsigns.

The baseline grammar is never mutated; each call returns a fresh copy,
matching the operational mode of keeping one boosted grammar per
utterance. The output carries a ``boosted`` metadata entry so tooling
can spot accidental double boosting.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence, Union

from .errors import SchemaError
from .fst import EPSILON, Fst

AUTO = "auto"


def boost_grammar(
    g: Fst,
    variants: Iterable[Sequence[str]],
    discount: float,
    new_arc_cost: Union[float, str] = AUTO,
    mode: str = "word",
) -> Fst:
    if mode not in ("word", "sequence"):
        raise ValueError(f"mode must be 'word' or 'sequence', got {mode!r}")
    if discount < 0:
        raise ValueError(f"discount must be nonnegative, got {discount}")
    if g.isyms is None:
        raise SchemaError("grammar has no symbol table; words cannot be resolved")
    variant_list = sorted({tuple(v) for v in variants if len(v) > 0})

    out = g.copy()
    if mode == "word":
        created = _boost_words(out, variant_list, discount, new_arc_cost)
    else:
        created = _boost_sequences(out, variant_list, discount, new_arc_cost)

    marker = f"k={discount} mode={mode} created={created}"
    prior = out.metadata.get("boosted")
    out.metadata["boosted"] = f"{prior}; {marker}" if prior else marker
    return out


def _boost_words(g: Fst, variants, discount: float, new_arc_cost) -> int:
    needed = sorted({w for v in variants for w in v})
    needed_ids = {g.isyms.add(w): w for w in needed}
    for s in g.states():
        for a in g.arcs[s]:
            if a.ilabel != EPSILON and a.ilabel in needed_ids:
                a.weight -= discount
    created = 0
    for s in list(g.states()):
        if not _has_backoff(g, s):
            continue
        have = {a.ilabel for a in g.arcs[s]}
        missing = [wid for wid in sorted(needed_ids) if wid not in have]
        if not missing:
            continue
        target = _resolve_unigram_state(g, s)
        cost = _arc_cost(g, s, new_arc_cost)
        for wid in missing:
            g.add_arc(s, wid, wid, cost, target)
            created += 1
    return created


def _boost_sequences(g: Fst, variants, discount: float, new_arc_cost) -> int:
    trie = _build_trie(variants)
    word_of = {}
    for v in variants:
        for w in v:
            word_of[g.isyms.add(w)] = w

    # Pairs of (grammar state, trie node); every state can start a match.
    visited = set()
    queue = deque()
    for s in g.states():
        queue.append((s, 0))
        visited.add((s, 0))
    to_discount: set[tuple[int, int]] = set()
    to_create: dict[tuple[int, str], tuple[int, int]] = {}

    while queue:
        s, t = queue.popleft()
        node = trie[t]
        for idx, a in enumerate(g.arcs[s]):
            if a.ilabel == EPSILON:
                # backoff keeps the word history
                if (a.dst, t) not in visited:
                    visited.add((a.dst, t))
                    queue.append((a.dst, t))
                continue
            word = word_of.get(a.ilabel)
            child = node.get(word) if word is not None else None
            if child is not None:
                to_discount.add((s, idx))
                if (a.dst, child) not in visited:
                    visited.add((a.dst, child))
                    queue.append((a.dst, child))
        if _has_backoff(g, s):
            have = {a.ilabel for a in g.arcs[s]}
            for word, child in sorted(node.items()):
                wid = g.isyms.id(word)
                if wid in have or (s, word) in to_create:
                    continue
                target = _resolve_unigram_state(g, s)
                to_create[(s, word)] = (target, child)
                if (target, child) not in visited:
                    visited.add((target, child))
                    queue.append((target, child))

    for s, idx in to_discount:
        g.arcs[s][idx].weight -= discount
    state_cost = {s: _arc_cost(g, s, new_arc_cost) for (s, _w) in to_create}
    for (s, word), (target, _child) in sorted(to_create.items()):
        wid = g.isyms.id(word)
        g.add_arc(s, wid, wid, state_cost[s], target)
    return len(to_create)


def _build_trie(variants) -> list[dict[str, int]]:
    trie: list[dict[str, int]] = [{}]
    for v in variants:
        node = 0
        for w in v:
            nxt = trie[node].get(w)
            if nxt is None:
                trie.append({})
                nxt = len(trie) - 1
                trie[node][w] = nxt
            node = nxt
    return trie


def _has_backoff(g: Fst, s: int) -> bool:
    return any(a.ilabel == EPSILON for a in g.arcs[s])


def _resolve_unigram_state(g: Fst, s: int) -> int:
    """Follow backoff arcs to the state they bottom out at."""
    seen = {s}
    cur = s
    while True:
        eps = [a for a in g.arcs[cur] if a.ilabel == EPSILON]
        if not eps:
            return cur
        cur = eps[0].dst
        if cur in seen:
            raise SchemaError(f"cannot resolve unigram-context state: backoff cycle at state {s}")
        seen.add(cur)


def _arc_cost(g: Fst, s: int, new_arc_cost) -> float:
    if new_arc_cost != AUTO:
        return float(new_arc_cost)
    outgoing = [a.weight for a in g.arcs[s]]
    if not outgoing:
        return 0.1
    return max(0.1, min(outgoing) + 1.0)
