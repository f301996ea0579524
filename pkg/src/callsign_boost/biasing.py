"""Per-utterance biasing acceptors that reward complete callsign matches.

The machine is a word trie over the target variants hung off a single
hub state. The hub is start and final and carries a zero-cost self-loop
for every vocabulary word, so any word sequence is accepted at its
original cost. Walking a variant chain accumulates negative weight
(credit); every interior trie node has an epsilon "abandon" arc back to
the hub that adds the accumulated credit back, so a partial match nets
exactly zero. Nodes completing a variant instead carry an epsilon
completion arc whose weight tops the accumulated credit up to exactly
-discount. A word sequence therefore gets one discount per complete,
non-overlapping variant occurrence and is otherwise untouched.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .errors import SchemaError
from .fst import EPSILON, Fst, SymbolTable


def build_biasing_fst(
    variants: Iterable[Sequence[str]],
    discount: float,
    syms: SymbolTable,
    allow_new_words: bool = True,
) -> Fst:
    """Build the biasing acceptor for one utterance.

    Words missing from syms are added to it (the same table then serves
    grammar-level boosting); pass allow_new_words=False to forbid that.
    An empty variant set yields the identity acceptor.
    """
    if discount <= 0:
        raise ValueError(f"discount must be positive, got {discount}")
    unique = sorted({tuple(v) for v in variants if len(v) > 0})
    for variant in unique:
        for word in variant:
            if word not in syms:
                if not allow_new_words:
                    raise SchemaError(f"variant word {word!r} not in the symbol table")
                syms.add(word)

    fst = Fst(syms, syms)
    hub = fst.add_state()
    fst.set_start(hub)
    fst.set_final(hub, 0.0)
    for wid in syms.ids():
        fst.add_arc(hub, wid, wid, 0.0, hub)

    # Trie over the variants. A shared edge keeps the per-arc credit of
    # whichever variant created it (first in sorted order); the epsilon
    # arcs settle every total exactly, so the split is cosmetic.
    children: dict[int, dict[str, int]] = {hub: {}}
    accum: dict[int, float] = {hub: 0.0}
    ends: set[int] = set()

    for variant in unique:
        per_arc = discount / len(variant)
        node = hub
        for word in variant:
            nxt = children[node].get(word)
            if nxt is None:
                nxt = fst.add_state()
                children[node][word] = nxt
                children[nxt] = {}
                wid = syms.id(word)
                fst.add_arc(node, wid, wid, -per_arc, nxt)
                accum[nxt] = accum[node] - per_arc
            node = nxt
        ends.add(node)

    for node in children:
        if node == hub:
            continue
        if node in ends:
            fst.add_arc(node, EPSILON, EPSILON, -discount - accum[node], hub)
        else:
            fst.add_arc(node, EPSILON, EPSILON, -accum[node], hub)
    return fst
