import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from callsign_boost import semiring
from callsign_boost.errors import NegativeCycleError, ParseError, SymbolTableMismatch
from callsign_boost.fst import (
    Fst,
    SymbolTable,
    arc_sort,
    compose,
    connect,
    identity_acceptor,
    read_fst_text,
    shortest_path,
    write_fst_text,
)

from oracles import (
    compose_min_cost_map,
    min_cost,
    min_cost_map,
    random_acyclic_fst,
)

import io


def small_syms(n=6):
    return SymbolTable(f"w{i}" for i in range(n))


# -- semiring ---------------------------------------------------------------


def test_semiring_identities_sampled():
    rng = random.Random(1)
    for _ in range(1000):
        w = rng.uniform(-50.0, 50.0)
        assert semiring.plus(w, semiring.ZERO) == w
        assert semiring.plus(semiring.ZERO, w) == w
        assert semiring.times(w, semiring.ONE) == w
        assert semiring.times(semiring.ONE, w) == w


def test_semiring_plus_is_min_times_is_sum():
    assert semiring.plus(1.5, -2.0) == -2.0
    assert semiring.times(1.5, -2.0) == -0.5
    assert semiring.plus(semiring.ZERO, semiring.ZERO) == math.inf


@given(
    st.floats(-100, 100, allow_nan=False),
    st.floats(-100, 100, allow_nan=False),
    st.floats(-100, 100, allow_nan=False),
)
def test_semiring_associativity(a, b, c):
    assert semiring.plus(semiring.plus(a, b), c) == semiring.plus(a, semiring.plus(b, c))
    left = semiring.times(semiring.times(a, b), c)
    right = semiring.times(a, semiring.times(b, c))
    assert abs(left - right) <= 1e-12 * max(1.0, abs(left))


# -- compose ------------------------------------------------------------------


def test_compose_with_identity_is_noop():
    syms = small_syms()
    rng = random.Random(7)
    for _ in range(20):
        a = random_acyclic_fst(rng, syms)
        ident = identity_acceptor(syms)
        c = compose(a, ident)
        assert min_cost_map(c) == pytest.approx(min_cost_map(a), abs=1e-9)


def test_compose_single_path_costs_add():
    syms = SymbolTable(["swiss"])
    a = Fst(syms, syms)
    a.add_states(2)
    a.set_start(0)
    a.add_arc(0, syms.id("swiss"), syms.id("swiss"), 1.5, 1)
    a.set_final(1, 0.0)
    b = Fst(syms, syms)
    b.add_states(2)
    b.set_start(0)
    b.add_arc(0, syms.id("swiss"), syms.id("swiss"), -2.0, 1)
    b.set_final(1, 0.0)
    c = compose(a, b)
    path = shortest_path(c)
    assert path is not None
    assert path.cost == pytest.approx(-0.5, abs=1e-12)
    assert path.words == ["swiss"]


def test_compose_matches_path_enumeration_oracle():
    syms = small_syms(4)
    rng = random.Random(11)
    for _ in range(60):
        a = random_acyclic_fst(rng, syms, max_states=6)
        b = random_acyclic_fst(rng, syms, max_states=6)
        got = min_cost_map(compose(a, b))
        want = compose_min_cost_map(a, b)
        assert got.keys() == want.keys()
        for key, cost in want.items():
            assert got[key] == pytest.approx(cost, abs=1e-9)


def test_compose_associative_on_min_cost_maps():
    syms = small_syms(3)
    rng = random.Random(13)
    for _ in range(15):
        a = random_acyclic_fst(rng, syms, max_states=5, max_arcs_per_state=2)
        b = random_acyclic_fst(rng, syms, max_states=5, max_arcs_per_state=2)
        c = random_acyclic_fst(rng, syms, max_states=5, max_arcs_per_state=2)
        left = min_cost_map(compose(compose(a, b), c))
        right = min_cost_map(compose(a, compose(b, c)))
        assert left.keys() == right.keys()
        for key in left:
            assert left[key] == pytest.approx(right[key], abs=1e-9)


def test_compose_empty_intersection_is_empty_not_error():
    s1 = SymbolTable(["a", "b"])
    a = Fst(s1, s1)
    a.add_states(2)
    a.set_start(0)
    a.add_arc(0, s1.id("a"), s1.id("a"), 0.0, 1)
    a.set_final(1)
    b = Fst(s1, s1)
    b.add_states(2)
    b.set_start(0)
    b.add_arc(0, s1.id("b"), s1.id("b"), 0.0, 1)
    b.set_final(1)
    c = compose(a, b)
    assert shortest_path(c) is None


def test_compose_symbol_mismatch_raises():
    s1 = SymbolTable(["a"])
    s2 = SymbolTable(["b"])
    a = identity_acceptor(s1)
    b = identity_acceptor(s2)
    with pytest.raises(SymbolTableMismatch):
        compose(a, b)


def test_compose_rejects_epsilon_cycles():
    syms = SymbolTable(["a"])
    bad = Fst(syms, syms)
    bad.add_states(2)
    bad.set_start(0)
    bad.add_arc(0, 0, 0, 0.0, 1)
    bad.add_arc(1, 0, 0, 0.0, 0)
    bad.set_final(1)
    ok = identity_acceptor(syms)
    with pytest.raises(ParseError):
        compose(bad, ok)
    with pytest.raises(ParseError):
        compose(ok, bad)


# -- shortest path ------------------------------------------------------------


def test_shortest_path_single_path_sums():
    syms = SymbolTable(["x", "y"])
    f = Fst(syms, syms)
    f.add_states(3)
    f.set_start(0)
    f.add_arc(0, syms.id("x"), syms.id("x"), 1.0, 1)
    f.add_arc(1, syms.id("y"), syms.id("y"), 2.0, 2)
    f.set_final(2, 0.5)
    path = shortest_path(f)
    assert path.cost == pytest.approx(3.5)
    assert path.words == ["x", "y"]


def test_shortest_path_prefers_cheaper_parallel_arc():
    syms = SymbolTable(["a", "b"])
    f = Fst(syms, syms)
    f.add_states(2)
    f.set_start(0)
    f.add_arc(0, syms.id("a"), syms.id("a"), 3.0, 1)
    f.add_arc(0, syms.id("b"), syms.id("b"), 2.0, 1)
    f.set_final(1)
    assert shortest_path(f).words == ["b"]


def test_shortest_path_matches_enumeration_oracle():
    syms = small_syms()
    rng = random.Random(3)
    for _ in range(200):
        f = random_acyclic_fst(rng, syms)
        want = min_cost(f)
        got = shortest_path(f)
        if want is None:
            assert got is None
        else:
            assert got.cost == pytest.approx(want, abs=1e-9)


def test_shortest_path_tie_break_is_lexicographic():
    syms = SymbolTable(["a", "b"])
    f = Fst(syms, syms)
    f.add_states(3)
    f.set_start(0)
    # Two equal-cost routes; arc index 0 must win, then prefer stopping.
    f.add_arc(0, syms.id("b"), syms.id("b"), 1.0, 1)
    f.add_arc(0, syms.id("a"), syms.id("a"), 1.0, 2)
    f.add_arc(1, 0, 0, 0.0, 2)
    f.set_final(1, 0.0)
    f.set_final(2, 0.0)
    path = shortest_path(f)
    assert path.words == ["b"]
    assert path.states == [0, 1]


def test_shortest_path_empty_language_is_none():
    f = Fst()
    assert shortest_path(f) is None
    f.add_state()
    f.set_start(0)
    assert shortest_path(f) is None  # no finals


def test_shortest_path_negative_cycle_detected():
    syms = SymbolTable(["a"])
    f = Fst(syms, syms)
    f.add_states(2)
    f.set_start(0)
    f.add_arc(0, syms.id("a"), syms.id("a"), 1.0, 1)
    f.add_arc(1, syms.id("a"), syms.id("a"), -2.0, 0)
    f.set_final(1, 0.0)
    with pytest.raises(NegativeCycleError):
        shortest_path(f)


def test_shortest_path_handles_benign_cycles():
    syms = SymbolTable(["a"])
    f = Fst(syms, syms)
    f.add_states(2)
    f.set_start(0)
    f.add_arc(0, syms.id("a"), syms.id("a"), 1.0, 1)
    f.add_arc(1, syms.id("a"), syms.id("a"), 2.0, 0)
    f.set_final(1, 0.0)
    assert shortest_path(f).cost == pytest.approx(1.0)


# -- connect ------------------------------------------------------------------


def test_connect_removes_dangling_state():
    syms = SymbolTable(["a"])
    f = Fst(syms, syms)
    f.add_states(3)
    f.set_start(0)
    f.add_arc(0, syms.id("a"), syms.id("a"), 1.0, 1)
    f.add_arc(0, syms.id("a"), syms.id("a"), 1.0, 2)  # state 2 is a dead end
    f.set_final(1)
    g = connect(f)
    assert g.num_states == 2
    assert min_cost_map(g) == min_cost_map(f)


def test_connect_empty_is_empty():
    f = Fst()
    g = connect(f)
    assert g.num_states == 0
    assert g.start == -1


def test_connect_preserves_min_cost_map():
    syms = small_syms()
    rng = random.Random(5)
    for _ in range(50):
        f = random_acyclic_fst(rng, syms)
        g = connect(f)
        assert min_cost_map(g) == min_cost_map(f)


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_connect_keeps_shortest_path(seed):
    syms = small_syms()
    f = random_acyclic_fst(random.Random(seed), syms)
    a = shortest_path(f)
    b = shortest_path(connect(f))
    if a is None:
        assert b is None
    else:
        assert b.cost == pytest.approx(a.cost, abs=1e-9)
        assert b.words == a.words


# -- arc_sort -----------------------------------------------------------------


def test_arc_sort_orders_labels():
    syms = small_syms()
    f = Fst(syms, syms)
    f.add_states(2)
    f.set_start(0)
    f.add_arc(0, 5, 5, 0.0, 1)
    f.add_arc(0, 3, 3, 0.0, 1)
    f.set_final(1)
    g = arc_sort(f, "input")
    assert [a.ilabel for a in g.arcs[0]] == [3, 5]
    assert arc_sort(g, "input").structurally_equal(g)


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_arc_sort_preserves_shortest_path(seed):
    syms = small_syms()
    f = random_acyclic_fst(random.Random(seed), syms)
    a = shortest_path(f)
    b = shortest_path(arc_sort(f, "input"))
    if a is None:
        assert b is None
    else:
        assert b.cost == pytest.approx(a.cost, abs=1e-9)


# -- serialization ------------------------------------------------------------


def test_fst_text_round_trip():
    syms = small_syms()
    rng = random.Random(17)
    for _ in range(25):
        f = connect(random_acyclic_fst(rng, syms))
        if f.num_states == 0:
            continue
        buf = io.StringIO()
        write_fst_text(f, buf)
        g = read_fst_text(io.StringIO(buf.getvalue()), syms, syms)
        assert g.num_states == f.num_states
        assert g.start == f.start
        assert g.structurally_equal(f, tol=1e-6)


def test_fst_text_metadata_round_trip():
    syms = SymbolTable(["a"])
    f = identity_acceptor(syms)
    f.metadata["boosted"] = "k=2.0 mode=word"
    buf = io.StringIO()
    write_fst_text(f, buf)
    text = buf.getvalue()
    assert text.startswith("# boosted=")
    g = read_fst_text(io.StringIO(text), syms, syms)
    assert g.metadata == f.metadata


def test_fst_text_optional_weight_defaults_to_zero():
    text = "0\t1\t1\t1\n1\n"
    f = read_fst_text(io.StringIO(text))
    assert f.arcs[0][0].weight == 0.0
    assert f.finals[1] == 0.0
    assert f.start == 0


def test_fst_text_bad_line_raises_with_line_number():
    with pytest.raises(ParseError, match="line 2"):
        read_fst_text(io.StringIO("0\t1\t1\t1\t0.5\n0\t1\t1\n"))


def test_symbol_table_round_trip(tmp_path):
    syms = SymbolTable(["bravo", "alfa"])
    p = tmp_path / "words.txt"
    syms.write(p)
    again = SymbolTable.read(p)
    assert again == syms
    assert again.word(0) == "<eps>"
