import io
import random

import pytest

from callsign_boost.biasing import build_biasing_fst
from callsign_boost.errors import EmptyLattice, EmptyRescore, SchemaError
from callsign_boost.fst import SymbolTable, identity_acceptor
from callsign_boost.lattice import (
    Lattice,
    best_hypothesis,
    lattice_to_fst,
    load_lattices,
    read_lattice_text,
    rescore,
    save_lattices,
    shortest_path,
    write_lattice_text,
)

from oracles import enumerate_lattice_paths, random_lattice


def two_path_lattice(path_a, cost_a, path_b, cost_b, utt="u1"):
    """Two parallel complete hypotheses with the cost carried per arc."""
    assert len(path_a) == len(path_b)
    lat = Lattice(utt)
    n = len(path_a)
    lat.add_states(2 * n)  # 0 start, chains interleaved, last state shared
    lat.set_start(0)
    end = lat.add_state()
    for words, total, first in ((path_a, cost_a, True), (path_b, cost_b, False)):
        prev = 0
        for i, w in enumerate(words):
            nxt = end if i == n - 1 else (1 + 2 * i + (0 if first else 1))
            lat.add_arc(prev, w, total / n, 0.0, nxt)
            prev = nxt
    lat.set_final(end)
    return lat


def test_lattice_to_fst_scales_channels():
    lat = Lattice("u")
    lat.add_states(2)
    lat.set_start(0)
    lat.add_arc(0, "hi", 2.0, 1.5, 1)
    lat.set_final(1, 0.25, 0.75)
    both = lattice_to_fst(lat, 1.0, 1.0)
    assert both.arcs[0][0].weight == pytest.approx(3.5)
    assert both.finals[1] == pytest.approx(1.0)
    graph_only = lattice_to_fst(lat, 0.0, 1.0)
    assert graph_only.arcs[0][0].weight == pytest.approx(1.5)
    assert graph_only.finals[1] == pytest.approx(0.75)


def test_lattice_to_fst_best_path_matches_enumeration():
    rng = random.Random(41)
    vocab = ["a", "b", "c", "d"]
    for _ in range(100):
        lat = random_lattice(rng, vocab)
        want = min(cost for _, cost in enumerate_lattice_paths(lat))
        got = shortest_path(lattice_to_fst(lat, 1.0, 1.0))
        assert got.cost == pytest.approx(want, abs=1e-9)


def test_best_hypothesis_single_and_two_path():
    lat = Lattice("u")
    lat.add_states(3)
    lat.set_start(0)
    lat.add_arc(0, "good", 1.0, 0.0, 1)
    lat.add_arc(1, "day", 1.0, 0.0, 2)
    lat.set_final(2)
    assert best_hypothesis(lat).words == ["good", "day"]

    two = two_path_lattice(["a", "b"], 4.0, ["c", "d"], 3.0)
    hyp = best_hypothesis(two)
    assert hyp.words == ["c", "d"]
    assert hyp.cost == pytest.approx(3.0)


def test_best_hypothesis_strips_epsilons():
    lat = Lattice("u")
    lat.add_states(3)
    lat.set_start(0)
    lat.add_arc(0, "<eps>", 0.5, 0.0, 1)
    lat.add_arc(1, "word", 1.0, 0.0, 2)
    lat.set_final(2)
    assert best_hypothesis(lat).words == ["word"]


def test_best_hypothesis_empty_lattice_raises():
    with pytest.raises(EmptyLattice):
        best_hypothesis(Lattice("u"))


def test_rescore_identity_bias_is_noop():
    rng = random.Random(43)
    vocab = ["x", "y", "z"]
    for _ in range(30):
        lat = random_lattice(rng, vocab)
        bias = identity_acceptor(SymbolTable(vocab))
        base = best_hypothesis(lat)
        res = best_hypothesis(rescore(lat, bias))
        assert res.words == base.words
        assert res.cost == pytest.approx(base.cost, abs=1e-9)


def test_rescore_flips_to_callsign_hypothesis():
    # Competing hypotheses 10.0 vs 10.5; discount 2.0 flips the decision.
    baseline_words = ["hello", "sovar", "one", "nine", "lima"]
    callsign_words = ["stobart", "two", "one", "nine", "lima"]
    lat = two_path_lattice(baseline_words, 10.0, callsign_words, 10.5)
    assert best_hypothesis(lat).words == baseline_words

    syms = SymbolTable(sorted(set(baseline_words) | set(callsign_words)))
    bias = build_biasing_fst([tuple(callsign_words)], 2.0, syms)
    hyp = best_hypothesis(rescore(lat, bias))
    assert hyp.words == callsign_words
    assert hyp.cost == pytest.approx(8.5, abs=1e-9)


def test_rescore_never_increases_best_cost():
    rng = random.Random(47)
    vocab = ["swiss", "two", "six", "pad"]
    syms_words = sorted(vocab)
    for _ in range(60):
        lat = random_lattice(rng, vocab)
        syms = SymbolTable(syms_words)
        bias = build_biasing_fst([("swiss", "two"), ("two", "six")], 1.0, syms)
        base = best_hypothesis(lat)
        res = best_hypothesis(rescore(lat, bias))
        assert res.cost <= base.cost + 1e-9


def test_rescore_preserves_acoustic_channel():
    lat = Lattice("u")
    lat.add_states(3)
    lat.set_start(0)
    lat.add_arc(0, "swiss", 2.0, 0.5, 1)
    lat.add_arc(1, "two", 1.0, 0.25, 2)
    lat.set_final(2, 0.125, 0.0625)
    syms = SymbolTable(["swiss", "two"])
    bias = build_biasing_fst([("swiss", "two")], 2.0, syms)
    out = rescore(lat, bias)
    # every composed arc carries the acoustic cost of its source arc
    per_word = {"swiss": 2.0, "two": 1.0, "<eps>": 0.0}
    for arcs in out.arcs:
        for a in arcs:
            assert a.acoustic == per_word[a.word]
    assert all(fa == 0.125 for fa, _ in out.finals.values())


def test_rescore_vocabulary_mismatch_raises_empty_rescore():
    lat = Lattice("u")
    lat.add_states(2)
    lat.set_start(0)
    lat.add_arc(0, "unknown", 1.0, 0.0, 1)
    lat.set_final(1)
    syms = SymbolTable(["swiss"])  # does not cover the lattice vocabulary
    bias = build_biasing_fst([("swiss",)], 1.0, syms)
    with pytest.raises(EmptyRescore):
        rescore(lat, bias)


# -- serialization ------------------------------------------------------------


def test_lattice_text_round_trip():
    rng = random.Random(53)
    for _ in range(20):
        lat = random_lattice(rng, ["a", "b", "c"], utt_id="utt-x")
        buf = io.StringIO()
        write_lattice_text(lat, buf)
        again = read_lattice_text(io.StringIO(buf.getvalue()))
        assert again.utterance_id == "utt-x"
        assert again.num_states == lat.num_states
        assert {w for w, _ in enumerate_lattice_paths(again)} == {
            w for w, _ in enumerate_lattice_paths(lat)
        }
        assert best_hypothesis(again).cost == pytest.approx(best_hypothesis(lat).cost, abs=1e-9)


def test_lattice_text_is_deterministic():
    lat = random_lattice(random.Random(59), ["a", "b"], utt_id="u9")
    bufs = []
    for _ in range(2):
        buf = io.StringIO()
        write_lattice_text(lat, buf)
        bufs.append(buf.getvalue())
    assert bufs[0] == bufs[1]


def test_lattice_batch_stream_and_dir(tmp_path):
    rng = random.Random(61)
    lats = [random_lattice(rng, ["a", "b"], utt_id=f"u{i}") for i in range(3)]

    stream = tmp_path / "all.lats"
    save_lattices(lats, stream)
    from_stream = load_lattices(stream)
    assert [l.utterance_id for l in from_stream] == ["u0", "u1", "u2"]

    d = tmp_path / "lats"
    d.mkdir()
    for lat in lats:
        write_lattice_text(lat, d / f"{lat.utterance_id}.lat")
    from_dir = load_lattices(d)
    assert [l.utterance_id for l in from_dir] == ["u0", "u1", "u2"]
    for a, b in zip(from_stream, from_dir):
        assert best_hypothesis(a).cost == pytest.approx(best_hypothesis(b).cost, abs=1e-9)


def test_lattice_batch_duplicate_id_rejected(tmp_path):
    lat = random_lattice(random.Random(67), ["a"], utt_id="dup")
    stream = tmp_path / "dup.lats"
    with open(stream, "w") as fh:
        write_lattice_text(lat, fh)
        write_lattice_text(lat, fh)
    with pytest.raises(SchemaError, match="duplicate"):
        load_lattices(stream)


def test_lattice_bad_line_reports_number():
    text = "# utt u1\n0\t1\tword\t1.0\n"
    with pytest.raises(SchemaError, match="line 2"):
        read_lattice_text(io.StringIO(text))


def test_cyclic_lattice_rejected():
    text = "# utt u1\n0\t1\ta\t1.0\t0.0\n1\t0\tb\t1.0\t0.0\n1\t0.0\t0.0\n"
    with pytest.raises(SchemaError, match="cyclic"):
        read_lattice_text(io.StringIO(text))
