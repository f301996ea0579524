import pytest

from callsign_boost.errors import ParseError, SchemaError, UnknownAirline
from callsign_boost.expansion import (
    DIGIT_WORDS,
    NATO_WORDS,
    ExpansionOptions,
    default_airline_table,
    expand,
    load_airline_table,
    parse_callsign,
    spell_tail,
)


@pytest.fixture(scope="module")
def table():
    return default_airline_table()


def test_parse_table1_examples(table):
    assert parse_callsign("SWR2689", table) == ("SWR", "2689")
    assert parse_callsign("RYR1RK", table) == ("RYR", "1RK")
    assert parse_callsign("DLH5KX", table) == ("DLH", "5KX")


def test_expand_table1_examples(table):
    assert expand("SWR2689", table) == [("swiss", "two", "six", "eight", "nine")]
    assert expand("RYR1RK", table) == [("ryanair", "one", "romeo", "kilo")]
    assert expand("RYR1SG", table) == [("ryanair", "one", "sierra", "golf")]


def test_expand_multi_variant_airline(table):
    got = expand("DLH5KX", table)
    assert got == [
        ("hansa", "five", "kilo", "x-ray"),
        ("lufthansa", "five", "kilo", "x-ray"),
    ]


def test_unknown_airline_carries_raw_text(table):
    with pytest.raises(UnknownAirline) as exc:
        parse_callsign("ZZZ123", table)
    assert exc.value.raw == "ZZZ123"


@pytest.mark.parametrize("bad", ["", "123", "A1", "ABCD12", "RYR", "ryr1rk", "RYRX", "SWR12345"])
def test_malformed_callsigns_rejected(table, bad):
    with pytest.raises(ParseError):
        parse_callsign(bad, table)


def test_niner_variant_behind_flag(table):
    default = expand("SWR9", table)
    assert default == [("swiss", "nine")]
    both = expand("SWR9", table, ExpansionOptions(niner=True))
    assert both == [("swiss", "nine"), ("swiss", "niner")]


def test_spell_tail_covers_digits_and_nato():
    assert spell_tail("2689") == [("two", "six", "eight", "nine")]
    assert spell_tail("1RK") == [("one", "romeo", "kilo")]
    assert set(DIGIT_WORDS.values()) >= {"zero", "nine"}
    assert NATO_WORDS["A"] == "alfa" and NATO_WORDS["J"] == "juliett" and NATO_WORDS["X"] == "x-ray"


def test_load_airline_table_merges_duplicates(tmp_path):
    p = tmp_path / "airlines.csv"
    p.write_text("# comment\nDLH,lufthansa;hansa\nSWR,swiss\nSWR,swissair\n")
    table = load_airline_table(p)
    assert table.get("DLH").telephony == [("lufthansa",), ("hansa",)]
    assert table.get("SWR").telephony == [("swiss",), ("swissair",)]


def test_load_airline_table_empty_file_gives_empty_table(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    table = load_airline_table(p)
    assert len(table) == 0
    with pytest.raises(UnknownAirline):
        expand("SWR2689", table)


def test_load_airline_table_bad_row_reports_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("SWR,swiss\nnot a row\n")
    with pytest.raises(SchemaError, match=":2:"):
        load_airline_table(p)


def test_variant_count_is_telephony_times_tail_spellings(table):
    for raw in ["DLH5KX", "SWR2689", "RYR1RK"]:
        designator, tail = parse_callsign(raw, table)
        n_tel = len(table.get(designator).telephony)
        assert len(expand(raw, table)) == n_tel * len(spell_tail(tail))


def test_variant_structure(table):
    designator, tail = parse_callsign("DLH5KX", table)
    names = table.get(designator).telephony
    for variant in expand("DLH5KX", table):
        prefix = next(n for n in names if variant[: len(n)] == n)
        rest = variant[len(prefix):]
        assert len(rest) == len(tail)
        for word, ch in zip(rest, tail):
            assert word == (DIGIT_WORDS[ch] if ch.isdigit() else NATO_WORDS[ch])


def test_expand_is_deterministic(table):
    assert expand("DLH5KX", table) == expand("DLH5KX", table)
