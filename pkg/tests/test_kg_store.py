"""Triple loading, interning, and subgraph extraction."""

from __future__ import annotations

import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathpool.errors import ConfigError, EntityLookupError, ParseError
from pathpool.kg_store import extract_subgraph, load_queries, load_triples


def test_empty_input_gives_empty_store():
    store = load_triples(io.StringIO(""))
    assert store.n_entities == 0
    assert store.n_relations == 0
    assert store.n_triples == 0


def test_duplicate_lines_collapse():
    store = load_triples(io.StringIO("A\tr1\tB\nB\tr2\tC\nA\tr1\tB\n"))
    assert store.n_entities == 3
    assert store.n_relations == 2
    assert store.n_triples == 2


def test_wrong_arity_reports_line_number():
    with pytest.raises(ParseError) as err:
        load_triples(io.StringIO("A\tr1\n"))
    assert err.value.line == 1


def test_empty_field_rejected():
    with pytest.raises(ParseError):
        load_triples(io.StringIO("A\t\tB\n"))


def test_comments_and_blank_lines_skipped():
    store = load_triples(io.StringIO("# header\n\nA\tr\tB\n  \n# trailing\n"))
    assert store.n_triples == 1


def test_round_trip_lines():
    text = "A\tr1\tB\nB\tr2\tC\n"
    store = load_triples(io.StringIO(text))
    assert "\n".join(store.lines()) + "\n" == text


def test_interning_is_deterministic():
    text = "X\tr\tY\nY\tr\tZ\nA\tq\tX\n"
    first = load_triples(io.StringIO(text))
    second = load_triples(io.StringIO(text))
    assert first.entity_labels() == second.entity_labels()
    assert first.triples == second.triples


def test_load_from_byte_stream(tmp_path):
    path = tmp_path / "kg.tsv"
    path.write_bytes("Å\tr\tB\n".encode("utf-8"))
    with open(path, "rb") as handle:
        store = load_triples(handle)
    assert list(store.lines()) == ["Å\tr\tB"]


def test_subgraph_two_hop_ball_on_chain():
    store = load_triples(io.StringIO("A\tr\tB\nB\tr\tC\nC\tr\tD\n"))
    sub = extract_subgraph(store, ["A"], hops=2)
    assert sorted(sub.lines()) == ["A\tr\tB", "B\tr\tC"]


def test_subgraph_one_hop_single_triple():
    store = load_triples(io.StringIO("A\tr\tB\n"))
    sub = extract_subgraph(store, ["A"], hops=1)
    assert list(sub.lines()) == ["A\tr\tB"]


def test_subgraph_excludes_disconnected_component():
    store = load_triples(io.StringIO("A\tr\tB\nX\tr\tY\n"))
    for hops in (1, 3, 10):
        sub = extract_subgraph(store, ["A"], hops=hops)
        assert "X\tr\tY" not in set(sub.lines())


def test_subgraph_follows_undirected_steps():
    # C is upstream of A; reachable via one undirected step
    store = load_triples(io.StringIO("C\tr\tA\nA\tr\tB\n"))
    sub = extract_subgraph(store, ["A"], hops=1)
    assert sorted(sub.lines()) == ["A\tr\tB", "C\tr\tA"]


def test_subgraph_unknown_entity():
    store = load_triples(io.StringIO("A\tr\tB\n"))
    with pytest.raises(EntityLookupError) as err:
        extract_subgraph(store, ["NOPE"], hops=1)
    assert "NOPE" in str(err.value)


def test_subgraph_rejects_zero_hops():
    store = load_triples(io.StringIO("A\tr\tB\n"))
    with pytest.raises(ConfigError):
        extract_subgraph(store, ["A"], hops=0)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_subgraph_monotone_in_hops(data):
    n = data.draw(st.integers(2, 8))
    edges = data.draw(
        st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(0, 2), st.integers(0, n - 1)),
            min_size=1,
            max_size=14,
        )
    )
    lines = [f"E{h}\tr{r}\tE{t}" for h, r, t in edges]
    store = load_triples(io.StringIO("\n".join(lines) + "\n"))
    anchor = f"E{edges[0][0]}"
    hops = data.draw(st.integers(1, 4))
    smaller = set(extract_subgraph(store, [anchor], hops).lines())
    larger = set(extract_subgraph(store, [anchor], hops + 1).lines())
    assert smaller <= larger


def test_load_queries_normalizes_and_dedups_answers():
    raw = io.StringIO(
        '{"id": "q", "question": "Q?", "query_entities": ["A"],'
        ' "answers": ["X ", "x", "Y."]}\n'
    )
    (record,) = load_queries(raw)
    assert record.gold_answers == ("X ", "Y.")


def test_load_queries_requires_question():
    with pytest.raises(ParseError):
        load_queries(io.StringIO('{"id": "q", "answers": ["a"]}\n'))


def test_load_queries_rejects_bad_json():
    with pytest.raises(ParseError) as err:
        load_queries(io.StringIO("{not json}\n"))
    assert err.value.line == 1
