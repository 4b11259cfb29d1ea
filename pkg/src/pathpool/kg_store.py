"""Knowledge-graph store: triple loading, label interning, subgraph extraction.

Entities and relations are interned to integer ids in first-seen order, so
loading the same bytes always produces the same id assignment. Public
functions take entity *labels*; ids are an internal detail of the store.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple

from .errors import ConfigError, EntityLookupError, ParseError
from .textnorm import normalize_answer

logger = logging.getLogger(__name__)


class Triple(NamedTuple):
    """Directed edge; fields are interned ids resolved through a TripleStore."""

    head: int
    relation: int
    tail: int


class TripleStore:
    """Deduplicated triple list with interning tables and adjacency indexes.

    Immutable by convention once loaded; safe for concurrent readers.
    """

    def __init__(self) -> None:
        self._entity_labels: list[str] = []
        self._entity_ids: dict[str, int] = {}
        self._relation_labels: list[str] = []
        self._relation_ids: dict[str, int] = {}
        self.triples: list[Triple] = []
        self._triple_set: set[Triple] = set()
        self._out: dict[int, list[int]] = {}
        self._in: dict[int, list[int]] = {}

    # -- construction -------------------------------------------------

    def _intern_entity(self, label: str) -> int:
        eid = self._entity_ids.get(label)
        if eid is None:
            eid = len(self._entity_labels)
            self._entity_ids[label] = eid
            self._entity_labels.append(label)
        return eid

    def _intern_relation(self, label: str) -> int:
        rid = self._relation_ids.get(label)
        if rid is None:
            rid = len(self._relation_labels)
            self._relation_ids[label] = rid
            self._relation_labels.append(label)
        return rid

    def add(self, head: str, relation: str, tail: str) -> bool:
        """Add one triple; returns False if it was a duplicate."""
        triple = Triple(
            self._intern_entity(head),
            self._intern_relation(relation),
            self._intern_entity(tail),
        )
        if triple in self._triple_set:
            return False
        idx = len(self.triples)
        self.triples.append(triple)
        self._triple_set.add(triple)
        self._out.setdefault(triple.head, []).append(idx)
        self._in.setdefault(triple.tail, []).append(idx)
        return True

    # -- lookups ------------------------------------------------------

    @property
    def n_entities(self) -> int:
        return len(self._entity_labels)

    @property
    def n_relations(self) -> int:
        return len(self._relation_labels)

    @property
    def n_triples(self) -> int:
        return len(self.triples)

    def has_entity(self, label: str) -> bool:
        return label in self._entity_ids

    def entity_id(self, label: str) -> int:
        try:
            return self._entity_ids[label]
        except KeyError:
            raise EntityLookupError(label) from None

    def entity_label(self, eid: int) -> str:
        return self._entity_labels[eid]

    def relation_label(self, rid: int) -> str:
        return self._relation_labels[rid]

    def triple_labels(self, triple: Triple) -> tuple[str, str, str]:
        return (
            self._entity_labels[triple.head],
            self._relation_labels[triple.relation],
            self._entity_labels[triple.tail],
        )

    def out_indices(self, eid: int) -> list[int]:
        return self._out.get(eid, [])

    def in_indices(self, eid: int) -> list[int]:
        return self._in.get(eid, [])

    def entity_labels(self) -> list[str]:
        return list(self._entity_labels)

    def lines(self) -> Iterator[str]:
        """Emit the store back as tab-separated lines (round-trip view)."""
        for triple in self.triples:
            h, r, t = self.triple_labels(triple)
            yield f"{h}\t{r}\t{t}"


@dataclass(frozen=True)
class QueryRecord:
    """One benchmark question: text, anchor entities, gold answers."""

    id: str
    question: str
    query_entities: tuple[str, ...]
    gold_answers: tuple[str, ...]


def _iter_lines(source) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as handle:
            yield from handle
        return
    for raw in source:
        if isinstance(raw, bytes):
            yield raw.decode("utf-8")
        else:
            yield raw


def load_triples(source: str | Path | IO | Iterable[str]) -> TripleStore:
    """Parse tab-separated ``head<TAB>relation<TAB>tail`` lines into a store.

    Blank lines and ``#`` comments are skipped; duplicate triples collapse to
    one. Raises ParseError (with line number) on wrong arity or empty fields.
    """
    store = TripleStore()
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(
                f"expected 3 tab-separated fields, got {len(parts)}", line=lineno
            )
        head, relation, tail = (part.strip() for part in parts)
        if not head or not relation or not tail:
            raise ParseError("empty field in triple", line=lineno)
        store.add(head, relation, tail)
    return store


def load_queries(source: str | Path | IO | Iterable[str]) -> list[QueryRecord]:
    """Parse a JSONL query file with keys id, question, query_entities, answers.

    Gold answers are deduplicated by normalized form, keeping the first
    spelling. ``query_entities`` may be empty (evaluation-only records).
    """
    records: list[QueryRecord] = []
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from None
        if not isinstance(payload, dict):
            raise ParseError("query record must be a JSON object", line=lineno)
        question = str(payload.get("question", "")).strip()
        if not question:
            raise ParseError("query record has no question", line=lineno)
        qid = str(payload.get("id", lineno))
        entities = tuple(str(e) for e in payload.get("query_entities", []))
        answers: list[str] = []
        seen: set[str] = set()
        for answer in payload.get("answers", []):
            answer = str(answer)
            key = normalize_answer(answer)
            if key not in seen:
                seen.add(key)
                answers.append(answer)
        records.append(QueryRecord(qid, question, entities, tuple(answers)))
    return records


def extract_subgraph(
    store: TripleStore, query_entities: Iterable[str], hops: int
) -> TripleStore:
    """Induced store of all triples within ``hops`` undirected steps of the query.

    An edge is kept when its nearer endpoint lies at undirected distance
    <= hops - 1 from some query entity, i.e. the edge itself is crossed by
    step ``hops`` at the latest. Unknown query entities raise
    EntityLookupError; interning order of the result follows the original
    edge order, so extraction is deterministic.
    """
    if hops < 1:
        raise ConfigError(f"hops must be >= 1, got {hops}")
    sources = [store.entity_id(label) for label in query_entities]

    max_dist = hops - 1
    dist: dict[int, int] = {}
    frontier: deque[int] = deque()
    for eid in sources:
        if eid not in dist:
            dist[eid] = 0
            frontier.append(eid)
    while frontier:
        eid = frontier.popleft()
        d = dist[eid]
        if d >= max_dist:
            continue
        for idx in store.out_indices(eid):
            other = store.triples[idx].tail
            if other not in dist:
                dist[other] = d + 1
                frontier.append(other)
        for idx in store.in_indices(eid):
            other = store.triples[idx].head
            if other not in dist:
                dist[other] = d + 1
                frontier.append(other)

    result = TripleStore()
    for triple in store.triples:
        if triple.head in dist or triple.tail in dist:
            result.add(*store.triple_labels(triple))
    return result
