"""Query-relevance scoring of candidate triples.

Backends are interchangeable: ``uniform`` (constant score), ``cosine``
(embedding-table similarity), and ``precomputed`` (replay of scores produced
by an external retriever). All of them feed the same top-k selection with a
deterministic label tie-break.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, ParseError, ScoringError
from .kg_store import QueryRecord, Triple, TripleStore

logger = logging.getLogger(__name__)


class ScoredTriple(NamedTuple):
    """A triple plus its relevance score and original retrieval rank."""

    triple: Triple
    score: float
    rank: int


class TripleSequence:
    """Ordered scored triples together with the store resolving their labels."""

    def __init__(self, store: TripleStore, items: list[ScoredTriple], provenance: str):
        seen: set[Triple] = set()
        for item in items:
            if not math.isfinite(item.score):
                raise ConfigError(f"non-finite score for triple {item.triple}")
            if item.triple in seen:
                raise ConfigError(
                    f"duplicate triple in sequence: {store.triple_labels(item.triple)}"
                )
            seen.add(item.triple)
        self.store = store
        self.items = items
        self.provenance = provenance

    @classmethod
    def _unchecked(
        cls, store: TripleStore, items: list[ScoredTriple], provenance: str
    ) -> "TripleSequence":
        """Skip validation for permutations/subsets of an already valid sequence."""
        sequence = cls.__new__(cls)
        sequence.store = store
        sequence.items = items
        sequence.provenance = provenance
        return sequence

    @classmethod
    def from_scores(
        cls,
        store: TripleStore,
        pairs: list[tuple[Triple, float]],
        provenance: str,
    ) -> "TripleSequence":
        items = [
            ScoredTriple(triple, float(score), rank)
            for rank, (triple, score) in enumerate(pairs)
        ]
        return cls(store, items, provenance)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def scores(self) -> list[float]:
        return [item.score for item in self.items]

    def labels(self, index: int) -> tuple[str, str, str]:
        return self.store.triple_labels(self.items[index].triple)

    def labeled_items(self) -> list[tuple[str, str, str, float]]:
        return [
            (*self.store.triple_labels(item.triple), item.score) for item in self.items
        ]

    def trimmed(self, k: int, provenance: str | None = None) -> "TripleSequence":
        return TripleSequence._unchecked(
            self.store, self.items[:k], provenance or self.provenance
        )


def relation_sentence(relation: str) -> str:
    """Relation label rewritten for text encoders (dots/underscores to spaces)."""
    return relation.replace(".", " ").replace("_", " ")


def triple_sentence(head: str, relation: str, tail: str) -> str:
    return f"{head} {relation_sentence(relation)} {tail}"


class UniformScorer:
    """Constant score for every candidate; ordering falls to the tie-break."""

    name = "uniform"

    def score_candidates(
        self, query: QueryRecord, store: TripleStore
    ) -> list[tuple[Triple, float]]:
        return [(triple, 1.0) for triple in store.triples]


class CosineScorer:
    """Cosine similarity between the query text and each triple's sentence.

    The embedding table maps exact texts (queries and triple sentences) to
    vectors; a missing entry is an error naming the text.
    """

    name = "cosine"

    def __init__(self, table: dict[str, np.ndarray]):
        self._table = table

    @classmethod
    def load(cls, path: str | Path) -> "CosineScorer":
        table: dict[str, np.ndarray] = {}
        dim: int | None = None
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                label, tab, rest = line.partition("\t")
                if not tab or not label:
                    raise ParseError("expected 'label<TAB>components'", line=lineno)
                try:
                    vector = np.asarray(
                        [float(x) for x in rest.split()], dtype=np.float64
                    )
                except ValueError:
                    raise ParseError("non-numeric embedding component", line=lineno)
                if vector.size == 0:
                    raise ParseError("empty embedding vector", line=lineno)
                if dim is None:
                    dim = vector.size
                elif vector.size != dim:
                    raise ParseError(
                        f"dimension mismatch: {vector.size} != {dim}", line=lineno
                    )
                table[label] = vector
        return cls(table)

    def _lookup(self, text: str) -> np.ndarray:
        vector = self._table.get(text)
        if vector is None:
            raise ScoringError(f"no embedding for {text!r}")
        return vector

    def score_candidates(
        self, query: QueryRecord, store: TripleStore
    ) -> list[tuple[Triple, float]]:
        qvec = self._lookup(query.question)
        qnorm = float(np.linalg.norm(qvec))
        out: list[tuple[Triple, float]] = []
        for triple in store.triples:
            sentence = triple_sentence(*store.triple_labels(triple))
            tvec = self._lookup(sentence)
            denom = qnorm * float(np.linalg.norm(tvec))
            score = float(np.dot(qvec, tvec) / denom) if denom > 0.0 else 0.0
            # rounding can push |score| an ulp past 1
            out.append((triple, min(1.0, max(-1.0, score))))
        return out


class PrecomputedScorer:
    """Replays per-(query, triple) scores written by an external retriever."""

    name = "precomputed"

    def __init__(self, table: dict[tuple[str, str, str, str], float]):
        self._table = table

    @classmethod
    def load(cls, path: str | Path) -> "PrecomputedScorer":
        table: dict[tuple[str, str, str, str], float] = {}
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.rstrip("\r\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 5:
                    raise ParseError(
                        f"expected 5 tab-separated fields, got {len(parts)}",
                        line=lineno,
                    )
                qid, head, relation, tail, score_text = parts
                try:
                    score = float(score_text)
                except ValueError:
                    raise ParseError("non-numeric score", line=lineno)
                table[(qid, head, relation, tail)] = score
        return cls(table)

    def score_candidates(
        self, query: QueryRecord, store: TripleStore
    ) -> list[tuple[Triple, float]]:
        out: list[tuple[Triple, float]] = []
        missing = 0
        for triple in store.triples:
            head, relation, tail = store.triple_labels(triple)
            score = self._table.get((query.id, head, relation, tail))
            if score is None:
                missing += 1
                continue
            out.append((triple, score))
        if missing:
            logger.info(
                "precomputed scorer: %d/%d candidates had no score for query %s",
                missing,
                store.n_triples,
                query.id,
            )
        return out


def build_scorer(spec: str):
    """Construct a scorer from ``uniform``, ``cosine:FILE`` or ``precomputed:FILE``."""
    kind, _, arg = spec.partition(":")
    if kind == "uniform":
        return UniformScorer()
    if kind == "cosine":
        if not arg:
            raise ConfigError("cosine scorer needs an embedding table: cosine:FILE")
        return CosineScorer.load(arg)
    if kind == "precomputed":
        if not arg:
            raise ConfigError("precomputed scorer needs a score file: precomputed:FILE")
        return PrecomputedScorer.load(arg)
    raise ConfigError(f"unknown scorer: {spec!r}")


def score_triples(
    query: QueryRecord, candidates: TripleStore, scorer, k: int
) -> TripleSequence:
    """Top-k candidates by score, descending; label order breaks ties.

    Returns all candidates when fewer than k exist. The output rank of each
    triple is its position in this sequence.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    scored = scorer.score_candidates(query, candidates)
    scored.sort(key=lambda pair: (-pair[1], candidates.triple_labels(pair[0])))
    return TripleSequence.from_scores(candidates, scored[:k], scorer.name)
