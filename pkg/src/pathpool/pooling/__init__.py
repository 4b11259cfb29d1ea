"""Path pooling: smooth retrieval scores along query-anchored graph paths.

The retrieved sequence is viewed as a scored subgraph; a search algorithm
(dijkstra, bfs, or random walk) extracts path kernels anchored at the query
entities; each kernel's pooled score plus a rank-decaying positional term is
pushed back onto its member triples, taking the max where kernels overlap.
Triples on no path are treated as single-hop kernels, so every input triple
receives a smoothed score.

Two interchangeable backends do the heavy lifting: a compiled Cython core
(``_kernels_c``) and a pure-Python twin (``_kernels_py``). The compiled one
is picked at import when available unless ``PATHPOOL_PURE_PYTHON=1`` is set.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..errors import ConfigError, EmptyInputError
from ..scoring import ScoredTriple, TripleSequence
from . import _kernels_py

try:  # compiled core is optional
    from . import _kernels_c
except ImportError:  # pragma: no cover - depends on build environment
    _kernels_c = None

SCORE_SHIFT_EPS = 1e-6

ALGORITHMS = ("dijkstra", "bfs", "random_walk")
POOLING_STRATEGIES = ("average", "max")
DIRECTIONS = ("from_query", "to_query", "singleton")

_ALGORITHM_CODES = {name: code for code, name in enumerate(ALGORITHMS)}
_POOLING_CODES = {name: code for code, name in enumerate(POOLING_STRATEGIES)}

_FORCE_PY = os.environ.get("PATHPOOL_PURE_PYTHON", "") == "1"
DEFAULT_BACKEND = "c" if (_kernels_c is not None and not _FORCE_PY) else "py"


def available_backends() -> tuple[str, ...]:
    return ("py", "c") if _kernels_c is not None else ("py",)


def backend_module(name: str = "auto"):
    if name == "auto":
        name = DEFAULT_BACKEND
    if name == "py":
        return _kernels_py
    if name == "c":
        if _kernels_c is None:
            raise ConfigError("compiled backend requested but not built")
        return _kernels_c
    raise ConfigError(f"unknown backend: {name!r}")


@dataclass(frozen=True)
class PoolingConfig:
    """Knobs for kernel search and smoothing."""

    search_algorithm: str = "dijkstra"
    pooling: str = "average"
    positional_divisor: float = 10.0
    max_path_len: int = 4
    walk_count: int = 256
    rng_seed: int = 0

    def validate(self) -> None:
        if self.search_algorithm not in _ALGORITHM_CODES:
            raise ConfigError(f"unknown search algorithm: {self.search_algorithm!r}")
        if self.pooling not in _POOLING_CODES:
            raise ConfigError(f"unknown pooling strategy: {self.pooling!r}")
        if not self.positional_divisor > 0:
            raise ConfigError("positional divisor must be > 0")
        if self.max_path_len < 1:
            raise ConfigError("max_path_len must be >= 1")
        if self.walk_count < 1:
            raise ConfigError("walk_count must be >= 1")


@dataclass(frozen=True)
class PathKernel:
    """A directed simple path of triple indices with its pooled score.

    Indices point into the sequence the kernel was searched on; position 1
    is the triple nearest a query entity for both search directions.
    """

    edge_indices: tuple[int, ...]
    direction: str
    pooled_score: float

    def __len__(self) -> int:
        return len(self.edge_indices)


class ScoredSubgraph:
    """Adjacency view over the triples of one retrieved sequence.

    Vertices are the entities appearing in the sequence, interned in
    first-seen order (head before tail, edge by edge). Adjacency is stored
    CSR-style so both backends consume the same flat arrays.
    """

    def __init__(self, sequence: TripleSequence):
        if len(sequence) == 0:
            raise EmptyInputError("cannot build a subgraph from an empty sequence")
        self.sequence = sequence
        self.store = sequence.store
        entity_vertex: dict[int, int] = {}
        vertex_entities: list[int] = []
        heads: list[int] = []
        tails: list[int] = []
        scores: list[float] = []
        for item in sequence.items:
            for entity in (item.triple.head, item.triple.tail):
                if entity not in entity_vertex:
                    entity_vertex[entity] = len(vertex_entities)
                    vertex_entities.append(entity)
            heads.append(entity_vertex[item.triple.head])
            tails.append(entity_vertex[item.triple.tail])
            scores.append(item.score)
        self.entity_vertex = entity_vertex
        self.vertex_entities = vertex_entities
        self.n_vertices = len(vertex_entities)
        self.n_edges = len(heads)
        self.heads = heads
        self.tails = tails
        self.scores = scores
        self.out_off, self.out_eid = _csr(self.n_vertices, heads)
        self.in_off, self.in_eid = _csr(self.n_vertices, tails)
        self._lex_rank: list[int] | None = None

    @property
    def lex_rank(self) -> list[int]:
        """Per-edge rank under (head, relation, tail) label order; lazy."""
        if self._lex_rank is None:
            order = sorted(
                range(self.n_edges),
                key=lambda e: self.store.triple_labels(self.sequence.items[e].triple),
            )
            ranks = [0] * self.n_edges
            for rank, e in enumerate(order):
                ranks[e] = rank
            self._lex_rank = ranks
        return self._lex_rank

    def vertices_for_labels(self, labels: Iterable[str]) -> list[int]:
        """Ascending local vertex ids for the labels present in the subgraph."""
        found: set[int] = set()
        for label in labels:
            if self.store.has_entity(label):
                vertex = self.entity_vertex.get(self.store.entity_id(label))
                if vertex is not None:
                    found.add(vertex)
        return sorted(found)


def _csr(n_vertices: int, anchor: list[int]) -> tuple[list[int], list[int]]:
    buckets: list[list[int]] = [[] for _ in range(n_vertices)]
    for e, v in enumerate(anchor):
        buckets[v].append(e)
    off = [0] * (n_vertices + 1)
    eid: list[int] = []
    for v, bucket in enumerate(buckets):
        off[v + 1] = off[v] + len(bucket)
        eid.extend(bucket)
    return off, eid


def build_scored_subgraph(sequence: TripleSequence) -> ScoredSubgraph:
    """Subgraph with exactly the sequence's triples and their scores."""
    return ScoredSubgraph(sequence)


def pool_path(
    kernel: PathKernel | Sequence[int], scores: Sequence[float], strategy: str
) -> float:
    """Pooled kernel score: arithmetic mean or maximum of member scores."""
    indices = kernel.edge_indices if isinstance(kernel, PathKernel) else tuple(kernel)
    if not indices:
        raise EmptyInputError("cannot pool an empty kernel")
    values = [scores[i] for i in indices]
    if strategy == "average":
        return sum(values) / len(values)
    if strategy == "max":
        return max(values)
    raise ConfigError(f"unknown pooling strategy: {strategy!r}")


def _backend_args(g: ScoredSubgraph, scores: list[float], cfg: PoolingConfig):
    # lex ranks are only consulted by dijkstra tie-breaks; skip the label
    # sort for the other algorithms
    lex = g.lex_rank if cfg.search_algorithm == "dijkstra" else [0] * g.n_edges
    return (
        g.n_vertices,
        g.heads,
        g.tails,
        g.out_off,
        g.out_eid,
        g.in_off,
        g.in_eid,
        scores,
        lex,
    )


def search_path_kernels(
    g: ScoredSubgraph,
    query_entities: Iterable[str],
    cfg: PoolingConfig,
    backend: str = "auto",
) -> list[PathKernel]:
    """Path kernels anchored at the query entities, per cfg.search_algorithm.

    Every triple of the subgraph appears in at least one kernel: triples on
    no searched path are emitted as singletons. Query entities absent from
    the subgraph contribute nothing; with no usable query entity every
    triple becomes a singleton.
    """
    cfg.validate()
    module = backend_module(backend)
    sources = g.vertices_for_labels(query_entities)
    raw = module.search_kernels(
        *_backend_args(g, g.scores, cfg),
        sources,
        _ALGORITHM_CODES[cfg.search_algorithm],
        cfg.max_path_len,
        cfg.walk_count,
        cfg.rng_seed,
    )
    return [
        PathKernel(tuple(edges), DIRECTIONS[code], pool_path(edges, g.scores, cfg.pooling))
        for edges, code in raw
    ]


def _shifted(scores: list[float]) -> list[float]:
    """Shift all scores positive when the minimum is <= 0.

    The positional term divides the sequence minimum by the path position;
    a non-positive minimum would invert its direction, so the whole score
    vector is translated by (eps - min) first. Only the ordering of the
    output is meaningful downstream, which a common shift preserves.
    """
    low = min(scores)
    if low > 0.0:
        return scores
    shift = SCORE_SHIFT_EPS - low
    return [s + shift for s in scores]


def smooth(
    sequence: TripleSequence,
    query_entities: Iterable[str],
    cfg: PoolingConfig,
    backend: str = "auto",
) -> TripleSequence:
    """Smoothed sequence: per-triple max over kernels of pooled + positional score.

    Output is sorted descending by smoothed score, ties by position in the
    input sequence; the triple multiset is preserved.
    """
    cfg.validate()
    if len(sequence) == 0:
        raise EmptyInputError("cannot smooth an empty sequence")
    module = backend_module(backend)
    g = build_scored_subgraph(sequence)
    scores = _shifted(g.scores)
    s_min = min(scores)
    sources = g.vertices_for_labels(query_entities)
    final = module.smooth_scores(
        *_backend_args(g, scores, cfg),
        sources,
        _ALGORITHM_CODES[cfg.search_algorithm],
        cfg.max_path_len,
        cfg.walk_count,
        cfg.rng_seed,
        _POOLING_CODES[cfg.pooling],
        s_min,
        cfg.positional_divisor,
    )
    order = sorted(range(len(final)), key=lambda i: (-final[i], i))
    source_items = sequence.items
    items = [
        ScoredTriple(source_items[i].triple, final[i], source_items[i].rank)
        for i in order
    ]
    provenance = f"smoothed:{cfg.search_algorithm}:{cfg.pooling}"
    return TripleSequence._unchecked(sequence.store, items, provenance)
