"""Pure-Python backend for path-kernel search and score smoothing.

This module mirrors the compiled ``_kernels_c`` extension function for
function; the two must stay bit-for-bit interchangeable. Both operate on a
flattened subgraph: per-edge ``heads``/``tails``/``scores``/``lex_rank``
lists plus CSR adjacency (``out_off``/``out_eid`` over head vertices,
``in_off``/``in_eid`` over tail vertices).

Conventions shared with the compiled twin:

* kernels are edge-id sequences ordered outward from the query entity, so
  position 1 is always the edge nearest a query entity, in both directions;
* direction codes: 0 = from query, 1 = to query, 2 = singleton;
* ``sources`` is a strictly ascending list of vertex ids;
* random walks draw from a splitmix64 stream with mask-rejection sampling,
  so the walk sequence is identical across backends for a given seed.
"""

from __future__ import annotations

ALG_DIJKSTRA = 0
ALG_BFS = 1
ALG_RANDOM_WALK = 2

DIR_FROM_QUERY = 0
DIR_TO_QUERY = 1
DIR_SINGLETON = 2

_MASK64 = (1 << 64) - 1


class _SplitMix:
    """splitmix64 with unbiased sampling of integers below n."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        mask = (1 << (n - 1).bit_length()) - 1
        while True:
            value = self.next_u64() & mask
            if value < n:
                return value


def _shortest_path_tree(n_vertices, endpoint, off, eid, scores, lex_rank, sources):
    """Multi-source min-hop tree; one path per reachable vertex.

    Ties at equal hop count prefer higher cumulative edge score, then the
    lexicographically smaller sequence of edge ranks.
    """
    dist = [-1] * n_vertices
    parent_edge = [-1] * n_vertices
    parent_vertex = [-1] * n_vertices
    cum = [0.0] * n_vertices
    for s in sources:
        dist[s] = 0
    frontier = list(sources)
    depth = 0
    while frontier:
        nxt: list[int] = []
        for u in frontier:
            for k in range(off[u], off[u + 1]):
                e = eid[k]
                v = endpoint[e]
                if dist[v] == -1:
                    dist[v] = depth + 1
                    parent_edge[v] = e
                    parent_vertex[v] = u
                    cum[v] = cum[u] + scores[e]
                    nxt.append(v)
                elif dist[v] == depth + 1:
                    candidate = cum[u] + scores[e]
                    if candidate > cum[v]:
                        replace = True
                    elif candidate == cum[v]:
                        cand_ranks = _tail_ranks(
                            parent_edge, parent_vertex, lex_rank, e, u, depth + 1
                        )
                        best_ranks = _tail_ranks(
                            parent_edge,
                            parent_vertex,
                            lex_rank,
                            parent_edge[v],
                            parent_vertex[v],
                            depth + 1,
                        )
                        replace = cand_ranks < best_ranks
                    else:
                        replace = False
                    if replace:
                        parent_edge[v] = e
                        parent_vertex[v] = u
                        cum[v] = candidate
        frontier = nxt
        depth += 1
    return dist, parent_edge, parent_vertex


def _tail_ranks(parent_edge, parent_vertex, lex_rank, last_edge, last_vertex, length):
    """Front-to-back lex ranks of path(last_vertex) extended by last_edge."""
    buf = [0] * length
    buf[length - 1] = lex_rank[last_edge]
    x = last_vertex
    i = length - 2
    while i >= 0:
        buf[i] = lex_rank[parent_edge[x]]
        x = parent_vertex[x]
        i -= 1
    return buf


def _path_edges(parent_edge, parent_vertex, v, length):
    buf = [0] * length
    x = v
    i = length - 1
    while i >= 0:
        buf[i] = parent_edge[x]
        x = parent_vertex[x]
        i -= 1
    return buf


def _enumerate_simple_paths(n_vertices, endpoint, off, eid, source, max_len, emit):
    """Preorder emission of every simple path of 1..max_len edges from source."""
    visited = bytearray(n_vertices)
    visited[source] = 1
    path: list[int] = []
    stack = [[source, off[source]]]
    while stack:
        frame = stack[-1]
        u, k = frame
        if k >= off[u + 1]:
            stack.pop()
            if path:
                visited[endpoint[path.pop()]] = 0
            continue
        frame[1] = k + 1
        e = eid[k]
        v = endpoint[e]
        if visited[v]:
            continue
        path.append(e)
        emit(path)
        if len(path) < max_len:
            visited[v] = 1
            stack.append([v, off[v]])
        else:
            path.pop()


def _random_walks(tails, off, eid, sources, max_len, walk_count, rng, emit):
    """Uniform out-edge walks; a walk ends at a dead end, max_len, or a revisit."""
    for s in sources:
        for _ in range(walk_count):
            u = s
            visited = {s}
            path: list[int] = []
            while len(path) < max_len:
                lo = off[u]
                degree = off[u + 1] - lo
                if degree == 0:
                    break
                e = eid[lo + rng.below(degree)]
                v = tails[e]
                if v in visited:
                    break
                path.append(e)
                emit(path)
                visited.add(v)
                u = v


def _dispatch(
    n_vertices,
    heads,
    tails,
    out_off,
    out_eid,
    in_off,
    in_eid,
    scores,
    lex_rank,
    sources,
    algorithm,
    max_path_len,
    walk_count,
    seed,
    emit,
):
    """Run one search algorithm, feeding every kernel to ``emit(path, dircode)``."""
    if not sources:
        return
    directions = (
        (DIR_FROM_QUERY, tails, out_off, out_eid),
        (DIR_TO_QUERY, heads, in_off, in_eid),
    )
    if algorithm == ALG_DIJKSTRA:
        for dircode, endpoint, off, eid in directions:
            dist, parent_edge, parent_vertex = _shortest_path_tree(
                n_vertices, endpoint, off, eid, scores, lex_rank, sources
            )
            for v in range(n_vertices):
                if dist[v] >= 1:
                    emit(_path_edges(parent_edge, parent_vertex, v, dist[v]), dircode)
    elif algorithm == ALG_BFS:
        for dircode, endpoint, off, eid in directions:
            for s in sources:
                _enumerate_simple_paths(
                    n_vertices,
                    endpoint,
                    off,
                    eid,
                    s,
                    max_path_len,
                    lambda path, d=dircode: emit(path, d),
                )
    elif algorithm == ALG_RANDOM_WALK:
        rng = _SplitMix(seed)
        _random_walks(
            tails,
            out_off,
            out_eid,
            sources,
            max_path_len,
            walk_count,
            rng,
            lambda path: emit(path, DIR_FROM_QUERY),
        )
    else:
        raise ValueError(f"unknown algorithm code {algorithm}")


def search_kernels(
    n_vertices,
    heads,
    tails,
    out_off,
    out_eid,
    in_off,
    in_eid,
    scores,
    lex_rank,
    sources,
    algorithm,
    max_path_len,
    walk_count,
    seed,
):
    """All path kernels in canonical order, deduplicated, singletons last."""
    ne = len(heads)
    kernels: list[tuple[tuple[int, ...], int]] = []
    seen: set[tuple[int, ...]] = set()

    def add(path, dircode):
        key = tuple(path)
        if key not in seen:
            seen.add(key)
            kernels.append((key, dircode))

    _dispatch(
        n_vertices,
        heads,
        tails,
        out_off,
        out_eid,
        in_off,
        in_eid,
        scores,
        lex_rank,
        sources,
        algorithm,
        max_path_len,
        walk_count,
        seed,
        add,
    )
    covered = bytearray(ne)
    for key, _ in kernels:
        for e in key:
            covered[e] = 1
    for e in range(ne):
        if not covered[e]:
            kernels.append(((e,), DIR_SINGLETON))
    return kernels


def smooth_scores(
    n_vertices,
    heads,
    tails,
    out_off,
    out_eid,
    in_off,
    in_eid,
    scores,
    lex_rank,
    sources,
    algorithm,
    max_path_len,
    walk_count,
    seed,
    pooling,
    s_min,
    divisor,
):
    """Per-edge smoothed score: max over kernels of pooled + positional term."""
    ne = len(heads)
    final = [0.0] * ne
    covered = bytearray(ne)

    def process(path, _dircode):
        length = len(path)
        if pooling == 0:
            total = 0.0
            for e in path:
                total += scores[e]
            pooled = total / length
        else:
            pooled = scores[path[0]]
            for e in path:
                if scores[e] > pooled:
                    pooled = scores[e]
        i = 1
        for e in path:
            value = pooled + s_min / (i * divisor)
            if not covered[e]:
                covered[e] = 1
                final[e] = value
            elif value > final[e]:
                final[e] = value
            i += 1

    _dispatch(
        n_vertices,
        heads,
        tails,
        out_off,
        out_eid,
        in_off,
        in_eid,
        scores,
        lex_rank,
        sources,
        algorithm,
        max_path_len,
        walk_count,
        seed,
        process,
    )
    for e in range(ne):
        if not covered[e]:
            final[e] = scores[e] + s_min / divisor
    return final
