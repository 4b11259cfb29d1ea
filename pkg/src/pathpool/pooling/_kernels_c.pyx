# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=False
"""Compiled backend for path-kernel search and score smoothing.

Function-for-function twin of ``_kernels_py``; the two must stay bit-for-bit
interchangeable. See that module for the shared conventions (kernel order,
direction codes, RNG stream). Floating-point expressions here deliberately
match the Python evaluation order so results are identical to the last bit.
"""

from libc.stdint cimport uint64_t
from libc.stdlib cimport free, malloc

cdef int ALG_DIJKSTRA = 0
cdef int ALG_BFS = 1
cdef int ALG_RANDOM_WALK = 2

cdef int DIR_FROM_QUERY = 0
cdef int DIR_TO_QUERY = 1
cdef int DIR_SINGLETON = 2


# -- RNG: splitmix64 with mask-rejection sampling ----------------------

cdef struct Rng:
    uint64_t state


cdef inline uint64_t _next_u64(Rng* rng) noexcept:
    rng.state = rng.state + <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = rng.state
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline int _below(Rng* rng, int n) noexcept:
    cdef uint64_t m = <uint64_t>(n - 1)
    cdef int bits = 0
    while m:
        m >>= 1
        bits += 1
    cdef uint64_t mask = ((<uint64_t>1) << bits) - 1
    cdef uint64_t value
    while True:
        value = _next_u64(rng) & mask
        if value < <uint64_t>n:
            return <int>value


# -- buffer helpers -----------------------------------------------------

cdef int* _int_buf(Py_ssize_t n) except NULL:
    cdef int* buf = <int*>malloc((n if n > 0 else 1) * sizeof(int))
    if buf == NULL:
        raise MemoryError()
    return buf


cdef double* _dbl_buf(Py_ssize_t n) except NULL:
    cdef double* buf = <double*>malloc((n if n > 0 else 1) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    return buf


cdef int* _int_from_list(list values) except NULL:
    cdef Py_ssize_t n = len(values)
    cdef int* buf = _int_buf(n)
    cdef Py_ssize_t i
    for i in range(n):
        buf[i] = <int>values[i]
    return buf


cdef double* _dbl_from_list(list values) except NULL:
    cdef Py_ssize_t n = len(values)
    cdef double* buf = _dbl_buf(n)
    cdef Py_ssize_t i
    for i in range(n):
        buf[i] = <double>values[i]
    return buf


cdef class _Graph:
    """Owned C copies of the flat subgraph arrays."""

    cdef int nv
    cdef int ne
    cdef int* heads
    cdef int* tails
    cdef int* out_off
    cdef int* out_eid
    cdef int* in_off
    cdef int* in_eid
    cdef double* scores
    cdef int* lex

    def __cinit__(
        self,
        int n_vertices,
        list heads,
        list tails,
        list out_off,
        list out_eid,
        list in_off,
        list in_eid,
        list scores,
        list lex_rank,
    ):
        self.nv = n_vertices
        self.ne = <int>len(heads)
        self.heads = _int_from_list(heads)
        self.tails = _int_from_list(tails)
        self.out_off = _int_from_list(out_off)
        self.out_eid = _int_from_list(out_eid)
        self.in_off = _int_from_list(in_off)
        self.in_eid = _int_from_list(in_eid)
        self.scores = _dbl_from_list(scores)
        self.lex = _int_from_list(lex_rank)

    def __dealloc__(self):
        free(self.heads)
        free(self.tails)
        free(self.out_off)
        free(self.out_eid)
        free(self.in_off)
        free(self.in_eid)
        free(self.scores)
        free(self.lex)


# -- kernel sinks --------------------------------------------------------

cdef class _Sink:
    cdef void add(self, int* path, int length, int dircode):
        pass


cdef class _CollectSink(_Sink):
    cdef list kernels
    cdef set seen

    def __cinit__(self):
        self.kernels = []
        self.seen = set()

    cdef void add(self, int* path, int length, int dircode):
        cdef int i
        key = tuple([path[i] for i in range(length)])
        if key not in self.seen:
            self.seen.add(key)
            self.kernels.append((key, dircode))


cdef class _SmoothSink(_Sink):
    cdef double* scores
    cdef double* final
    cdef char* covered
    cdef int pooling
    cdef double s_min
    cdef double divisor

    cdef void add(self, int* path, int length, int dircode):
        cdef double total, pooled, value
        cdef int i, e
        if self.pooling == 0:
            total = 0.0
            for i in range(length):
                total += self.scores[path[i]]
            pooled = total / length
        else:
            pooled = self.scores[path[0]]
            for i in range(length):
                if self.scores[path[i]] > pooled:
                    pooled = self.scores[path[i]]
        for i in range(length):
            e = path[i]
            value = pooled + self.s_min / ((i + 1) * self.divisor)
            if self.covered[e] == 0:
                self.covered[e] = 1
                self.final[e] = value
            elif value > self.final[e]:
                self.final[e] = value


# -- shortest-path tree (multi-source, min hops, score/lex tie-break) ----

cdef void _fill_tail_ranks(
    int* parent_edge,
    int* parent_vertex,
    int* lex,
    int last_edge,
    int last_vertex,
    int length,
    int* buf,
) noexcept:
    buf[length - 1] = lex[last_edge]
    cdef int x = last_vertex
    cdef int i = length - 2
    while i >= 0:
        buf[i] = lex[parent_edge[x]]
        x = parent_vertex[x]
        i -= 1


cdef bint _ranks_less(int* a, int* b, int length) noexcept:
    cdef int i
    for i in range(length):
        if a[i] != b[i]:
            return a[i] < b[i]
    return False


cdef void _shortest_path_tree(
    int nv,
    int* endpoint,
    int* off,
    int* eid,
    double* scores,
    int* lex,
    int* sources,
    int nsrc,
    int* dist,
    int* parent_edge,
    int* parent_vertex,
    double* cum,
    int* frontier,
    int* nxt,
    int* ranks_a,
    int* ranks_b,
) noexcept:
    cdef int i, u, v, e, k, depth, nf, nn
    cdef double candidate
    cdef bint replace
    for i in range(nv):
        dist[i] = -1
        parent_edge[i] = -1
        parent_vertex[i] = -1
        cum[i] = 0.0
    nf = 0
    for i in range(nsrc):
        dist[sources[i]] = 0
        frontier[nf] = sources[i]
        nf += 1
    depth = 0
    while nf > 0:
        nn = 0
        for i in range(nf):
            u = frontier[i]
            for k in range(off[u], off[u + 1]):
                e = eid[k]
                v = endpoint[e]
                if dist[v] == -1:
                    dist[v] = depth + 1
                    parent_edge[v] = e
                    parent_vertex[v] = u
                    cum[v] = cum[u] + scores[e]
                    nxt[nn] = v
                    nn += 1
                elif dist[v] == depth + 1:
                    candidate = cum[u] + scores[e]
                    if candidate > cum[v]:
                        replace = True
                    elif candidate == cum[v]:
                        _fill_tail_ranks(
                            parent_edge, parent_vertex, lex, e, u, depth + 1, ranks_a
                        )
                        _fill_tail_ranks(
                            parent_edge,
                            parent_vertex,
                            lex,
                            parent_edge[v],
                            parent_vertex[v],
                            depth + 1,
                            ranks_b,
                        )
                        replace = _ranks_less(ranks_a, ranks_b, depth + 1)
                    else:
                        replace = False
                    if replace:
                        parent_edge[v] = e
                        parent_vertex[v] = u
                        cum[v] = candidate
        for i in range(nn):
            frontier[i] = nxt[i]
        nf = nn
        depth += 1


cdef void _emit_tree_paths(
    int nv,
    int* dist,
    int* parent_edge,
    int* parent_vertex,
    _Sink sink,
    int dircode,
    int* path,
) :
    cdef int v, x, i, length
    for v in range(nv):
        length = dist[v]
        if length >= 1:
            x = v
            i = length - 1
            while i >= 0:
                path[i] = parent_edge[x]
                x = parent_vertex[x]
                i -= 1
            sink.add(path, length, dircode)


# -- exhaustive simple paths ----------------------------------------------

cdef void _enumerate_simple_paths(
    int* endpoint,
    int* off,
    int* eid,
    int source,
    int max_len,
    _Sink sink,
    int dircode,
    char* visited,
    int* path,
    int* stack_v,
    int* stack_k,
) :
    cdef int top = 0
    cdef int plen = 0
    cdef int u, k, e, v
    visited[source] = 1
    stack_v[0] = source
    stack_k[0] = off[source]
    while top >= 0:
        u = stack_v[top]
        k = stack_k[top]
        if k >= off[u + 1]:
            top -= 1
            if plen > 0:
                plen -= 1
                visited[endpoint[path[plen]]] = 0
            continue
        stack_k[top] = k + 1
        e = eid[k]
        v = endpoint[e]
        if visited[v]:
            continue
        path[plen] = e
        plen += 1
        sink.add(path, plen, dircode)
        if plen < max_len:
            visited[v] = 1
            top += 1
            stack_v[top] = v
            stack_k[top] = off[v]
        else:
            plen -= 1
    visited[source] = 0


# -- random walks ----------------------------------------------------------

cdef void _random_walks(
    int* tails,
    int* off,
    int* eid,
    int* sources,
    int nsrc,
    int max_len,
    int walk_count,
    Rng* rng,
    _Sink sink,
    int* mark,
    int* path,
) :
    cdef int stamp = 0
    cdef int si, w, u, v, e, plen, lo, degree
    for si in range(nsrc):
        for w in range(walk_count):
            stamp += 1
            u = sources[si]
            mark[u] = stamp
            plen = 0
            while plen < max_len:
                lo = off[u]
                degree = off[u + 1] - lo
                if degree == 0:
                    break
                e = eid[lo + _below(rng, degree)]
                v = tails[e]
                if mark[v] == stamp:
                    break
                path[plen] = e
                plen += 1
                sink.add(path, plen, DIR_FROM_QUERY)
                mark[v] = stamp
                u = v


# -- dispatch ----------------------------------------------------------------

cdef void _dispatch(_Graph g, list sources, int algorithm, int max_path_len,
                    int walk_count, object seed, _Sink sink) :
    cdef int nsrc = <int>len(sources)
    if nsrc == 0:
        return
    cdef int scratch = g.nv if g.nv > max_path_len + 2 else max_path_len + 2
    cdef int* src = NULL
    cdef int* path = NULL
    cdef int* dist = NULL
    cdef int* parent_edge = NULL
    cdef int* parent_vertex = NULL
    cdef double* cum = NULL
    cdef int* frontier = NULL
    cdef int* nxt = NULL
    cdef int* ranks_a = NULL
    cdef int* ranks_b = NULL
    cdef int* stack_v = NULL
    cdef int* stack_k = NULL
    cdef int* mark = NULL
    cdef char* visited = NULL
    cdef Rng rng
    cdef int i, d
    try:
        src = _int_from_list(sources)
        path = _int_buf(scratch)
        if algorithm == ALG_DIJKSTRA:
            dist = _int_buf(g.nv)
            parent_edge = _int_buf(g.nv)
            parent_vertex = _int_buf(g.nv)
            cum = _dbl_buf(g.nv)
            frontier = _int_buf(g.nv)
            nxt = _int_buf(g.nv)
            ranks_a = _int_buf(g.nv + 1)
            ranks_b = _int_buf(g.nv + 1)
            for d in range(2):
                _shortest_path_tree(
                    g.nv,
                    g.tails if d == 0 else g.heads,
                    g.out_off if d == 0 else g.in_off,
                    g.out_eid if d == 0 else g.in_eid,
                    g.scores,
                    g.lex,
                    src,
                    nsrc,
                    dist,
                    parent_edge,
                    parent_vertex,
                    cum,
                    frontier,
                    nxt,
                    ranks_a,
                    ranks_b,
                )
                _emit_tree_paths(
                    g.nv, dist, parent_edge, parent_vertex, sink,
                    DIR_FROM_QUERY if d == 0 else DIR_TO_QUERY, path,
                )
        elif algorithm == ALG_BFS:
            visited = <char*>malloc(g.nv if g.nv > 0 else 1)
            if visited == NULL:
                raise MemoryError()
            for i in range(g.nv):
                visited[i] = 0
            stack_v = _int_buf(max_path_len + 2)
            stack_k = _int_buf(max_path_len + 2)
            for d in range(2):
                for i in range(nsrc):
                    _enumerate_simple_paths(
                        g.tails if d == 0 else g.heads,
                        g.out_off if d == 0 else g.in_off,
                        g.out_eid if d == 0 else g.in_eid,
                        src[i],
                        max_path_len,
                        sink,
                        DIR_FROM_QUERY if d == 0 else DIR_TO_QUERY,
                        visited,
                        path,
                        stack_v,
                        stack_k,
                    )
        elif algorithm == ALG_RANDOM_WALK:
            rng.state = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
            mark = _int_buf(g.nv)
            for i in range(g.nv):
                mark[i] = 0
            _random_walks(
                g.tails, g.out_off, g.out_eid, src, nsrc, max_path_len,
                walk_count, &rng, sink, mark, path,
            )
        else:
            raise ValueError(f"unknown algorithm code {algorithm}")
    finally:
        free(src)
        free(path)
        free(dist)
        free(parent_edge)
        free(parent_vertex)
        free(cum)
        free(frontier)
        free(nxt)
        free(ranks_a)
        free(ranks_b)
        free(stack_v)
        free(stack_k)
        free(mark)
        free(visited)


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
    cdef _Graph g = _Graph(
        n_vertices, heads, tails, out_off, out_eid, in_off, in_eid, scores, lex_rank
    )
    cdef _CollectSink sink = _CollectSink()
    _dispatch(g, list(sources), algorithm, max_path_len, walk_count, seed, sink)
    cdef char* covered = <char*>malloc(g.ne if g.ne > 0 else 1)
    if covered == NULL:
        raise MemoryError()
    cdef int e
    try:
        for e in range(g.ne):
            covered[e] = 0
        for key, _ in sink.kernels:
            for e in key:
                covered[e] = 1
        for e in range(g.ne):
            if covered[e] == 0:
                sink.kernels.append(((e,), DIR_SINGLETON))
    finally:
        free(covered)
    return sink.kernels


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
    cdef _Graph g = _Graph(
        n_vertices, heads, tails, out_off, out_eid, in_off, in_eid, scores, lex_rank
    )
    cdef _SmoothSink sink = _SmoothSink()
    sink.scores = g.scores
    sink.pooling = <int>pooling
    sink.s_min = <double>s_min
    sink.divisor = <double>divisor
    sink.final = _dbl_buf(g.ne)
    sink.covered = <char*>malloc(g.ne if g.ne > 0 else 1)
    if sink.covered == NULL:
        free(sink.final)
        raise MemoryError()
    cdef int e
    cdef list out
    try:
        for e in range(g.ne):
            sink.covered[e] = 0
            sink.final[e] = 0.0
        _dispatch(g, list(sources), algorithm, max_path_len, walk_count, seed, sink)
        for e in range(g.ne):
            if sink.covered[e] == 0:
                sink.final[e] = g.scores[e] + sink.s_min / sink.divisor
        out = [sink.final[e] for e in range(g.ne)]
    finally:
        free(sink.final)
        free(sink.covered)
    return out
