"""Compiled core vs pure-Python backend: results must match to the bit."""

from __future__ import annotations

import pytest

from conftest import random_case
from pathpool import pooling
from pathpool.pooling import PoolingConfig, build_scored_subgraph

needs_compiled = pytest.mark.skipif(
    "c" not in pooling.available_backends(),
    reason="compiled core not built",
)

ALGORITHMS = ("dijkstra", "bfs", "random_walk")


@needs_compiled
def test_search_kernels_identical_across_backends():
    for seed in range(150):
        seq, queries = random_case(seed, max_edges=24, positive=False)
        g = build_scored_subgraph(seq)
        for algorithm in ALGORITHMS:
            cfg = PoolingConfig(search_algorithm=algorithm, rng_seed=seed)
            py = pooling.search_path_kernels(g, queries, cfg, backend="py")
            cc = pooling.search_path_kernels(g, queries, cfg, backend="c")
            assert py == cc, (seed, algorithm)


@needs_compiled
def test_smooth_identical_across_backends():
    for seed in range(150):
        seq, queries = random_case(seed, max_edges=24, positive=False)
        for algorithm in ALGORITHMS:
            for strategy in ("average", "max"):
                cfg = PoolingConfig(
                    search_algorithm=algorithm, pooling=strategy, rng_seed=seed
                )
                py = pooling.smooth(seq, queries, cfg, backend="py").labeled_items()
                cc = pooling.smooth(seq, queries, cfg, backend="c").labeled_items()
                assert py == cc, (seed, algorithm, strategy)


@needs_compiled
@pytest.mark.skipif(
    pooling._FORCE_PY, reason="pure-Python backend forced via environment"
)
def test_default_backend_prefers_compiled():
    assert pooling.DEFAULT_BACKEND == "c"


def test_unknown_backend_rejected():
    from pathpool.errors import ConfigError

    with pytest.raises(ConfigError):
        pooling.backend_module("fortran")


@needs_compiled
def test_walk_streams_match_across_seeds():
    # long walk budgets consume thousands of RNG draws; any divergence in
    # the stream or the rejection sampling would show up as different kernels
    seq, queries = random_case(5, max_edges=20)
    if not queries:
        queries = [seq.labels(0)[0]]
    for seed in (0, 1, 7, 123456789, -3, 2**63):
        cfg = PoolingConfig(
            search_algorithm="random_walk", walk_count=2048, rng_seed=seed
        )
        g = build_scored_subgraph(seq)
        py = pooling.search_path_kernels(g, queries, cfg, backend="py")
        cc = pooling.search_path_kernels(g, queries, cfg, backend="c")
        assert py == cc, seed
