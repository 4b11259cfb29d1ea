"""Command-line pipeline: each stage is a subcommand, end-to-end is ``run``.

Stages exchange a line-per-query JSONL artifact carrying the query fields and
the current triple sequence, so intermediate results are inspectable files:

    {"id": ..., "question": ..., "query_entities": [...], "answers": [...],
     "provenance": ..., "triples": [[head, relation, tail, score], ...]}
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import bench as bench_mod
from . import generation, pooling, selection
from .errors import ConfigError, ParseError, PathPoolError
from .kg_store import (
    QueryRecord,
    TripleStore,
    extract_subgraph,
    load_queries,
    load_triples,
)
from .scoring import TripleSequence, build_scorer, score_triples

logger = logging.getLogger(__name__)

_ALGO_FLAGS = {"dijkstra": "dijkstra", "bfs": "bfs", "random-walk": "random_walk"}
_POOLING_FLAGS = {"avg": "average", "max": "max"}
_ORDER_FLAGS = {"recency": "recency", "lost-in-middle": "lost_in_middle"}


# -- artifact helpers ----------------------------------------------------


def _write_text_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_jsonl_atomic(path: Path, rows: list[dict]) -> None:
    _write_text_atomic(
        path, "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows)
    )


def _read_jsonl(path: Path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def _artifact_row(record: QueryRecord, sequence: TripleSequence) -> dict:
    return {
        "id": record.id,
        "question": record.question,
        "query_entities": list(record.query_entities),
        "answers": list(record.gold_answers),
        "provenance": sequence.provenance,
        "triples": [
            [*sequence.store.triple_labels(item.triple), item.score]
            for item in sequence.items
        ],
    }


def _artifact_sequence(row: dict) -> tuple[QueryRecord, TripleSequence]:
    record = QueryRecord(
        id=str(row.get("id", "")),
        question=str(row.get("question", "")),
        query_entities=tuple(row.get("query_entities", [])),
        gold_answers=tuple(row.get("answers", [])),
    )
    store = TripleStore()
    pairs = []
    for entry in row.get("triples", []):
        try:
            head, relation, tail, score = entry
            score = float(score)
        except (TypeError, ValueError):
            raise ParseError(f"malformed triple entry in artifact: {entry!r}")
        store.add(str(head), str(relation), str(tail))
        pairs.append((store.triples[-1], score))
    sequence = TripleSequence.from_scores(
        store, pairs, str(row.get("provenance", "artifact"))
    )
    return record, sequence


# -- config assembly -------------------------------------------------------


def _pooling_config(args) -> pooling.PoolingConfig:
    cfg = pooling.PoolingConfig(
        search_algorithm=_ALGO_FLAGS[args.algo],
        pooling=_POOLING_FLAGS[args.pooling],
        positional_divisor=args.a,
        max_path_len=args.max_path_len,
        walk_count=args.walk_count,
        rng_seed=args.seed,
    )
    cfg.validate()
    return cfg


def _selection_config(args) -> selection.SelectionConfig:
    cfg = selection.SelectionConfig(
        mode=args.mode,
        order=_ORDER_FLAGS[args.order],
        coarse_k=args.coarse_k,
        fine_k=args.fine_k,
    )
    cfg.validate()
    return cfg


@dataclass
class PipelineConfig:
    kg_path: str
    queries_path: str
    scorer_spec: str
    hops: int
    pooling_cfg: pooling.PoolingConfig
    selection_cfg: selection.SelectionConfig
    generation_cfg: generation.GenerationConfig | None
    out_dir: str
    no_llm: bool = False
    baseline: bool = False
    workers: int = 4
    backend: str = "auto"


def _final_sequence(
    cfg: PipelineConfig, record: QueryRecord, retrieved: TripleSequence
) -> TripleSequence:
    sel = cfg.selection_cfg
    if cfg.baseline:
        # unenhanced path: the retriever's descending order, budget-matched
        budget = sel.fine_k if sel.mode == "reselect" else sel.coarse_k
        return selection.top_k(retrieved, budget)
    smoothed = pooling.smooth(
        retrieved, record.query_entities, cfg.pooling_cfg, backend=cfg.backend
    )
    if sel.mode == "rerank":
        return selection.rerank(smoothed, sel.order)
    return selection.reselect(smoothed, sel.fine_k, sel.order)


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Retrieve, smooth, select, prompt, and (unless dry) generate + evaluate.

    Per-query failures are recorded in the results and the run continues;
    only configuration and IO problems abort.
    """
    store = load_triples(cfg.kg_path)
    queries = load_queries(cfg.queries_path)
    scorer = build_scorer(cfg.scorer_spec)
    if cfg.generation_cfg is None and not cfg.no_llm:
        raise ConfigError("an endpoint is required unless --no-llm is given")
    out_dir = Path(cfg.out_dir)
    prompts_dir = out_dir / "prompts"
    prompts_dir.mkdir(parents=True, exist_ok=True)
    completions_dir = out_dir / "completions"
    if not cfg.no_llm:
        completions_dir.mkdir(parents=True, exist_ok=True)

    def process(record: QueryRecord) -> dict:
        try:
            if not record.query_entities:
                raise ConfigError("query has no query entities")
            subgraph = extract_subgraph(store, record.query_entities, cfg.hops)
            retrieved = score_triples(
                record, subgraph, scorer, cfg.selection_cfg.coarse_k
            )
            if len(retrieved) == 0:
                final = retrieved
            else:
                final = _final_sequence(cfg, record, retrieved)
            bundle = generation.assemble_prompt(record, final)
            _write_text_atomic(
                prompts_dir / f"{record.id}.json",
                json.dumps(bundle.messages(), ensure_ascii=False, indent=2) + "\n",
            )
            row = {"id": record.id, "prompt_sha256": bundle.sha256()}
            if cfg.no_llm:
                row["status"] = "dry_run"
                return row
            completion = generation.call_llm(bundle, cfg.generation_cfg)
            _write_text_atomic(completions_dir / f"{record.id}.txt", completion)
            predictions = generation.parse_answers(completion)
            result = generation.evaluate(predictions, record.gold_answers)
            row.update(
                status="ok",
                predictions=predictions,
                hit=result.hit,
                hit_any=result.hit_any,
                precision=result.precision,
                recall=result.recall,
                f1=result.f1,
            )
            return row
        except PathPoolError as exc:
            logger.warning("query %s failed: %s", record.id, exc)
            return {"id": record.id, "status": "error", "error": str(exc)}

    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        rows = list(pool.map(process, queries))

    _write_jsonl_atomic(out_dir / "results.jsonl", rows)
    evaluated = [
        generation.EvalResult(
            hit=row["hit"],
            hit_any=row["hit_any"],
            precision=row["precision"],
            recall=row["recall"],
            f1=row["f1"],
        )
        for row in rows
        if row.get("status") == "ok"
    ]
    metrics = generation.aggregate(evaluated)
    metrics["n_queries"] = len(queries)
    metrics["n_errors"] = sum(1 for row in rows if row.get("status") == "error")
    metrics["dry_run"] = cfg.no_llm
    _write_text_atomic(
        out_dir / "metrics.json", json.dumps(metrics, indent=2, sort_keys=True) + "\n"
    )
    return metrics


# -- subcommands -----------------------------------------------------------


def cmd_load_check(args) -> int:
    store = load_triples(args.kg)
    print(
        f"kg: {store.n_triples} triples, {store.n_entities} entities, "
        f"{store.n_relations} relations"
    )
    if args.queries:
        queries = load_queries(args.queries)
        unresolved = 0
        for record in queries:
            missing = [e for e in record.query_entities if not store.has_entity(e)]
            if missing:
                unresolved += 1
                print(f"query {record.id}: unknown entities {missing}")
        print(f"queries: {len(queries)} loaded, {unresolved} with unknown entities")
    return 0


def cmd_retrieve(args) -> int:
    store = load_triples(args.kg)
    queries = load_queries(args.queries)
    scorer = build_scorer(args.scorer)
    rows = []
    for record in queries:
        try:
            if not record.query_entities:
                raise ConfigError("query has no query entities")
            subgraph = extract_subgraph(store, record.query_entities, args.hops)
            sequence = score_triples(record, subgraph, scorer, args.coarse_k)
            rows.append(_artifact_row(record, sequence))
        except PathPoolError as exc:
            rows.append({"id": record.id, "error": str(exc)})
    _write_jsonl_atomic(Path(args.out), rows)
    print(f"retrieve: wrote {len(rows)} records to {args.out}")
    return 0


def _transform_artifacts(in_path: str, out_path: str, transform) -> int:
    rows_out = []
    for row in _read_jsonl(Path(in_path)):
        if "error" in row:
            rows_out.append(row)
            continue
        try:
            record, sequence = _artifact_sequence(row)
            rows_out.append(_artifact_row(record, transform(record, sequence)))
        except PathPoolError as exc:
            rows_out.append({"id": row.get("id"), "error": str(exc)})
    _write_jsonl_atomic(Path(out_path), rows_out)
    return len(rows_out)


def cmd_pool(args) -> int:
    cfg = _pooling_config(args)

    def transform(record, sequence):
        return pooling.smooth(
            sequence, record.query_entities, cfg, backend=args.backend
        )

    n = _transform_artifacts(args.infile, args.out, transform)
    print(f"pool: wrote {n} records to {args.out}")
    return 0


def cmd_select(args) -> int:
    cfg = _selection_config(args)

    def transform(record, sequence):
        if cfg.mode == "rerank":
            return selection.rerank(sequence, cfg.order)
        return selection.reselect(sequence, cfg.fine_k, cfg.order)

    n = _transform_artifacts(args.infile, args.out, transform)
    print(f"select: wrote {n} records to {args.out}")
    return 0


def cmd_prompt(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for row in _read_jsonl(Path(args.infile)):
        if "error" in row:
            manifest.append(row)
            continue
        record, sequence = _artifact_sequence(row)
        bundle = generation.assemble_prompt(record, sequence)
        _write_text_atomic(
            out_dir / f"{record.id}.json",
            json.dumps(bundle.messages(), ensure_ascii=False, indent=2) + "\n",
        )
        manifest.append({"id": record.id, "prompt_sha256": bundle.sha256()})
    _write_jsonl_atomic(out_dir / "manifest.jsonl", manifest)
    print(f"prompt: wrote {len(manifest)} prompts to {args.out}")
    return 0


def cmd_run(args) -> int:
    gen_cfg = None
    if args.endpoint:
        gen_cfg = generation.GenerationConfig(
            endpoint=args.endpoint,
            model=args.model,
            temperature=args.temperature,
            max_tokens=args.max_tokens,
            timeout=args.timeout,
            retries=args.retries,
        )
    cfg = PipelineConfig(
        kg_path=args.kg,
        queries_path=args.queries,
        scorer_spec=args.scorer,
        hops=args.hops,
        pooling_cfg=_pooling_config(args),
        selection_cfg=_selection_config(args),
        generation_cfg=gen_cfg,
        out_dir=args.out,
        no_llm=args.no_llm,
        baseline=args.baseline,
        workers=args.workers,
        backend=args.backend,
    )
    metrics = run_pipeline(cfg)
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0


def cmd_bench(args) -> int:
    if args.kg:
        store = load_triples(args.kg)
    else:
        store = bench_mod.synthesize_store(seed=args.seed)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    algorithms = [_ALGO_FLAGS[a] for a in args.algos.split(",") if a]
    count = args.queries_per_cell + bench_mod.WARMUP_RUNS
    workloads = bench_mod.sample_workloads(store, count, max(sizes), seed=args.seed)
    if args.backend == "both":
        backends = list(pooling.available_backends())
    elif args.backend == "auto":
        backends = [pooling.DEFAULT_BACKEND]
    else:
        backends = [args.backend]
    base = pooling.PoolingConfig(
        pooling=_POOLING_FLAGS[args.pooling],
        positional_divisor=args.a,
        max_path_len=args.max_path_len,
        walk_count=args.walk_count,
        rng_seed=args.seed,
    )
    report = bench_mod.measure_overhead(
        workloads, algorithms, sizes, backends=backends, base_cfg=base
    )
    print(report.render_text())
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_text_atomic(out_dir / "bench.txt", report.render_text() + "\n")
        _write_text_atomic(out_dir / "bench.csv", "\n".join(report.csv_lines()) + "\n")
        print(f"bench: wrote report to {args.out}")
    return 0


def cmd_eval(args) -> int:
    queries = {record.id: record for record in load_queries(args.queries)}
    rows = []
    results = []
    for row in _read_jsonl(Path(args.completions)):
        qid = str(row.get("id"))
        record = queries.get(qid)
        if record is None:
            rows.append({"id": qid, "error": "unknown query id"})
            continue
        predictions = generation.parse_answers(str(row.get("completion", "")))
        try:
            result = generation.evaluate(predictions, record.gold_answers)
        except PathPoolError as exc:
            rows.append({"id": qid, "error": str(exc)})
            continue
        results.append(result)
        rows.append(
            {
                "id": qid,
                "predictions": predictions,
                "hit": result.hit,
                "hit_any": result.hit_any,
                "precision": result.precision,
                "recall": result.recall,
                "f1": result.f1,
            }
        )
    metrics = generation.aggregate(results)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_jsonl_atomic(out_dir / "eval.jsonl", rows)
        _write_text_atomic(
            out_dir / "metrics.json",
            json.dumps(metrics, indent=2, sort_keys=True) + "\n",
        )
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0


# -- parser ------------------------------------------------------------------


def _add_pooling_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--algo", choices=sorted(_ALGO_FLAGS), default="dijkstra")
    parser.add_argument("--pooling", choices=sorted(_POOLING_FLAGS), default="avg")
    parser.add_argument(
        "--a",
        type=float,
        default=10.0,
        help="positional score divisor (term is min_score / (position * a))",
    )
    parser.add_argument("--max-path-len", type=int, default=4)
    parser.add_argument("--walk-count", type=int, default=256)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--backend",
        choices=("auto", "py", "c"),
        default="auto",
        help="smoothing backend (auto prefers the compiled core)",
    )


def _add_selection_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=sorted(selection.MODES), default="reselect")
    parser.add_argument("--order", choices=sorted(_ORDER_FLAGS), default="recency")
    parser.add_argument("--coarse-k", type=int, default=500)
    parser.add_argument("--fine-k", type=int, default=100)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathpool",
        description="Path-based score smoothing and reranking for triple-based KG-RAG",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("load-check", help="validate a KG (and optional query) file")
    p.add_argument("--kg", required=True)
    p.add_argument("--queries")
    p.set_defaults(func=cmd_load_check)

    p = sub.add_parser("retrieve", help="extract subgraphs and score top-k triples")
    p.add_argument("--kg", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--scorer", default="uniform")
    p.add_argument("--hops", type=int, default=4)
    p.add_argument("--coarse-k", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("pool", help="smooth scores along path kernels")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    _add_pooling_flags(p)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("select", help="rerank or reselect a smoothed sequence")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    _add_selection_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("prompt", help="assemble prompts from a sequence artifact")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("run", help="full pipeline: retrieve, pool, select, generate")
    p.add_argument("--kg", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--scorer", default="uniform")
    p.add_argument("--hops", type=int, default=4)
    _add_pooling_flags(p)
    _add_selection_flags(p)
    p.add_argument("--endpoint", help="chat-completions URL")
    p.add_argument("--model", default="local-model")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--max-tokens", type=int, default=4000)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--no-llm", action="store_true", help="stop after prompt assembly")
    p.add_argument(
        "--baseline",
        action="store_true",
        help="skip pooling; prompt the retriever's descending top-k directly",
    )
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="time the smoothing stage per query")
    p.add_argument("--kg", help="KG to sample; synthetic when omitted")
    p.add_argument("--sizes", default="25,50,100,200,500")
    p.add_argument("--algos", default="dijkstra,bfs,random-walk")
    p.add_argument("--queries-per-cell", type=int, default=30)
    p.add_argument("--pooling", choices=sorted(_POOLING_FLAGS), default="avg")
    p.add_argument("--a", type=float, default=10.0)
    p.add_argument("--max-path-len", type=int, default=4)
    p.add_argument("--walk-count", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=("auto", "py", "c", "both"), default="auto")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="score completions against gold answers")
    p.add_argument("--queries", required=True)
    p.add_argument("--completions", required=True, help="JSONL of {id, completion}")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (PathPoolError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
