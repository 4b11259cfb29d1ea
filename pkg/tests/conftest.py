"""Shared fixtures: tiny graphs, random-case generators, a mock chat endpoint."""

from __future__ import annotations

import json
import random
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from pathpool.kg_store import QueryRecord, TripleStore
from pathpool.scoring import TripleSequence


def make_sequence(
    rows: list[tuple[str, str, str, float]], provenance: str = "test"
) -> TripleSequence:
    """Sequence over a fresh store from (head, relation, tail, score) rows."""
    store = TripleStore()
    pairs = []
    for head, relation, tail, score in rows:
        store.add(head, relation, tail)
        pairs.append((store.triples[-1], score))
    return TripleSequence.from_scores(store, pairs, provenance)


def random_case(
    seed: int,
    max_vertices: int = 10,
    max_edges: int = 16,
    dyadic: bool = False,
    positive: bool = True,
    max_queries: int = 3,
) -> tuple[TripleSequence, list[str]]:
    """Random scored multigraph plus query labels (possibly absent from it)."""
    rnd = random.Random(seed)
    nv = rnd.randint(2, max_vertices)
    labels = [f"E{i}" for i in range(nv)]
    store = TripleStore()
    pairs = []
    for _ in range(rnd.randint(1, max_edges)):
        head = rnd.choice(labels)
        tail = rnd.choice(labels)
        relation = f"r{rnd.randint(0, 5)}"
        if dyadic:
            score = rnd.randrange(1, 1025) / 1024.0
        elif positive:
            score = rnd.uniform(1e-3, 1.0)
        else:
            score = rnd.uniform(-1.0, 1.0)
        if store.add(head, relation, tail):
            pairs.append((store.triples[-1], score))
    sequence = TripleSequence.from_scores(store, pairs, "random")
    n_queries = rnd.randint(0, min(max_queries, nv))
    queries = rnd.sample(labels, n_queries)
    if rnd.random() < 0.15:
        queries.append("ABSENT_ENTITY")
    return sequence, queries


@pytest.fixture
def example_sequence() -> TripleSequence:
    """The three-triple hand example: A->B 0.9, B->C 0.3, D->E 0.5."""
    return make_sequence(
        [("A", "r1", "B", 0.9), ("B", "r2", "C", 0.3), ("D", "r3", "E", 0.5)]
    )


class _MockChatHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        payload = json.loads(self.rfile.read(length)) if length else {}
        self.server.requests.append(
            {"payload": payload, "headers": dict(self.headers)}
        )
        script = self.server.script
        if script:
            status, body = script.pop(0)
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.end_headers()
            self.wfile.write(body.encode("utf-8"))
            return
        question = ""
        messages = payload.get("messages", [])
        if messages:
            content = messages[-1].get("content", "")
            question = content.rsplit("Question:\n", 1)[-1].strip()
        answers = self.server.answers.get(question, [])
        completion = "\n".join(f"ans: {answer}" for answer in answers) or "no answer"
        body = json.dumps({"choices": [{"message": {"content": completion}}]})
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body.encode("utf-8"))

    def log_message(self, *args):  # keep pytest output clean
        pass


class MockChatServer:
    """Local chat-completions endpoint answering from a question->answers map.

    ``script`` (a list of (status, body) pairs) overrides normal behaviour
    for fault-injection tests; entries are consumed one per request.
    """

    def __init__(self):
        self._httpd = HTTPServer(("127.0.0.1", 0), _MockChatHandler)
        self._httpd.answers = {}
        self._httpd.script = []
        self._httpd.requests = []
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address
        return f"http://{host}:{port}/v1/chat/completions"

    @property
    def answers(self) -> dict:
        return self._httpd.answers

    @property
    def script(self) -> list:
        return self._httpd.script

    @property
    def requests(self) -> list:
        return self._httpd.requests

    def close(self):
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture
def mock_llm():
    server = MockChatServer()
    yield server
    server.close()


@pytest.fixture
def lou_seal_query() -> QueryRecord:
    return QueryRecord(
        id="exemplar",
        question="What year did the team with mascot named Lou Seal win the World Series?",
        query_entities=("Lou Seal",),
        gold_answers=("2010 World Series", "2012 World Series", "2014 World Series"),
    )
