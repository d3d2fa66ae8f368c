"""External perplexity scorers and the line-delimited scoring protocol.

A scorer receives requests ``{request_id, sentence, context_graphs[],
target_graph}`` and answers ``{request_id, perplexity}``, one JSON object
per line, responses in any order.  Failures are fatal for the selection that
issued them: a missing, malformed, duplicate-free-violating or non-positive
response raises ScorerError rather than silently degrading results.

Four implementations ship: a persistent child process speaking the protocol
over stdin/stdout, a socket client, a precomputed score file for fully
offline runs, and a deterministic in-process mock used by the test suite.
"""

from __future__ import annotations

import json
import math
import os
import select
import shlex
import socket
import subprocess
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from amr_ensemble.graph import parse_penman
from amr_ensemble.smatch import compute_smatch

__all__ = [
    "ScorerRequest",
    "PerplexityScore",
    "ScorerError",
    "PerplexityScorer",
    "SubprocessScorer",
    "SocketScorer",
    "FileScorer",
    "MockScorer",
]


class ScorerError(RuntimeError):
    """Scorer transport or protocol failure; aborts the selection."""

    def __init__(self, message: str, request_id: str | None = None):
        super().__init__(message)
        self.request_id = request_id


@dataclass(frozen=True)
class ScorerRequest:
    """One scoring request.

    ``sentence_id`` and ``system_id`` are routing metadata for offline
    scorers; they are not part of the wire format.
    """

    request_id: str
    sentence: str
    context_graphs: tuple[str, ...]
    target_graph: str
    sentence_id: str = ""
    system_id: str = ""

    def __post_init__(self):
        parse_penman(self.target_graph)

    def to_wire(self) -> str:
        return json.dumps(
            {
                "request_id": self.request_id,
                "sentence": self.sentence,
                "context_graphs": list(self.context_graphs),
                "target_graph": self.target_graph,
            }
        )


@dataclass(frozen=True)
class PerplexityScore:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value > 0):
            raise ScorerError(f"perplexity must be a positive finite real, got {self.value}")


class PerplexityScorer(Protocol):
    def score(self, requests: Sequence[ScorerRequest]) -> list[PerplexityScore]:
        """Score every request, results in request order."""
        ...


def _parse_response(line: str, pending: set[str]) -> tuple[str, float]:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ScorerError(f"malformed scorer response: {line!r} ({exc})") from exc
    if not isinstance(record, dict) or "request_id" not in record or "perplexity" not in record:
        raise ScorerError(f"scorer response missing required keys: {line!r}")
    request_id = record["request_id"]
    if request_id not in pending:
        raise ScorerError(
            f"scorer responded to unknown request_id {request_id!r}", request_id
        )
    value = record["perplexity"]
    if not isinstance(value, (int, float)):
        raise ScorerError(f"perplexity is not numeric: {value!r}", request_id)
    return request_id, float(value)


def _collect(
    requests: Sequence[ScorerRequest], read_line
) -> list[PerplexityScore]:
    pending = {r.request_id for r in requests}
    values: dict[str, float] = {}
    while pending:
        line = read_line()
        if line is None:
            raise ScorerError(
                f"scorer stream closed with {len(pending)} responses outstanding"
            )
        line = line.strip()
        if not line:
            continue
        request_id, value = _parse_response(line, pending)
        pending.discard(request_id)
        values[request_id] = value
    return [PerplexityScore(values[r.request_id]) for r in requests]


class SubprocessScorer:
    """Persistent child process speaking the JSON-lines protocol on its
    standard streams.  The child is started lazily and kept alive across
    score() calls so model loading happens once."""

    def __init__(self, command: str | Sequence[str], timeout: float = 120.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ValueError("scorer command is empty")
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._buffer = b""

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=None,
                )
            except OSError as exc:
                raise ScorerError(f"cannot start scorer {self.command}: {exc}") from exc
            self._buffer = b""
        return self._proc

    def _read_line(self) -> str | None:
        proc = self._proc
        assert proc is not None and proc.stdout is not None
        fd = proc.stdout.fileno()
        while b"\n" not in self._buffer:
            ready, _, _ = select.select([fd], [], [], self.timeout)
            if not ready:
                raise ScorerError(f"scorer timed out after {self.timeout}s")
            chunk = os.read(fd, 65536)
            if not chunk:
                return None
            self._buffer += chunk
        line, _, self._buffer = self._buffer.partition(b"\n")
        return line.decode("utf-8", errors="replace")

    def score(self, requests: Sequence[ScorerRequest]) -> list[PerplexityScore]:
        if not requests:
            return []
        proc = self._ensure_started()
        assert proc.stdin is not None
        try:
            for request in requests:
                proc.stdin.write((request.to_wire() + "\n").encode())
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ScorerError(f"scorer process rejected input: {exc}") from exc
        return _collect(requests, self._read_line)

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.stdin is not None:
                self._proc.stdin.close()
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
            self._proc = None

    def __enter__(self) -> "SubprocessScorer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class SocketScorer:
    """Protocol client over a TCP or UNIX-domain socket.

    address is (host, port) for TCP or a filesystem path for UNIX sockets.
    A connection is opened per score() call.
    """

    def __init__(self, address: tuple[str, int] | str, timeout: float = 120.0):
        self.address = address
        self.timeout = timeout

    def score(self, requests: Sequence[ScorerRequest]) -> list[PerplexityScore]:
        if not requests:
            return []
        family = socket.AF_UNIX if isinstance(self.address, str) else socket.AF_INET
        try:
            sock = socket.socket(family, socket.SOCK_STREAM)
            sock.settimeout(self.timeout)
            sock.connect(self.address)
        except OSError as exc:
            raise ScorerError(f"cannot connect to scorer at {self.address}: {exc}") from exc
        with sock:
            stream = sock.makefile("rw", encoding="utf-8", newline="\n")
            for request in requests:
                stream.write(request.to_wire() + "\n")
            stream.flush()

            def read_line() -> str | None:
                try:
                    line = stream.readline()
                except (socket.timeout, TimeoutError) as exc:
                    raise ScorerError(f"scorer timed out after {self.timeout}s") from exc
                return line if line else None

            return _collect(requests, read_line)


class FileScorer:
    """Precomputed perplexities from a tab-separated file for offline runs.

    Each data line is ``sentence_id<TAB>system_id<TAB>perplexity``; blank
    lines and lines starting with '#' are skipped.  Requests are routed by
    their metadata fields, so both must be populated by the caller.
    """

    def __init__(self, path: str):
        self.path = path
        self.table: dict[tuple[str, str], float] = {}
        with open(path, encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ScorerError(
                        f"{path}:{lineno}: expected sentence_id<TAB>system_id<TAB>perplexity"
                    )
                try:
                    value = float(parts[2])
                except ValueError as exc:
                    raise ScorerError(f"{path}:{lineno}: bad perplexity {parts[2]!r}") from exc
                key = (parts[0], parts[1])
                if key in self.table:
                    raise ScorerError(f"{path}:{lineno}: duplicate key {key}")
                self.table[key] = value

    def score(self, requests: Sequence[ScorerRequest]) -> list[PerplexityScore]:
        out = []
        for request in requests:
            key = (request.sentence_id, request.system_id)
            if key not in self.table:
                raise ScorerError(
                    f"no precomputed score for sentence {key[0]!r} system {key[1]!r}",
                    request.request_id,
                )
            out.append(PerplexityScore(self.table[key]))
        return out


class MockScorer:
    """Deterministic in-process scorer for tests and offline demos.

    perplexity = 1 / (1 + mean SMATCH F1 of the target against the other
    context graphs).  A target identical in content to one context graph is
    matched against the remaining ones, which makes perplexity-argmin agree
    with SMATCH-average-argmax selection exactly.
    """

    def __init__(self, restarts: int = 8, seed: int = 0):
        self.restarts = restarts
        self.seed = seed

    def score(self, requests: Sequence[ScorerRequest]) -> list[PerplexityScore]:
        out = []
        for request in requests:
            target = parse_penman(request.target_graph)
            context = list(request.context_graphs)
            for i, text in enumerate(context):
                if text == request.target_graph:
                    del context[i]
                    break
            if context:
                total = sum(
                    compute_smatch(
                        target, parse_penman(text), restarts=self.restarts, seed=self.seed
                    ).f1_fraction
                    for text in context
                )
                mean = total / len(context)
            else:
                mean = 1
            out.append(PerplexityScore(1.0 / (1.0 + float(mean))))
        return out
