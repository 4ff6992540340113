"""Client side of the compute-node protocol: spawn or dial a simulator,
discover its capabilities, execute configurations, fetch features and detail
plots, and fan a batch of rows out over several connections.

Connections are synchronous (one request in flight each); concurrency comes
from running several workers.  Run results are cached on disk keyed by the
default-filled parameter tuple whenever the node declares file_io, so reruns
of a known configuration never touch the node.
"""

from __future__ import annotations

import base64
import hashlib
import json
import queue
import socket
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import (
    BatchAborted,
    NodeUnavailable,
    ParaspaceError,
    ProtocolError,
    UnknownFeature,
    UnsupportedCapability,
)
from .protocol import (
    ComputeNodeDescriptor,
    canonical_params_key,
    encode_line,
    parse_descriptor,
    parse_line,
)
from .table import DataTable, RowStatus

HANDSHAKE_TIMEOUT = 10.0
RETRY_BUDGET = 1


@dataclass
class RunResult:
    row_id: int | None
    responses: dict
    artifact_ref: str | None = None
    wall_time: float = 0.0
    status: str = "ok"  # ok | failed
    message: str | None = None
    cached: bool = False


class Channel:
    """One line-oriented connection to a node process."""

    def send_line(self, line: str) -> None:
        raise NotImplementedError

    def recv_line(self, timeout: float | None) -> str:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class _ReaderThreadChannel(Channel):
    """Shared plumbing: a reader thread feeds lines into a queue so receives
    can time out without platform-specific non-blocking IO."""

    _EOF = object()

    def __init__(self):
        self._lines: queue.Queue = queue.Queue()
        self._closed = False

    def _start_reader(self, stream):
        def pump():
            try:
                for raw in stream:
                    self._lines.put(raw)
            except (OSError, ValueError):
                pass
            self._lines.put(self._EOF)

        thread = threading.Thread(target=pump, daemon=True)
        thread.start()

    def recv_line(self, timeout: float | None) -> str:
        if self._closed:
            raise NodeUnavailable("connection is closed")
        try:
            item = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise NodeUnavailable(f"no reply within {timeout} s") from None
        if item is self._EOF:
            self._closed = True
            raise NodeUnavailable("connection closed by node")
        return item if isinstance(item, str) else item.decode("utf-8", "replace")


class StdioChannel(_ReaderThreadChannel):
    """Node spawned as a subprocess, protocol over its stdin/stdout."""

    def __init__(self, argv: list[str]):
        super().__init__()
        try:
            self.process = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1)
        except OSError as exc:
            raise NodeUnavailable(f"cannot spawn node {argv!r}: {exc}") from exc
        self._start_reader(self.process.stdout)

    def send_line(self, line: str) -> None:
        if self._closed or self.process.poll() is not None:
            raise NodeUnavailable("node process has exited")
        try:
            self.process.stdin.write(line)
            self.process.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise NodeUnavailable(f"node process went away: {exc}") from exc

    def close(self) -> None:
        self._closed = True
        if self.process.poll() is None:
            self.process.kill()
        self.process.wait()


class TcpChannel(_ReaderThreadChannel):
    def __init__(self, host: str, port: int, connect_timeout: float = 5.0):
        super().__init__()
        try:
            self._sock = socket.create_connection((host, port), timeout=connect_timeout)
        except OSError as exc:
            raise NodeUnavailable(f"cannot connect to {host}:{port}: {exc}") from exc
        self._sock.settimeout(None)
        self._file = self._sock.makefile("rwb")
        self._start_reader(self._file)

    def send_line(self, line: str) -> None:
        if self._closed:
            raise NodeUnavailable("connection is closed")
        try:
            self._file.write(line.encode("utf-8"))
            self._file.flush()
        except OSError as exc:
            raise NodeUnavailable(f"connection lost: {exc}") from exc

    def close(self) -> None:
        self._closed = True
        try:
            self._sock.close()
        except OSError:
            pass


class NodeClient:
    """Drives one channel; all requests serialize through an internal lock."""

    def __init__(self, channel: Channel, cache_dir: str | Path | None = None):
        self.channel = channel
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.descriptor: ComputeNodeDescriptor | None = None
        self._next_id = 0
        self._lock = threading.Lock()
        self.messages_sent = 0

    # -- protocol plumbing -------------------------------------------------

    def _request(self, message: dict, timeout: float | None = None) -> dict:
        with self._lock:
            self._next_id += 1
            request_id = self._next_id
            message = dict(message, id=request_id)
            try:
                self.channel.send_line(encode_line(message))
            except NodeUnavailable:
                self.channel.close()
                raise
            self.messages_sent += 1
            try:
                reply = parse_line(self.channel.recv_line(timeout))
            except ProtocolError:
                self.channel.close()
                raise
            if reply.get("id") != request_id:
                self.channel.close()
                raise ProtocolError(
                    f"reply id {reply.get('id')!r} does not match request {request_id}")
            return reply

    def handshake(self, timeout: float = HANDSHAKE_TIMEOUT) -> ComputeNodeDescriptor:
        reply = self._request({"type": "hello"}, timeout=timeout)
        self.descriptor = parse_descriptor(reply)
        return self.descriptor

    def close(self) -> None:
        self.channel.close()

    def _need_descriptor(self) -> ComputeNodeDescriptor:
        if self.descriptor is None:
            raise ProtocolError("handshake has not completed")
        return self.descriptor

    # -- caching -----------------------------------------------------------
    #
    # cache_dir is usually the project folder: run results and detail images
    # land side by side under runs/, and artifact refs are stored relative to
    # cache_dir so project folders can move.

    def _cache_path(self, key: str, suffix: str) -> Path | None:
        if self.cache_dir is None:
            return None
        digest = hashlib.sha1(key.encode("utf-8")).hexdigest()
        path = self.cache_dir / "runs" / f"{digest}{suffix}"
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _ref(self, path: Path) -> str:
        return str(path.relative_to(self.cache_dir))

    # -- operations ----------------------------------------------------------

    def run(self, params: dict) -> RunResult:
        """Execute one configuration; serves from the run cache when the node
        declared file_io and this parameter tuple was seen before."""
        descriptor = self._need_descriptor()
        filled = descriptor.fill_defaults(params)
        key = canonical_params_key(descriptor.name, filled)
        cache_path = None
        if "file_io" in descriptor.capabilities:
            cache_path = self._cache_path(key, ".json")
            if cache_path is not None and cache_path.exists():
                values = json.loads(cache_path.read_text(encoding="utf-8"))
                return RunResult(None, values, self._ref(cache_path), 0.0, cached=True)

        reply = self._request({"type": "run", "params": filled})
        if reply["type"] == "error":
            return RunResult(None, {}, status="failed",
                             message=str(reply.get("message")))
        if reply["type"] != "result":
            raise ProtocolError(f"unexpected reply type {reply['type']!r} to run")
        values = reply.get("values")
        if not isinstance(values, dict):
            raise ProtocolError("run result must carry a values object")
        for spec in descriptor.responses:
            if spec.name not in values:
                raise ProtocolError(f"node omitted declared response {spec.name!r}")
        artifact = reply.get("artifact")
        if cache_path is not None:
            cache_path.write_text(json.dumps(values), encoding="utf-8")
            artifact = artifact or self._ref(cache_path)
        return RunResult(None, values, artifact,
                         float(reply.get("wall_time", 0.0)))

    def compute_feature(self, feature: str, params: dict | None = None,
                        artifact_ref: str | None = None):
        descriptor = self._need_descriptor()
        if feature not in descriptor.feature_names():
            raise UnknownFeature(f"node {descriptor.name!r} declares no feature "
                                 f"{feature!r}")
        message = {"type": "feature", "name": feature, "params": params or {}}
        if artifact_ref is not None:
            message["artifact"] = artifact_ref
        reply = self._request(message)
        if reply["type"] == "error":
            raise ProtocolError(f"feature {feature!r} failed: {reply.get('message')}")
        values = reply.get("values") or {}
        if feature not in values:
            raise ProtocolError(f"feature reply missing value for {feature!r}")
        return values[feature]

    def render_detail(self, params: dict, plot: str) -> bytes:
        descriptor = self._need_descriptor()
        if "display_plot" not in descriptor.capabilities:
            raise UnsupportedCapability(
                f"node {descriptor.name!r} cannot display plots")
        if plot not in descriptor.plots:
            raise UnsupportedCapability(
                f"node {descriptor.name!r} declares no plot {plot!r}")
        filled = descriptor.fill_defaults(params)
        key = canonical_params_key(descriptor.name, filled) + f"|plot={plot}"
        cache_path = self._cache_path(key, ".png")
        if cache_path is not None and cache_path.exists():
            return cache_path.read_bytes()
        reply = self._request({"type": "show", "plot": plot, "params": filled})
        if reply["type"] == "error":
            raise ProtocolError(f"show failed: {reply.get('message')}")
        if reply["type"] != "image" or not isinstance(reply.get("data"), str):
            raise ProtocolError("expected an image reply with base64 data")
        try:
            png = base64.b64decode(reply["data"], validate=True)
        except (ValueError, TypeError) as exc:
            raise ProtocolError(f"image payload is not base64: {exc}") from exc
        if not png:
            raise ProtocolError("image payload is empty")
        if cache_path is not None:
            cache_path.write_bytes(png)
        return png


def variables_from_descriptor(descriptor: ComputeNodeDescriptor) -> list:
    """Table columns a node implies: its parameters as factors with defaults,
    its run responses as response columns."""
    from .table import Role, Variable

    variables = [Variable(p.name, Role.FACTOR, description=p.description or None,
                          default=p.default)
                 for p in descriptor.parameters]
    variables += [Variable(r.name, Role.RESPONSE) for r in descriptor.responses]
    return variables


def spawn_worker(argv: list[str], cache_dir=None,
                 handshake_timeout: float = HANDSHAKE_TIMEOUT) -> NodeClient:
    client = NodeClient(StdioChannel(argv), cache_dir=cache_dir)
    client.handshake(timeout=handshake_timeout)
    return client


def connect_worker(host: str, port: int, cache_dir=None,
                   handshake_timeout: float = HANDSHAKE_TIMEOUT) -> NodeClient:
    client = NodeClient(TcpChannel(host, port), cache_dir=cache_dir)
    client.handshake(timeout=handshake_timeout)
    return client


# --- batches -------------------------------------------------------------------

@dataclass
class WorkerPool:
    """A set of live connections plus the bookkeeping for one batch.

    Every row is in exactly one of: queued, in flight, or done.  A row whose
    connection dies is requeued up to RETRY_BUDGET times; node-reported
    failures are terminal immediately since the simulations are deterministic.
    """

    clients: list[NodeClient]
    retry_budget: int = RETRY_BUDGET

    def live_count(self) -> int:
        return len(self.clients)


def batch_execute(pool: WorkerPool, table: DataTable,
                  row_ids: Iterable[int]) -> Iterator[RunResult]:
    """Run the listed rows across the pool; yield one terminal result per row.

    Results are applied to the table in this (consumer) thread, which is the
    single-writer side of the table contract.  Completion order is whatever
    the workers produce.
    """
    ids = list(dict.fromkeys(row_ids))  # a duplicate id must not stall the batch
    if not ids:
        return
    if not pool.clients:
        raise BatchAborted("no live connections", set(ids))
    if any(c.descriptor is None for c in pool.clients):
        raise ProtocolError("every pool connection must be handshaked first")

    tasks: queue.Queue = queue.Queue()
    events: queue.Queue = queue.Queue()
    for row_id in ids:
        tasks.put(row_id)
    attempts = {row_id: 0 for row_id in ids}
    terminal: set[int] = set()
    _STOP = object()

    def work(client: NodeClient):
        while True:
            row_id = tasks.get()
            if row_id is _STOP:
                return
            try:
                row = table.row(row_id)
                params = {p.name: row.values[p.name]
                          for p in client.descriptor.parameters
                          if p.name in row.values}
                result = client.run(params)
            except NodeUnavailable:
                events.put(("dead", row_id))
                return
            except Exception as exc:  # noqa: BLE001 - a bad row must not hang the batch
                result = RunResult(None, {}, status="failed",
                                   message=f"{type(exc).__name__}: {exc}")
            result.row_id = row_id
            events.put(("done", result))

    threads = [threading.Thread(target=work, args=(c,), daemon=True)
               for c in pool.clients]
    for t in threads:
        t.start()
    live = len(threads)

    def apply(result: RunResult) -> None:
        try:
            row = table.row(result.row_id)
        except ParaspaceError:
            return  # id never existed; the yielded failure is the whole story
        if result.status == "ok":
            for name, value in result.responses.items():
                if table.has_variable(name):
                    table.set_value(result.row_id, name, value)
            if row.status is not RowStatus.FAILED:  # vector-length flag wins
                row.status = RowStatus.COMPUTED
            row.artifact_ref = result.artifact_ref
        else:
            row.status = RowStatus.FAILED
            if result.message:
                row.flag(result.message)

    while len(terminal) < len(ids):
        if live == 0:
            residual = set(ids) - terminal
            raise BatchAborted(
                f"all connections lost with {len(residual)} rows unfinished",
                residual)
        kind, payload = events.get()
        if kind == "done":
            attempts[payload.row_id] += 1
            terminal.add(payload.row_id)
            apply(payload)
            yield payload
        else:  # dead connection with this row in flight
            live -= 1
            row_id = payload
            if attempts[row_id] < pool.retry_budget:
                attempts[row_id] += 1
                tasks.put(row_id)
            else:
                result = RunResult(row_id, {}, status="failed",
                                   message="connection lost and retry budget spent")
                terminal.add(row_id)
                apply(result)
                yield result

    for _ in threads:
        tasks.put(_STOP)
