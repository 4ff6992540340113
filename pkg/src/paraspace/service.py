"""HTTP face of the workbench: projects, sampling, batch runs, embeddings,
labels, and detail images under /v1.

Long work (sampling, runs, embeddings) goes through jobs that the UI polls;
everything that mutates a project serializes through that project's lock and
is flushed to its folder, so a restart reproduces every persisted entity.
"""

from __future__ import annotations

import itertools
import json
import shlex
import threading
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Response

from . import analysis, sampling
from .errors import ParaspaceError, ParseError
from .node import NodeClient, StdioChannel, TcpChannel, WorkerPool, batch_execute
from .project import NodeConfig, Project, load_project, save_project, spec_from_doc
from .project import spec_to_doc
from .region import RegionSpec, from_document
from .table import DimensionGroup, Role, RowStatus, Variable


@dataclass
class Job:
    id: str
    kind: str  # sample | batch_run | embed
    state: str = "queued"  # queued | running | done | failed
    done: int = 0
    total: int = 0
    error: str | None = None
    result: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {"id": self.id, "kind": self.kind, "state": self.state,
                "progress": {"done": self.done, "total": self.total},
                "error": self.error, "result": self.result}


class ServiceState:
    def __init__(self, home: str | Path, max_workers: int = 4):
        self.home = Path(home)
        self.home.mkdir(parents=True, exist_ok=True)
        self.projects: dict[str, Project] = {}
        self.locks: dict[str, threading.Lock] = {}
        self.jobs: dict[str, Job] = {}
        self.clients: dict[tuple[str, str], NodeClient] = {}
        self.executor = ThreadPoolExecutor(max_workers=max_workers)
        self._job_counter = itertools.count(1)
        self._registry_lock = threading.Lock()
        for folder in sorted(self.home.iterdir()) if self.home.exists() else []:
            if (folder / "project.json").exists():
                project = load_project(folder)
                self.projects[project.id] = project
                self.locks[project.id] = threading.Lock()

    def folder(self, project_id: str) -> Path:
        return self.home / project_id

    def get(self, project_id: str) -> Project:
        try:
            return self.projects[project_id]
        except KeyError:
            raise HTTPException(404, f"no project {project_id!r}") from None

    def lock(self, project_id: str) -> threading.Lock:
        return self.locks[project_id]

    def add(self, project: Project) -> None:
        with self._registry_lock:
            self.projects[project.id] = project
            self.locks[project.id] = threading.Lock()
        save_project(project, self.folder(project.id))

    def save(self, project: Project) -> None:
        save_project(project, self.folder(project.id))

    def new_job(self, kind: str, total: int = 0) -> Job:
        job = Job(id=f"job-{next(self._job_counter)}", kind=kind, total=total)
        self.jobs[job.id] = job
        return job

    def submit(self, job: Job, fn) -> None:
        def runner():
            job.state = "running"
            try:
                fn(job)
                job.state = "done"
            except Exception as exc:  # noqa: BLE001 - job errors surface via polling
                job.state = "failed"
                job.error = f"{type(exc).__name__}: {exc}"
                traceback.print_exc()

        self.executor.submit(runner)

    def client_for(self, project: Project, node_name: str) -> NodeClient:
        key = (project.id, node_name)
        client = self.clients.get(key)
        if client is not None:
            return client
        client = open_client(project.node(node_name), self.folder(project.id))
        self.clients[key] = client
        return client

    def shutdown(self) -> None:
        for client in self.clients.values():
            client.close()
        self.clients.clear()
        self.executor.shutdown(wait=False)


def open_client(config: NodeConfig, cache_dir: Path) -> NodeClient:
    if config.command:
        client = NodeClient(StdioChannel(list(config.command)), cache_dir=cache_dir)
    else:
        client = NodeClient(TcpChannel(config.host, int(config.port)),
                            cache_dir=cache_dir)
    client.handshake()
    return client


def _parse_region(project: Project, region) -> RegionSpec:
    if isinstance(region, str):
        if region in project.regions:
            return project.regions[region]
        try:
            region = json.loads(region)
        except json.JSONDecodeError:
            raise HTTPException(404, f"no saved region {region!r}") from None
    if isinstance(region, dict):
        try:
            return from_document(region)
        except ParseError as exc:
            raise HTTPException(422, str(exc)) from exc
    raise HTTPException(422, "region must be a saved name or a region document")


def _row_doc(row) -> dict:
    return {"id": row.id, "values": row.values, "status": row.status.value,
            "flags": row.flags, "artifact": row.artifact_ref}


def create_app(home: str | Path, max_workers: int = 4) -> FastAPI:
    from contextlib import asynccontextmanager

    from starlette.middleware.cors import CORSMiddleware

    state = ServiceState(home, max_workers=max_workers)

    @asynccontextmanager
    async def lifespan(_app):
        yield
        state.shutdown()

    app = FastAPI(title="paraspace", version="1", lifespan=lifespan)
    # local single-user tool; the browser UI may be served from another port
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.service = state

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/projects")
    def create_project(payload: dict = Body(default={})):
        variables = []
        for doc in payload.get("variables", []):
            variables.append(Variable(doc["name"], doc["role"], doc.get("units"),
                                      doc.get("description"), doc.get("default")))
        project = Project.new(payload.get("name", ""), variables)
        for node_doc in payload.get("nodes", []):
            command = node_doc.get("command")
            if isinstance(command, str):
                command = shlex.split(command)
            project.nodes.append(NodeConfig(node_doc["name"], command,
                                            node_doc.get("host"), node_doc.get("port")))
        for group_doc in payload.get("groups", []):
            try:
                project.add_group(DimensionGroup(group_doc["name"],
                                                 list(group_doc["members"])))
            except ParaspaceError as exc:
                raise HTTPException(422, str(exc)) from exc
        state.add(project)
        return project_doc(project)

    def project_doc(project: Project) -> dict:
        return {
            "id": project.id,
            "name": project.name,
            "variables": [
                {"name": v.name, "role": v.role.value, "units": v.units,
                 "default": v.default}
                for v in project.table.variables
            ],
            "row_count": len(project.table.rows),
            "regions": sorted(project.regions),
            "groups": [{"name": g.name, "members": list(g.members)}
                       for g in project.groups],
            "nodes": [cfg.to_doc() for cfg in project.nodes],
            "embeddings": {name: spec_to_doc(s)
                           for name, s in project.embeddings.items()},
        }

    @app.get("/v1/projects/{project_id}")
    def get_project(project_id: str):
        return project_doc(state.get(project_id))

    @app.post("/v1/projects/{project_id}/sample")
    def sample_job(project_id: str, payload: dict = Body(...)):
        project = state.get(project_id)
        region = _parse_region(project, payload.get("region"))
        count = int(payload.get("count", 1))
        request = sampling.SampleRequest(
            region, count=count, method=payload.get("method", "uniform"),
            seed=int(payload.get("seed", 0)),
            levels={k: int(v) for k, v in (payload.get("levels") or {}).items()})
        job = state.new_job("sample", total=count)

        def work(job: Job):
            points = sampling.sample(request)
            with state.lock(project.id):
                ids = project.table.append_rows(points)
                state.save(project)
            job.total = len(ids)  # grid requests ignore count
            job.done = len(ids)
            job.result = {"row_ids": ids}

        state.submit(job, work)
        return job.to_doc()

    @app.post("/v1/projects/{project_id}/runs")
    def run_job(project_id: str, payload: dict = Body(default={})):
        project = state.get(project_id)
        if not project.nodes:
            raise HTTPException(409, "project has no compute node configured")
        node_name = payload.get("node", project.nodes[0].name)
        config = next((n for n in project.nodes if n.name == node_name), None)
        if config is None:
            raise HTTPException(404, f"no node {node_name!r}")
        row_ids = payload.get("rows")
        if row_ids is None:
            row_ids = [r.id for r in project.table.rows
                       if r.status is RowStatus.PENDING]
        workers = max(1, int(payload.get("workers", 1)))
        job = state.new_job("batch_run", total=len(row_ids))

        def work(job: Job):
            clients = [open_client(config, state.folder(project.id))
                       for _ in range(workers)]
            try:
                with state.lock(project.id):
                    statuses = {}
                    for result in batch_execute(WorkerPool(clients),
                                                project.table, row_ids):
                        job.done += 1
                        statuses[result.row_id] = result.status
                    state.save(project)
                job.result = {"statuses": {str(k): v for k, v in statuses.items()}}
            finally:
                for client in clients:
                    client.close()

        state.submit(job, work)
        return job.to_doc()

    @app.get("/v1/projects/{project_id}/rows")
    def get_rows(project_id: str, region: str | None = None,
                 label_column: str | None = None, label: str | None = None):
        project = state.get(project_id)
        rows = project.table.rows
        if region is not None:
            spec = _parse_region(project, region)
            try:
                keep = project.table.filter(spec)
            except ParaspaceError as exc:
                raise HTTPException(422, str(exc)) from exc
            rows = [r for r in rows if r.id in keep]
        if label_column is not None and label is not None:
            rows = [r for r in rows if r.values.get(label_column) == label]
        return {"rows": [_row_doc(r) for r in rows]}

    @app.post("/v1/projects/{project_id}/labels")
    def set_labels(project_id: str, payload: dict = Body(...)):
        project = state.get(project_id)
        column = payload["column"]
        rows = payload.get("rows", [])
        label = str(payload["label"])
        with state.lock(project.id):
            if not project.table.has_variable(column):
                project.table.add_variable(Variable(column, Role.LABEL))
            try:
                updated = project.table.set_labels(rows, column, label)
            except ParaspaceError as exc:
                raise HTTPException(422, str(exc)) from exc
            state.save(project)
        return {"updated": updated}

    @app.post("/v1/projects/{project_id}/regions")
    def save_region(project_id: str, payload: dict = Body(...)):
        project = state.get(project_id)
        name = payload["name"]
        region = _parse_region(project, payload.get("region"))
        with state.lock(project.id):
            project.regions[name] = region
            state.save(project)
        return {"saved": name}

    @app.get("/v1/projects/{project_id}/regions/{name}")
    def get_region(project_id: str, name: str):
        project = state.get(project_id)
        if name not in project.regions:
            raise HTTPException(404, f"no saved region {name!r}")
        from .region import to_document
        return {"name": name, "region": to_document(project.regions[name])}

    @app.post("/v1/projects/{project_id}/embeddings")
    def embed_job(project_id: str, payload: dict = Body(...)):
        project = state.get(project_id)
        try:
            spec = spec_from_doc(payload)
        except (KeyError, ParaspaceError) as exc:
            raise HTTPException(422, f"bad embedding spec: {exc}") from exc
        name = payload.get("name", "embedding")
        row_ids = payload.get("rows")
        job = state.new_job("embed")

        def work(job: Job):
            with state.lock(project.id):
                result = analysis.embed(project.table, row_ids, spec)
                analysis.apply_embedding(project.table, result)
                project.embeddings[name] = spec
                state.save(project)
            job.total = job.done = len(result.row_ids)
            job.result = {
                "name": name,
                "rows": len(result.row_ids),
                "dropped": result.dropped_ids,
                "eigenvalues": [float(v) for v in result.eigenvalues[:10]],
                "degenerate_axes": result.degenerate_axes,
            }

        state.submit(job, work)
        return job.to_doc()

    @app.get("/v1/projects/{project_id}/detail/{row_id}/{plot}")
    def detail(project_id: str, row_id: int, plot: str, node: str | None = None):
        project = state.get(project_id)
        if not project.nodes:
            raise HTTPException(409, "project has no compute node configured")
        node_name = node or project.nodes[0].name
        try:
            row = project.table.row(row_id)
        except ParaspaceError as exc:
            raise HTTPException(404, str(exc)) from exc
        try:
            client = state.client_for(project, node_name)
            params = {p.name: row.values[p.name]
                      for p in client.descriptor.parameters
                      if p.name in row.values}
            png = client.render_detail(params, plot)
        except KeyError:
            raise HTTPException(404, f"no node {node_name!r}") from None
        except ParaspaceError as exc:
            raise HTTPException(502, str(exc)) from exc
        return Response(content=png, media_type="image/png")

    @app.get("/v1/jobs/{job_id}")
    def get_job(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"no job {job_id!r}")
        return job.to_doc()

    return app


def serve(home: str | Path, host: str = "127.0.0.1", port: int = 8722) -> None:
    """Run the service until interrupted; a bound port fails fast."""
    import socket

    import uvicorn

    from .errors import StartupError

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise StartupError(f"cannot bind {host}:{port}: {exc}") from exc
    finally:
        probe.close()
    uvicorn.run(create_app(home), host=host, port=port, log_level="warning")
