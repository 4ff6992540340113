"""Project persistence: everything needed to reproduce a session lives in one
folder.

    project.json   variables, groups, node configs, embedding specs, properties
    table.csv      rows with bookkeeping columns
    regions/       named .region.json documents, portable across projects
    runs/          node cache: run results and detail images

Loading is forgiving about missing run artifacts (rows get flagged, nothing
fails) so a project folder can be shipped without its cache.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import AffinitySpec
from .errors import InvalidValue, ParseError
from .region import RegionSpec, from_document, to_document
from .table import DataTable, DerivedDef, DimensionGroup, Variable, export_csv, import_csv

FORMAT_VERSION = 1


@dataclass
class NodeConfig:
    """How to reach one simulator: a spawn command or a TCP endpoint."""

    name: str
    command: list[str] | None = None
    host: str | None = None
    port: int | None = None

    def to_doc(self) -> dict:
        doc = {"name": self.name}
        if self.command:
            doc["command"] = list(self.command)
        if self.host:
            doc["host"] = self.host
            doc["port"] = self.port
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "NodeConfig":
        return cls(doc["name"], doc.get("command"), doc.get("host"), doc.get("port"))


@dataclass
class Project:
    id: str
    name: str = ""
    table: DataTable = field(default_factory=DataTable)
    groups: list[DimensionGroup] = field(default_factory=list)
    regions: dict[str, RegionSpec] = field(default_factory=dict)
    nodes: list[NodeConfig] = field(default_factory=list)
    embeddings: dict[str, AffinitySpec] = field(default_factory=dict)
    properties: dict[str, str] = field(default_factory=dict)

    @classmethod
    def new(cls, name: str = "", variables=()) -> "Project":
        return cls(id=uuid.uuid4().hex[:12], name=name, table=DataTable(variables))

    def node(self, name: str) -> NodeConfig:
        for cfg in self.nodes:
            if cfg.name == name:
                return cfg
        raise KeyError(name)

    def add_group(self, group: DimensionGroup) -> DimensionGroup:
        unknown = [m for m in group.members if not self.table.has_variable(m)]
        if unknown:
            raise InvalidValue(f"group {group.name!r} names unknown variables {unknown}")
        self.groups = [g for g in self.groups if g.name != group.name] + [group]
        return group


def spec_to_doc(spec: AffinitySpec) -> dict:
    return {
        "columns": list(spec.columns),
        "weights": list(spec.weights) if spec.weights is not None else None,
        "kernel": spec.kernel,
        "sigma": spec.sigma,
        "normalization": sorted(spec.normalization),
    }


def spec_from_doc(doc: dict) -> AffinitySpec:
    return AffinitySpec(
        columns=tuple(doc["columns"]),
        weights=tuple(doc["weights"]) if doc.get("weights") else None,
        kernel=doc.get("kernel", "dot_product"),
        sigma=doc.get("sigma"),
        normalization=frozenset(doc.get("normalization", ())),
    )


def save_project(project: Project, path: str | Path) -> None:
    folder = Path(path)
    folder.mkdir(parents=True, exist_ok=True)
    table = project.table
    doc = {
        "version": FORMAT_VERSION,
        "id": project.id,
        "name": project.name,
        "next_row_id": table.next_row_id,
        "variables": [
            {"name": v.name, "role": v.role.value, "units": v.units,
             "description": v.description, "default": v.default}
            for v in table.variables
        ],
        "derived": {
            name: {"expr": d.expr, "node": d.node, "feature": d.feature}
            for name, d in table.derived_defs.items()
        },
        "vector_lengths": dict(table._vector_lengths),
        "groups": [{"name": g.name, "members": list(g.members)} for g in project.groups],
        "regions": sorted(project.regions),
        "nodes": [cfg.to_doc() for cfg in project.nodes],
        "embeddings": {name: spec_to_doc(s) for name, s in project.embeddings.items()},
        "properties": dict(project.properties),
    }
    (folder / "project.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with open(folder / "table.csv", "w", encoding="utf-8", newline="") as fh:
        export_csv(table, fh, include_meta=True)
    regions_dir = folder / "regions"
    regions_dir.mkdir(exist_ok=True)
    for name, region in project.regions.items():
        (regions_dir / f"{name}.region.json").write_text(
            json.dumps(to_document(region), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    for stale in regions_dir.glob("*.region.json"):
        if stale.name[: -len(".region.json")] not in project.regions:
            stale.unlink()
    (folder / "runs").mkdir(exist_ok=True)


def load_project(path: str | Path) -> Project:
    folder = Path(path)
    meta_path = folder / "project.json"
    if not meta_path.exists():
        raise ParseError(f"{folder} has no project.json")
    try:
        doc = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"project.json is not valid JSON: {exc}") from exc
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise ParseError(
            f"project format version {version!r} unsupported (expected {FORMAT_VERSION})")

    variables = [
        Variable(v["name"], v["role"], v.get("units"), v.get("description"),
                 v.get("default"))
        for v in doc.get("variables", [])
    ]
    csv_path = folder / "table.csv"
    if csv_path.exists():
        with open(csv_path, encoding="utf-8", newline="") as fh:
            table = import_csv(fh, variables)
    else:
        table = DataTable(variables)
    table.next_row_id = max(table.next_row_id, int(doc.get("next_row_id", 0)))
    for name, d in doc.get("derived", {}).items():
        table.derived_defs[name] = DerivedDef(d.get("expr"), d.get("node"),
                                              d.get("feature"))
    for name, length in doc.get("vector_lengths", {}).items():
        table._vector_lengths.setdefault(name, int(length))

    project = Project(
        id=doc.get("id", uuid.uuid4().hex[:12]),
        name=doc.get("name", ""),
        table=table,
        groups=[DimensionGroup(g["name"], list(g["members"]))
                for g in doc.get("groups", [])],
        nodes=[NodeConfig.from_doc(n) for n in doc.get("nodes", [])],
        embeddings={name: spec_from_doc(s)
                    for name, s in doc.get("embeddings", {}).items()},
        properties=dict(doc.get("properties", {})),
    )
    regions_dir = folder / "regions"
    for name in doc.get("regions", []):
        region_path = regions_dir / f"{name}.region.json"
        if not region_path.exists():
            raise ParseError(f"project names region {name!r} but {region_path} is missing")
        try:
            region_doc = json.loads(region_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"region {name!r} is not valid JSON: {exc}") from exc
        project.regions[name] = from_document(region_doc)

    for row in table.rows:
        if row.artifact_ref and not (folder / row.artifact_ref).exists() \
                and not Path(row.artifact_ref).exists():
            row.flag("artifact-missing")
    return project


def runs_dir(path: str | Path) -> Path:
    return Path(path) / "runs"
