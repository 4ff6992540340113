"""Headless pipeline over a project folder.

    paraspace init --project demo --node-cmd "python3 -m paraspace.workers.sine"
    paraspace sample --project demo --region roi.region.json --count 100 --seed 7
    paraspace run --project demo --workers 2
    paraspace feature --project demo --node sine --feature v0
    paraspace embed --project demo --columns v0,v_half --kernel gaussian
    paraspace label --project demo --column cluster --label good --region good.region.json
    paraspace summarize --project demo --column cluster --label good
    paraspace export --project demo --out table.csv
    paraspace serve --home projects/ --port 8722

The PARASPACE_HOME environment variable anchors relative --project paths.
Exit codes: 0 success, 2 usage, otherwise the failing error's code (see
errors.py).
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from pathlib import Path

from . import analysis, sampling
from .errors import NodeUnavailable, ParaspaceError
from .node import WorkerPool, batch_execute
from .project import NodeConfig, Project, load_project, save_project
from .region import load_region
from .service import open_client
from .table import (
    DataTable,
    Role,
    RowStatus,
    Variable,
    export_csv,
)


def project_path(arg: str) -> Path:
    path = Path(arg)
    if not path.is_absolute():
        home = os.environ.get("PARASPACE_HOME")
        if home:
            path = Path(home) / path
    return path


def _load(args) -> tuple[Project, Path]:
    folder = project_path(args.project)
    return load_project(folder), folder


def _parse_var(spec: str) -> Variable:
    # name:role[:default], e.g. "k:factor:1.0"
    parts = spec.split(":")
    if len(parts) < 2:
        raise ParaspaceError(f"variable spec {spec!r} needs name:role")
    default = float(parts[2]) if len(parts) > 2 else None
    return Variable(parts[0], parts[1], default=default)


def cmd_init(args) -> int:
    folder = project_path(args.project)
    variables = [_parse_var(s) for s in args.var or []]
    project = Project.new(args.name or folder.name, variables)
    if args.node_cmd:
        from .node import variables_from_descriptor

        config = NodeConfig(args.node_name or "node", shlex.split(args.node_cmd))
        client = open_client(config, folder)
        try:
            descriptor = client.descriptor
            config.name = args.node_name or descriptor.name
            for variable in variables_from_descriptor(descriptor):
                if not project.table.has_variable(variable.name):
                    project.table.add_variable(variable)
        finally:
            client.close()
        project.nodes.append(config)
    save_project(project, folder)
    print(f"initialized project {project.id} at {folder}")
    return 0


def _region_from_args(args, table: DataTable | None):
    if getattr(args, "region", None):
        return load_region(args.region)
    if getattr(args, "box", None):
        from .region import And, Interval
        intervals = []
        for part in args.box.split(","):
            name, _, span = part.partition("=")
            lo, _, hi = span.partition(":")
            intervals.append(Interval(name.strip(), float(lo), float(hi)))
        return And(tuple(intervals))
    raise ParaspaceError("need --region FILE or --box 'x=lo:hi,...'")


def cmd_sample(args) -> int:
    region = _region_from_args(args, None)
    levels = {}
    for part in (args.levels.split(",") if args.levels else []):
        name, _, k = part.partition("=")
        levels[name.strip()] = int(k)
    request = sampling.SampleRequest(region, count=args.count, method=args.method,
                                     seed=args.seed, levels=levels)
    points = sampling.sample(request)
    if args.project:
        project, folder = _load(args)
        ids = project.table.append_rows(points)
        save_project(project, folder)
        print(f"appended {len(ids)} rows ({ids[0]}..{ids[-1]})" if ids
              else "appended 0 rows")
    else:
        names = sorted({n for p in points for n in p})
        sys.stdout.write(",".join(names) + "\n")
        for p in points:
            sys.stdout.write(",".join(repr(p[n]) for n in names) + "\n")
    return 0


def cmd_run(args) -> int:
    project, folder = _load(args)
    if not project.nodes:
        raise NodeUnavailable("project has no compute node configured; run init --node-cmd")
    name = args.node or project.nodes[0].name
    config = project.node(name)
    if args.rows:
        row_ids = [int(r) for r in args.rows.split(",")]
    else:
        row_ids = [r.id for r in project.table.rows if r.status is RowStatus.PENDING]
    clients = [open_client(config, folder) for _ in range(max(1, args.workers))]
    done = failed = 0
    try:
        for result in batch_execute(WorkerPool(clients), project.table, row_ids):
            if result.status == "ok":
                done += 1
            else:
                failed += 1
    finally:
        for client in clients:
            client.close()
    save_project(project, folder)
    print(f"computed {done} rows, {failed} failed, of {len(row_ids)}")
    return 0


def cmd_feature(args) -> int:
    project, folder = _load(args)
    table = project.table
    column = args.column or args.feature or args.name
    if args.expr:
        table.add_derived_variable(column, args.expr)
        print(f"derived column {column!r} = {args.expr}")
    else:
        from .table import DerivedDef
        name = args.node or project.nodes[0].name
        client = open_client(project.node(name), folder)
        try:
            if not table.has_variable(column):
                table.add_derived_variable(
                    column, DerivedDef(node=name, feature=args.feature))
            for row in table.rows:
                params = {p.name: row.values[p.name]
                          for p in client.descriptor.parameters
                          if p.name in row.values}
                try:
                    value = client.compute_feature(args.feature, params)
                except ParaspaceError as exc:
                    row.flag(f"{column}: {exc}")
                    continue
                table.set_value(row.id, column, value)
        finally:
            client.close()
        print(f"computed feature {args.feature!r} into column {column!r} "
              f"for {len(table.rows)} rows")
    save_project(project, folder)
    return 0


def cmd_embed(args) -> int:
    project, folder = _load(args)
    columns = [c.strip() for c in args.columns.split(",")]
    weights = None
    if args.weights and args.weights != "auto":
        weights = tuple(float(w) for w in args.weights.split(","))
    elif args.weights == "auto":
        metric = analysis.combine_features(project.table, columns)
        weights = metric.weights
    spec = analysis.AffinitySpec(
        columns=tuple(columns), weights=weights, kernel=args.kernel,
        sigma=args.sigma,
        normalization=frozenset(
            s for s in (args.normalize.split(",") if args.normalize else []) if s))
    result = analysis.embed(project.table, None, spec)
    analysis.apply_embedding(project.table, result)
    project.embeddings[args.name] = spec
    save_project(project, folder)
    if args.spectrum_out:
        with open(args.spectrum_out, "w", encoding="utf-8") as fh:
            fh.write("index,eigenvalue\n")
            for i, value in enumerate(result.eigenvalues, start=1):
                fh.write(f"{i},{float(value)!r}\n")
    top = ", ".join(f"{v:.4g}" for v in result.eigenvalues[:4])
    print(f"embedded {len(result.row_ids)} rows "
          f"(dropped {len(result.dropped_ids)}); leading eigenvalues: {top}")
    return 0


def cmd_label(args) -> int:
    project, folder = _load(args)
    table = project.table
    if not table.has_variable(args.column):
        table.add_variable(Variable(args.column, Role.LABEL))
    if args.rows:
        ids = [int(r) for r in args.rows.split(",")]
    else:
        ids = sorted(table.filter(_region_from_args(args, table)))
    updated = table.set_labels(ids, args.column, args.label)
    save_project(project, folder)
    print(f"labeled {updated} rows {args.label!r} in {args.column!r}")
    return 0


def cmd_summarize(args) -> int:
    project, _folder = _load(args)
    factors = [f.strip() for f in args.factors.split(",")] if args.factors else None
    summary = analysis.summarize_cluster(project.table, args.column, args.label,
                                         factors)
    print(f"cluster {summary.label!r}: {summary.size} rows")
    for name, extent in summary.factors.items():
        print(f"  {name}: [{extent.min:.6g}, {extent.max:.6g}] "
              f"spread={extent.spread:.3f} {extent.hint}")
    return 0


def cmd_export(args) -> int:
    project, _folder = _load(args)
    text = export_csv(project.table)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_serve(args) -> int:
    from .service import serve
    serve(args.home or os.environ.get("PARASPACE_HOME", "."),
          host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paraspace", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a project folder")
    p.add_argument("--project", required=True)
    p.add_argument("--name")
    p.add_argument("--node-cmd", help="worker command to spawn, e.g. "
                   "'python3 -m paraspace.workers.sine'")
    p.add_argument("--node-name")
    p.add_argument("--var", action="append", help="extra variable name:role[:default]")
    p.set_defaults(fn=cmd_init)

    p = sub.add_parser("sample", help="generate points in a region")
    p.add_argument("--project")
    p.add_argument("--region", help="path to a .region.json file")
    p.add_argument("--box", help="inline box 'x=lo:hi,y=lo:hi'")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", default="uniform",
                   choices=["uniform", "grid", "halton"])
    p.add_argument("--levels", help="grid levels 'x=3,y=5'")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("run", help="execute pending rows on a compute node")
    p.add_argument("--project", required=True)
    p.add_argument("--node")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--rows", help="comma-separated row ids (default: all pending)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("feature", help="derive a column from a node feature or expression")
    p.add_argument("--project", required=True)
    p.add_argument("--node")
    p.add_argument("--feature", help="node feature name")
    p.add_argument("--expr", help="arithmetic expression over columns")
    p.add_argument("--name", help="column name for --expr")
    p.add_argument("--column", help="column name (defaults to the feature name)")
    p.set_defaults(fn=cmd_feature)

    p = sub.add_parser("embed", help="similarity embedding into embed_x/embed_y")
    p.add_argument("--project", required=True)
    p.add_argument("--columns", required=True)
    p.add_argument("--weights", help="'auto' or comma-separated numbers")
    p.add_argument("--kernel", default="dot_product",
                   choices=["dot_product", "gaussian"])
    p.add_argument("--sigma", type=float)
    p.add_argument("--normalize", default="sphere",
                   help="comma-set from center,sphere,l1_row; '' for none")
    p.add_argument("--name", default="embedding")
    p.add_argument("--spectrum-out", help="write the eigenvalue spectrum as CSV")
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("label", help="assign a cluster label to rows")
    p.add_argument("--project", required=True)
    p.add_argument("--column", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--region", help="label rows inside this region file")
    p.add_argument("--box", help="inline box 'x=lo:hi,...'")
    p.add_argument("--rows", help="comma-separated row ids")
    p.set_defaults(fn=cmd_label)

    p = sub.add_parser("summarize", help="factor extents of a labeled cluster")
    p.add_argument("--project", required=True)
    p.add_argument("--column", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--factors")
    p.set_defaults(fn=cmd_summarize)

    p = sub.add_parser("export", help="write the table as CSV")
    p.add_argument("--project", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--home", help="projects root (default PARASPACE_HOME or .)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8722)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except ParaspaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return type(exc).exit_code
    except BrokenPipeError:
        # stdout consumer (head, less) went away; not an error
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return 0
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
