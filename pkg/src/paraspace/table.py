"""Relational model of simulation runs: one row per configuration, one column
per variable.

Factors are the simulation inputs, responses come back from a compute node,
derived columns are computed from either (expressions here, features via a
node), labels are user-assigned strings, and embedding columns hold layout
coordinates.  Mutations must go through a single writer; snapshots handed to
readers are not mutated in place.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateVariable,
    ExpressionError,
    InvalidValue,
    UnknownRow,
    UnknownVariable,
)
from .expressions import Expression
from .region import RegionSpec, contains_batch, referenced_vars

UNLABELED = "unlabeled"

RESERVED_COLUMNS = ("_row_id", "_status", "_artifact", "_flags")


class Role(str, Enum):
    FACTOR = "factor"
    RESPONSE = "response"
    DERIVED = "derived"
    LABEL = "label"
    EMBEDDING = "embedding"


class RowStatus(str, Enum):
    PENDING = "pending"
    COMPUTED = "computed"
    FAILED = "failed"


@dataclass
class Variable:
    name: str
    role: Role
    units: str | None = None
    description: str | None = None
    default: float | None = None

    def __post_init__(self):
        self.role = Role(self.role)
        if self.default is not None and self.role is not Role.FACTOR:
            raise InvalidValue(f"default only applies to factors, not {self.name!r}")
        if self.name in RESERVED_COLUMNS:
            raise InvalidValue(f"{self.name!r} is a reserved column name")


@dataclass
class Configuration:
    """One run: input point plus whatever has been computed for it so far."""

    id: int
    values: dict = field(default_factory=dict)
    status: RowStatus = RowStatus.PENDING
    artifact_ref: str | None = None
    flags: list[str] = field(default_factory=list)

    def flag(self, note: str) -> None:
        if note not in self.flags:
            self.flags.append(note)


@dataclass
class DimensionGroup:
    name: str
    members: list[str] = field(default_factory=list)


@dataclass
class DerivedDef:
    """Where a derived column's values come from: an expression over other
    columns, or a named feature of a compute node."""

    expr: str | None = None
    node: str | None = None
    feature: str | None = None


def _check_scalar(name: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise InvalidValue(f"value for {name!r} is not numeric: {value!r}") from None
    if not math.isfinite(v):
        raise InvalidValue(f"value for {name!r} is not finite: {value!r}")
    return v


class DataTable:
    def __init__(self, variables: Sequence[Variable] = ()):
        self.variables: list[Variable] = []
        self.rows: list[Configuration] = []
        self.next_row_id = 0
        self.derived_defs: dict[str, DerivedDef] = {}
        self._vector_lengths: dict[str, int] = {}
        for v in variables:
            self._add_variable(v)

    # -- variables ------------------------------------------------------

    def _add_variable(self, variable: Variable) -> Variable:
        if any(v.name == variable.name for v in self.variables):
            raise DuplicateVariable(f"variable {variable.name!r} already exists")
        self.variables.append(variable)
        if variable.role is Role.LABEL:
            for row in self.rows:
                row.values.setdefault(variable.name, UNLABELED)
        return variable

    def add_variable(self, variable: Variable) -> Variable:
        return self._add_variable(variable)

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise UnknownVariable(f"no variable named {name!r}")

    def has_variable(self, name: str) -> bool:
        return any(v.name == name for v in self.variables)

    @property
    def variable_names(self) -> list[str]:
        return [v.name for v in self.variables]

    @property
    def factors(self) -> list[Variable]:
        return [v for v in self.variables if v.role is Role.FACTOR]

    def by_role(self, role: Role) -> list[Variable]:
        return [v for v in self.variables if v.role is role]

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @property
    def n_responses(self) -> int:
        return sum(v.role in (Role.RESPONSE, Role.DERIVED) for v in self.variables)

    # -- rows -------------------------------------------------------------

    def row(self, row_id: int) -> Configuration:
        for r in self.rows:
            if r.id == row_id:
                return r
        raise UnknownRow(f"no row with id {row_id}")

    def append_rows(self, points: Sequence[Mapping[str, float]]) -> list[int]:
        """Add pending configurations; defaults fill factors a point omits."""
        factors = self.factors
        prepared = []
        for point in points:
            for name in point:
                if not self.has_variable(name):
                    raise UnknownVariable(f"no variable named {name!r}")
            values = {}
            for f in factors:
                if f.name in point:
                    values[f.name] = _check_scalar(f.name, point[f.name])
                elif f.default is not None:
                    values[f.name] = float(f.default)
                else:
                    raise InvalidValue(
                        f"point omits factor {f.name!r} which has no default")
            for v in self.variables:
                if v.role is Role.LABEL:
                    values[v.name] = UNLABELED
            prepared.append(values)
        ids = []
        for values in prepared:
            row = Configuration(id=self.next_row_id, values=values)
            self.next_row_id += 1
            self.rows.append(row)
            ids.append(row.id)
        return ids

    def set_value(self, row_id: int, name: str, value) -> None:
        var = self.variable(name)
        row = self.row(row_id)
        if isinstance(value, (list, tuple, np.ndarray)):
            vec = [float(x) for x in value]
            expect = self._vector_lengths.setdefault(name, len(vec))
            if len(vec) != expect:
                row.status = RowStatus.FAILED
                row.flag(f"{name}: vector length {len(vec)} != {expect}")
                return
            row.values[name] = vec
        elif value is None:
            row.values.pop(name, None)
        elif var.role is Role.LABEL:
            row.values[name] = str(value)
        else:
            row.values[name] = _check_scalar(name, value)

    def is_vector(self, name: str) -> bool:
        return name in self._vector_lengths

    # -- derived columns ----------------------------------------------------

    def add_derived_variable(self, name: str, source: str | DerivedDef,
                             units: str | None = None,
                             description: str | None = None) -> Variable:
        """New derived column from an arithmetic expression or a node feature.

        Expression columns are evaluated immediately for existing rows and on
        recompute(); rows where evaluation fails keep the cell missing and get
        flagged.  Node-feature columns fill when features are applied.
        """
        if isinstance(source, str):
            definition = DerivedDef(expr=source)
        else:
            definition = source
        if definition.expr is not None:
            expr = Expression(definition.expr)
            for col in expr.columns:
                if not self.has_variable(col):
                    raise UnknownVariable(f"expression references unknown column {col!r}")
        var = self._add_variable(Variable(name, Role.DERIVED, units, description))
        self.derived_defs[name] = definition
        if definition.expr is not None:
            self.recompute_derived(name)
        return var

    def recompute_derived(self, name: str) -> None:
        definition = self.derived_defs.get(name)
        if definition is None or definition.expr is None:
            return
        expr = Expression(definition.expr)
        for row in self.rows:
            try:
                row.values[name] = expr.evaluate(row.values)
            except ExpressionError as exc:
                row.values.pop(name, None)
                row.flag(f"{name}: {exc}")

    # -- filtering ------------------------------------------------------------

    def filter(self, region: RegionSpec) -> set[int]:
        """Row ids whose tuples satisfy the predicate.

        Rows missing any referenced value (or holding a vector there) are
        excluded rather than erred on, so partial tables stay usable.
        """
        names = sorted(referenced_vars(region))
        for name in names:
            self.variable(name)
        if not self.rows:
            return set()
        usable = []
        for row in self.rows:
            vals = []
            ok = True
            for name in names:
                v = row.values.get(name)
                if not isinstance(v, (int, float)):
                    ok = False
                    break
                vals.append(v)
            if ok:
                usable.append((row.id, vals))
        if not usable:
            return set()
        if names:
            cols = {
                name: np.array([vals[i] for _, vals in usable], dtype=float)
                for i, name in enumerate(names)
            }
        else:
            cols = {"_": np.zeros(len(usable))}
        mask = contains_batch(region, cols)
        return {row_id for (row_id, _), hit in zip(usable, mask) if hit}

    # -- labels ----------------------------------------------------------------

    def set_labels(self, row_ids: Iterable[int], label_column: str, label: str) -> int:
        var = self.variable(label_column)
        if var.role is not Role.LABEL:
            raise UnknownVariable(f"{label_column!r} is not a label column")
        ids = list(row_ids)
        rows = [self.row(i) for i in ids]
        for row in rows:
            row.values[label_column] = str(label)
        return len(rows)

    def rows_with_label(self, label_column: str, label: str) -> list[Configuration]:
        var = self.variable(label_column)
        if var.role is not Role.LABEL:
            raise UnknownVariable(f"{label_column!r} is not a label column")
        return [r for r in self.rows if r.values.get(label_column) == label]

    # -- column access -----------------------------------------------------------

    def column(self, name: str, row_ids: Iterable[int] | None = None) -> list:
        self.variable(name)
        rows = self.rows if row_ids is None else [self.row(i) for i in row_ids]
        return [r.values.get(name) for r in rows]

    def column_range(self, name: str) -> tuple[float, float] | None:
        vals = [v for v in self.column(name) if isinstance(v, (int, float))]
        if not vals:
            return None
        return (min(vals), max(vals))


def create_table(variables: Sequence[Variable]) -> DataTable:
    return DataTable(variables)


# --- CSV ---------------------------------------------------------------------
#
# Interface format: header row = variable names, "NA" for missing, label cells
# quoted strings, vector cells a JSON array literal in one field.  Project
# files prepend _row_id/_status/_artifact/_flags bookkeeping columns; import
# accepts both shapes.

def _quote(cell: str) -> str:
    return '"' + cell.replace('"', '""') + '"'


def export_csv(table: DataTable, stream=None, include_meta: bool = False) -> str | None:
    own = stream is None
    if own:
        stream = io.StringIO()
    names = table.variable_names
    header = list(RESERVED_COLUMNS) + names if include_meta else names
    stream.write(",".join(header) + "\n")
    roles = {v.name: v.role for v in table.variables}
    for row in table.rows:
        record = []
        if include_meta:
            record += [str(row.id), row.status.value, row.artifact_ref or "",
                       _quote(json.dumps(row.flags)) if row.flags else ""]
        for name in names:
            v = row.values.get(name)
            if v is None:
                record.append("NA")
            elif isinstance(v, list):
                record.append(_quote(json.dumps(v)))
            elif roles[name] is Role.LABEL:
                record.append(_quote(str(v)))
            else:
                record.append(repr(float(v)))
        stream.write(",".join(record) + "\n")
    if own:
        return stream.getvalue()
    return None


def import_csv(text_or_stream, variables: Sequence[Variable]) -> DataTable:
    """Rebuild a table from CSV against a declared variable list."""
    if isinstance(text_or_stream, str):
        text_or_stream = io.StringIO(text_or_stream)
    reader = csv.reader(text_or_stream)
    try:
        header = next(reader)
    except StopIteration:
        raise InvalidValue("CSV is empty, expected a header row") from None
    has_meta = header[: len(RESERVED_COLUMNS)] == list(RESERVED_COLUMNS)
    names = header[len(RESERVED_COLUMNS):] if has_meta else header
    table = DataTable(variables)
    declared = set(table.variable_names)
    for name in names:
        if name not in declared:
            raise UnknownVariable(f"CSV column {name!r} is not a declared variable")
    roles = {v.name: v.role for v in table.variables}
    for record in reader:
        if not record:
            continue
        meta, cells = ([], record)
        if has_meta:
            meta, cells = record[: len(RESERVED_COLUMNS)], record[len(RESERVED_COLUMNS):]
        values = {}
        for name, cell in zip(names, cells):
            if cell == "NA":
                continue
            if cell.startswith("["):
                vec = json.loads(cell)
                values[name] = [float(x) for x in vec]
                table._vector_lengths.setdefault(name, len(vec))
            elif roles[name] is Role.LABEL:
                values[name] = cell
            else:
                values[name] = float(cell)
        row = Configuration(id=int(meta[0]) if has_meta else table.next_row_id,
                            values=values)
        if has_meta:
            row.status = RowStatus(meta[1])
            row.artifact_ref = meta[2] or None
            row.flags = json.loads(meta[3]) if meta[3] else []
        table.rows.append(row)
        table.next_row_id = max(table.next_row_id, row.id + 1)
    return table
