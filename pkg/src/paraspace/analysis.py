"""Similarity analysis of computed configurations.

Feature columns become row vectors, row vectors become an affinity matrix
(dot products or a Gaussian kernel), the matrix is normalized to unit
diagonal, and its second and third eigenpairs place every configuration on
the screen so that proximity encodes outcome similarity.  The same
decomposition run on the transposed product gives principal components, and
cluster extent summaries map labeled groups back to input-parameter ranges.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .errors import (
    EmbeddingLimitExceeded,
    EmptyCluster,
    EmptySelection,
    InvalidForL1,
    InvalidMatrix,
    InvalidValue,
    UnknownVariable,
    ZeroNormRow,
)
from .region import Ball
from .table import DataTable, DerivedDef, Role, Variable

MAX_EMBED_ROWS = 5000
SPREAD_THRESHOLD = 0.8

NORMALIZATIONS = ("center", "sphere", "l1_row")


@dataclass(frozen=True)
class AffinitySpec:
    columns: tuple[str, ...]
    weights: tuple[float, ...] | None = None
    kernel: str = "dot_product"  # dot_product | gaussian
    sigma: float | None = None  # gaussian width; None = median pairwise distance
    normalization: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "normalization", frozenset(self.normalization))
        if not self.columns:
            raise InvalidValue("affinity spec needs at least one feature column")
        if self.kernel not in ("dot_product", "gaussian"):
            raise InvalidValue(f"unknown kernel {self.kernel!r}")
        if self.weights is not None:
            if len(self.weights) != len(self.columns):
                raise InvalidValue("one weight per feature column")
            if any(w < 0 for w in self.weights):
                raise InvalidValue("weights must be >= 0")
        if self.sigma is not None and not self.sigma > 0:
            raise InvalidValue("sigma must be > 0")
        unknown = self.normalization - set(NORMALIZATIONS)
        if unknown:
            raise InvalidValue(f"unknown normalizations {sorted(unknown)}")
        if {"sphere", "l1_row"} <= self.normalization:
            raise InvalidValue("sphere and l1_row are mutually exclusive")


@dataclass
class AffinityResult:
    matrix: np.ndarray
    row_ids: list[int]
    dropped_ids: list[int]
    sigma: float | None = None


@dataclass
class EmbeddingResult:
    row_ids: list[int]
    coords: np.ndarray  # m x 2, columns lambda2*v2 and lambda3*v3
    eigenvalues: np.ndarray  # descending
    spec: AffinitySpec | None = None
    degenerate_axes: bool = False
    dropped_ids: list[int] = field(default_factory=list)


@dataclass
class FactorExtent:
    min: float
    max: float
    spread: float
    hint: str  # spread_out | localized


@dataclass
class ClusterSummary:
    label: str
    size: int
    factors: dict[str, FactorExtent]


# --- feature extraction -----------------------------------------------------

def feature_matrix(table: DataTable, row_ids: Iterable[int] | None,
                   columns: Sequence[str],
                   weights: Sequence[float] | None = None
                   ) -> tuple[np.ndarray, list[int], list[int]]:
    """Stack per-row feature vectors; vector columns expand in place.

    Rows missing any referenced value are dropped and reported, not erred on.
    """
    for name in columns:
        table.variable(name)
    ids = [r.id for r in table.rows] if row_ids is None else list(row_ids)
    used, dropped, vectors = [], [], []
    for row_id in ids:
        row = table.row(row_id)
        parts = []
        for name in columns:
            v = row.values.get(name)
            if isinstance(v, (int, float)):
                parts.append([float(v)])
            elif isinstance(v, list):
                parts.append([float(x) for x in v])
            else:
                parts = None
                break
        if parts is None:
            dropped.append(row_id)
        else:
            used.append(row_id)
            vectors.append([x for part in parts for x in part])
    if used:
        lengths = {len(v) for v in vectors}
        if len(lengths) != 1:
            raise InvalidValue("inconsistent feature vector lengths across rows")
    X = np.array(vectors, dtype=float) if used else np.empty((0, 0))
    if weights is not None and used:
        expanded = []
        for name, w in zip(columns, weights):
            block = table._vector_lengths.get(name, 1)
            expanded += [w] * block
        X = X * np.asarray(expanded)
    return X, used, dropped


# --- normalization ------------------------------------------------------------

def center(X: np.ndarray) -> np.ndarray:
    """Subtract per-column means so each feature averages to zero."""
    return X - X.mean(axis=0, keepdims=True)


def l1_normalize_rows(X: np.ndarray) -> np.ndarray:
    """Scale nonnegative rows to unit sum (projection onto the 1-norm face)."""
    if np.any(X < 0):
        raise InvalidForL1("l1 row normalization requires nonnegative entries")
    sums = X.sum(axis=1, keepdims=True)
    if np.any(sums == 0):
        bad = [int(i) for i in np.flatnonzero(sums[:, 0] == 0)]
        raise ZeroNormRow(f"rows {bad} sum to zero")
    return X / sums


def sphere(A: np.ndarray) -> np.ndarray:
    """Rescale an affinity matrix to unit diagonal: C_ij = A_ij / sqrt(A_ii A_jj).

    Entries of the result read as cosine similarity, so duplicated inputs hit
    exactly 1.
    """
    diag = np.diagonal(A).copy()
    if np.any(diag <= 0):
        bad = [int(i) for i in np.flatnonzero(diag <= 0)]
        raise ZeroNormRow(f"rows {bad} have non-positive self-affinity")
    scale = 1.0 / np.sqrt(diag)
    C = A * scale[:, None] * scale[None, :]
    np.fill_diagonal(C, 1.0)
    return C


def normalize(matrix: np.ndarray, ops: Iterable[str]) -> np.ndarray:
    """Apply the named normalizations; center/l1_row read the matrix as data
    rows, sphere reads it as an affinity matrix."""
    out = np.asarray(matrix, dtype=float)
    ops = set(ops)
    unknown = ops - set(NORMALIZATIONS)
    if unknown:
        raise InvalidValue(f"unknown normalizations {sorted(unknown)}")
    if "center" in ops:
        out = center(out)
    if "l1_row" in ops:
        out = l1_normalize_rows(out)
    if "sphere" in ops:
        out = sphere(out)
    return out


# --- affinity ------------------------------------------------------------------

def default_sigma(X: np.ndarray) -> float:
    """Gaussian width heuristic: median pairwise distance of the rows."""
    if len(X) < 2:
        return 1.0
    dists = pdist(X)
    med = float(np.median(dists))
    if med > 0:
        return med
    nonzero = dists[dists > 0]
    return float(nonzero.mean()) if nonzero.size else 1.0


def build_affinity(table: DataTable, row_ids: Iterable[int] | None,
                   spec: AffinitySpec) -> AffinityResult:
    """Affinity matrix over the selected rows' feature vectors.

    Weights scale columns before the kernel; centering and l1 row scaling
    apply to the data side, sphering to the finished matrix.
    """
    X, used, dropped = feature_matrix(table, row_ids, spec.columns, spec.weights)
    if not used:
        raise EmptySelection("no rows with complete feature values")
    if "center" in spec.normalization:
        X = center(X)
    if "l1_row" in spec.normalization:
        X = l1_normalize_rows(X)
    sigma = None
    if spec.kernel == "dot_product":
        A = X @ X.T
    else:
        sigma = spec.sigma if spec.sigma is not None else default_sigma(X)
        norms = (X * X).sum(axis=1)
        sq = np.maximum(norms[:, None] + norms[None, :] - 2.0 * (X @ X.T), 0.0)
        A = np.exp(-sq / (2.0 * sigma * sigma))
        np.fill_diagonal(A, 1.0)
    A = 0.5 * (A + A.T)  # blocked matmul can leave ~1e-16 asymmetry
    return AffinityResult(A, used, dropped, sigma)


# --- spectral embedding ---------------------------------------------------------

def spectral_embed(C: np.ndarray, row_ids: Sequence[int] | None = None,
                   spec: AffinitySpec | None = None,
                   max_rows: int = MAX_EMBED_ROWS) -> EmbeddingResult:
    """Eigendecompose a symmetric matrix and map rows to the plane.

    Coordinates are the second and third eigenpairs scaled by their
    eigenvalues; each eigenvector is flipped so its largest-magnitude
    component is positive, keeping layouts stable across reruns.  Fewer than
    three rows zero-pad the missing axes.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got {C.shape}")
    m = C.shape[0]
    if m > max_rows:
        raise EmbeddingLimitExceeded(
            f"{m} rows exceeds the {max_rows}-row embedding limit; "
            "embed a sub-selection instead")
    scale = max(1.0, float(np.abs(C).max()))
    if float(np.abs(C - C.T).max()) > 1e-8 * scale:
        raise InvalidMatrix("matrix is not symmetric")

    eigenvalues, vectors = np.linalg.eigh(C)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]
    for j in range(vectors.shape[1]):
        i = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[i, j] < 0:
            vectors[:, j] = -vectors[:, j]

    coords = np.zeros((m, 2))
    if m >= 2:
        coords[:, 0] = eigenvalues[1] * vectors[:, 1]
    if m >= 3:
        coords[:, 1] = eigenvalues[2] * vectors[:, 2]
    degenerate = bool(m >= 3 and math.isclose(eigenvalues[1], eigenvalues[2],
                                              rel_tol=1e-9, abs_tol=1e-12))
    return EmbeddingResult(
        row_ids=list(row_ids) if row_ids is not None else list(range(m)),
        coords=coords,
        eigenvalues=eigenvalues,
        spec=spec,
        degenerate_axes=degenerate,
    )


def embed(table: DataTable, row_ids: Iterable[int] | None,
          spec: AffinitySpec, max_rows: int = MAX_EMBED_ROWS) -> EmbeddingResult:
    """Full pipeline: features -> affinity -> normalization -> eigen layout."""
    affinity = build_affinity(table, row_ids, spec)
    C = affinity.matrix
    if "sphere" in spec.normalization:
        C = sphere(C)
    result = spectral_embed(C, affinity.row_ids, spec, max_rows=max_rows)
    result.dropped_ids = affinity.dropped_ids
    return result


def apply_embedding(table: DataTable, result: EmbeddingResult,
                    x_column: str = "embed_x", y_column: str = "embed_y") -> None:
    """Materialize embedding coordinates as two table columns."""
    for name in (x_column, y_column):
        if not table.has_variable(name):
            table.add_variable(Variable(name, Role.EMBEDDING))
    placed = set(result.row_ids)
    for row in table.rows:
        if row.id not in placed:
            row.values.pop(x_column, None)
            row.values.pop(y_column, None)
    for row_id, (x, y) in zip(result.row_ids, result.coords):
        table.set_value(row_id, x_column, float(x))
        table.set_value(row_id, y_column, float(y))


# --- PCA ---------------------------------------------------------------------

@dataclass
class PcaResult:
    components: np.ndarray  # rows are orthonormal directions
    variances: np.ndarray  # sample variance along each component
    raw_eigenvalues: np.ndarray  # eigenvalues of the centred Gram matrix
    mean: np.ndarray
    row_ids: list[int]


def pca(table: DataTable, row_ids: Iterable[int] | None,
        columns: Sequence[str]) -> PcaResult:
    """Principal axes of the selected rows: the transposed-product twin of the
    spectral embedding, so the nonzero spectra of the two agree."""
    X, used, _dropped = feature_matrix(table, row_ids, columns)
    if len(used) < 2:
        raise EmptySelection("pca needs at least two rows with complete features")
    mean = X.mean(axis=0)
    Xc = X - mean
    gram = Xc.T @ Xc
    eigenvalues, vectors = np.linalg.eigh(gram)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.maximum(eigenvalues[order], 0.0)
    vectors = vectors[:, order]
    for j in range(vectors.shape[1]):
        i = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[i, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return PcaResult(
        components=vectors.T,
        variances=eigenvalues / (len(used) - 1),
        raw_eigenvalues=eigenvalues,
        mean=mean,
        row_ids=used,
    )


# --- combined feature metrics ---------------------------------------------------

@dataclass
class FeatureMetric:
    """Weighted Euclidean distance over feature columns, usable as the metric
    of a ball region or to derive per-row distance columns."""

    columns: tuple[str, ...]
    weights: tuple[float, ...]

    def distance(self, a: Mapping[str, float], b: Mapping[str, float]) -> float:
        total = 0.0
        for name, w in zip(self.columns, self.weights):
            if name not in a or name not in b:
                raise UnknownVariable(f"point lacks a value for {name!r}")
            total += (w * (float(a[name]) - float(b[name]))) ** 2
        return math.sqrt(total)

    def ball(self, center: Mapping[str, float], radius: float, p: float = 2.0) -> Ball:
        centers = tuple(float(center[name]) for name in self.columns)
        return Ball(self.columns, centers, radius, p, self.weights)

    def add_distance_column(self, table: DataTable, name: str,
                            anchor: Mapping[str, float]) -> None:
        """Materialize distance-to-anchor as a derived column (values only;
        the anchor is not tracked, recompute by calling again)."""
        table.add_derived_variable(name, DerivedDef())
        for row in table.rows:
            try:
                table.set_value(row.id, name, self.distance(row.values, anchor))
            except UnknownVariable:
                continue


def combine_features(table: DataTable, columns: Sequence[str],
                     weights: Sequence[float] | None = None) -> FeatureMetric:
    """Build the metric d(u, v) = ||W (u - v)||_2 over the given columns.

    Default weights equalize dynamic ranges (1 / (max - min) per column), so
    rescaling one column's units does not change distances once weights are
    recomputed.  Constant columns get weight zero and a warning.
    """
    for name in columns:
        table.variable(name)
    if weights is not None:
        if len(weights) != len(columns):
            raise InvalidValue("one weight per column")
        if any(w < 0 for w in weights):
            raise InvalidValue("weights must be >= 0")
        return FeatureMetric(tuple(columns), tuple(float(w) for w in weights))
    auto = []
    for name in columns:
        extent = table.column_range(name)
        span = (extent[1] - extent[0]) if extent else 0.0
        if span == 0.0:
            warnings.warn(f"column {name!r} is constant; weight set to 0",
                          stacklevel=2)
            auto.append(0.0)
        else:
            auto.append(1.0 / span)
    return FeatureMetric(tuple(columns), tuple(auto))


# --- cluster summaries -------------------------------------------------------------

def summarize_cluster(table: DataTable, label_column: str, label: str,
                      factors: Sequence[str] | None = None,
                      factor_ranges: Mapping[str, tuple[float, float]] | None = None,
                      spread_threshold: float = SPREAD_THRESHOLD) -> ClusterSummary:
    """Extent of one labeled cluster in input-parameter space.

    Spread is the cluster's share of each factor's sampled range; factors the
    cluster spreads across are inert for steering behaviour, localized ones
    are the knobs that matter.
    """
    rows = table.rows_with_label(label_column, label)
    if not rows:
        raise EmptyCluster(f"no rows labeled {label!r} in {label_column!r}")
    names = list(factors) if factors else [v.name for v in table.factors]
    extents: dict[str, FactorExtent] = {}
    for name in names:
        table.variable(name)
        values = [r.values[name] for r in rows
                  if isinstance(r.values.get(name), (int, float))]
        if not values:
            continue
        lo, hi = min(values), max(values)
        if factor_ranges and name in factor_ranges:
            rlo, rhi = factor_ranges[name]
        else:
            extent = table.column_range(name)
            rlo, rhi = extent if extent else (lo, hi)
        span = rhi - rlo
        spread = (hi - lo) / span if span > 0 else 0.0
        hint = "spread_out" if spread > spread_threshold else "localized"
        extents[name] = FactorExtent(lo, hi, spread, hint)
    return ClusterSummary(label=label, size=len(rows), factors=extents)
