"""Diverse subset selection over proposal pools.

Four distances over activation patterns, max-min greedy construction, k-means
medoid selection, and splitting concept-set samples into single-concept
proposals. All selectors are deterministic given the pool order and a seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .errors import (DegenerateInputError, InputError, ShapeError,
                     UnsupportedMetricError)
from .hmc import ProposalPool
from .model import SCHEMA_VERSION

__all__ = [
    "MetricKind", "ProposalSet", "SingleConceptProposal",
    "dist_euclidean", "dist_cosine", "dist_absolute", "dist_percent",
    "greedy_select", "kmeans_select", "split_to_singles",
    "selection_matrix",
]


class MetricKind(str, Enum):
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"
    ABSOLUTE = "absolute"
    PERCENT = "percent"

    @classmethod
    def parse(cls, value) -> "MetricKind":
        if isinstance(value, MetricKind):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(f"unknown metric {value!r}; expected one of "
                             f"{[m.value for m in cls]}") from None


_METRIC_ID = {MetricKind.EUCLIDEAN: 0, MetricKind.COSINE: 1,
              MetricKind.ABSOLUTE: 2, MetricKind.PERCENT: 3}


@dataclass(frozen=True)
class SingleConceptProposal:
    """One concept column lifted out of a posterior sample."""

    activation: np.ndarray            # N
    origin: tuple[int, int]           # (pool sample index, concept column)

    def __post_init__(self):
        a = np.ascontiguousarray(self.activation, dtype=np.float64)
        if a.ndim != 1:
            raise ShapeError("single-concept activation must be a vector")
        a.setflags(write=False)
        object.__setattr__(self, "activation", a)
        object.__setattr__(self, "origin", (int(self.origin[0]), int(self.origin[1])))


@dataclass(frozen=True)
class ProposalSet:
    """Indices of the selected diverse subset, in selection (emission) order."""

    member_indices: tuple[int, ...]
    method: str                       # "greedy" | "kmeans"
    metric: MetricKind
    M: int
    seed: int
    origins: tuple = ()
    warning: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "member_indices", tuple(int(i) for i in self.member_indices))
        object.__setattr__(self, "metric", MetricKind.parse(self.metric))
        object.__setattr__(self, "origins", tuple(tuple(o) for o in self.origins))
        if len(set(self.member_indices)) != len(self.member_indices):
            raise InputError("selected members must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.member_indices)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "method": self.method,
                "metric": self.metric.value, "M": self.M, "seed": self.seed,
                "member_ids": list(self.member_indices),
                "origins": [list(o) for o in self.origins],
                "warning": self.warning}

    @classmethod
    def from_dict(cls, doc: dict) -> "ProposalSet":
        return cls(member_indices=tuple(doc["member_ids"]), method=doc["method"],
                   metric=doc["metric"], M=int(doc["M"]), seed=int(doc["seed"]),
                   origins=tuple(tuple(o) for o in doc.get("origins", [])),
                   warning=doc.get("warning"))


def save_proposal_set(ps: ProposalSet, path) -> None:
    with open(path, "w") as fh:
        json.dump(ps.to_dict(), fh)


def load_proposal_set(path) -> ProposalSet:
    with open(path) as fh:
        return ProposalSet.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Distances. Inputs are activation matrices or vectors of identical shape and
# are compared positionally after flattening.

def _flat_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a.ravel(), b.ravel()


def dist_euclidean(a, b) -> float:
    """Root of the summed squared differences over all entries."""
    x, y = _flat_pair(a, b)
    return float(np.sqrt(np.sum((x - y) ** 2)))


def dist_cosine(a, b) -> float:
    """1 - cosine similarity; 0 for parallel inputs, 1 for orthogonal ones."""
    x, y = _flat_pair(a, b)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        raise DegenerateInputError("cosine distance is undefined for zero-norm input")
    return float(1.0 - (x @ y) / (nx * ny))


def dist_absolute(a, b) -> float:
    """Sum of elementwise absolute differences."""
    x, y = _flat_pair(a, b)
    return float(np.sum(np.abs(x - y)))


def round_bits(a) -> np.ndarray:
    """Shared rounding rule: 0.5 and above rounds to 1."""
    return (np.asarray(a, dtype=np.float64) >= 0.5).astype(np.uint8)


def dist_percent(a, b) -> float:
    """Fraction of entries whose rounded values disagree."""
    x, y = _flat_pair(a, b)
    return float(np.mean(round_bits(x) != round_bits(y)))


DISTANCES = {MetricKind.EUCLIDEAN: dist_euclidean, MetricKind.COSINE: dist_cosine,
             MetricKind.ABSOLUTE: dist_absolute, MetricKind.PERCENT: dist_percent}


# ---------------------------------------------------------------------------
# Selection.

def _items_of(pool) -> list[np.ndarray]:
    if isinstance(pool, ProposalPool):
        return [s.activations for s in pool.samples]
    items = list(pool)
    if items and isinstance(items[0], SingleConceptProposal):
        return [p.activation for p in items]
    return [np.asarray(p, dtype=np.float64) for p in items]


def _origins_of(pool, indices) -> tuple:
    if isinstance(pool, ProposalPool):
        return tuple((int(i), -1) for i in indices)
    items = list(pool)
    if items and isinstance(items[0], SingleConceptProposal):
        return tuple(items[i].origin for i in indices)
    return tuple((int(i), -1) for i in indices)


def selection_matrix(pool, metric: MetricKind) -> tuple[np.ndarray, float]:
    """Flattened per-item rows in the metric's working representation.

    Returns (matrix, scale): cosine rows are l2-normalized, percent rows are
    rounded bits; scale divides absolute-sum distances (the element count for
    percent, 1 otherwise).
    """
    items = _items_of(pool)
    if not items:
        raise InputError("pool is empty")
    shape = items[0].shape
    for it in items:
        if it.shape != shape:
            raise ShapeError("pool items must share one shape")
    mat = np.ascontiguousarray(np.stack([it.ravel() for it in items]))
    metric = MetricKind.parse(metric)
    if metric == MetricKind.COSINE:
        norms = np.linalg.norm(mat, axis=1)
        if np.any(norms == 0.0):
            raise DegenerateInputError("cosine metric with an all-zero item")
        return mat / norms[:, None], 1.0
    if metric == MetricKind.PERCENT:
        return np.ascontiguousarray(round_bits(mat), dtype=np.float64), float(mat.shape[1])
    return mat, 1.0


def greedy_select(pool, M: int, metric, seed: int) -> ProposalSet:
    """Max-min greedy construction, seeded by one random member.

    Each step adds the candidate whose distance to its nearest selected member
    is largest; exact ties resolve to the lowest pool index. If M exceeds the
    pool size the whole pool is returned with a warning.
    """
    metric = MetricKind.parse(metric)
    mat, scale = selection_matrix(pool, metric)
    n = mat.shape[0]
    if M < 1:
        raise InputError("M must be positive")
    rng = np.random.default_rng(seed)
    first = int(rng.integers(n))

    warning = None
    target = M
    if M > n:
        warning = f"requested M={M} exceeds pool size {n}; returning the whole pool"
        target = n

    chosen = [first]
    metric_id = _METRIC_ID[metric]
    min_d = kernels.row_dists(mat, first, metric_id, scale)
    min_d[first] = -np.inf
    while len(chosen) < target:
        nxt = int(np.argmax(min_d))
        chosen.append(nxt)
        d = kernels.row_dists(mat, nxt, metric_id, scale)
        min_d = np.minimum(min_d, d)
        min_d[nxt] = -np.inf

    return ProposalSet(member_indices=tuple(chosen), method="greedy", metric=metric,
                       M=M, seed=seed, origins=_origins_of(pool, chosen),
                       warning=warning)


def _kmeans_plusplus(mat, k, rng):
    n = mat.shape[0]
    centers = np.empty((k, mat.shape[1]))
    centers[0] = mat[int(rng.integers(n))]
    d2 = np.sum((mat - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = mat[int(rng.integers(n))]
            continue
        centers[j] = mat[int(rng.choice(n, p=d2 / total))]
        d2 = np.minimum(d2, np.sum((mat - centers[j]) ** 2, axis=1))
    return centers


def _sq_dists(mat, centers):
    # |x-c|^2 via the gram trick; clip tiny negatives from cancellation
    g = mat @ centers.T
    x2 = np.sum(mat * mat, axis=1)[:, None]
    c2 = np.sum(centers * centers, axis=1)[None, :]
    return np.maximum(x2 + c2 - 2.0 * g, 0.0)


def kmeans_select(pool, M: int, metric, seed: int, max_iter: int = 100,
                  rel_tol: float = 1e-6) -> ProposalSet:
    """K-means (k = M) medoids: per cluster, the member nearest the centroid.

    Supports the euclidean and cosine metrics only; the cosine variant is
    spherical k-means (rows l2-normalized, then euclidean k-means). k-means++
    seeding; Lloyd iterations stop at ``max_iter`` or when inertia improves by
    less than ``rel_tol`` relatively. Members come back in cluster-index order.
    """
    metric = MetricKind.parse(metric)
    if metric not in (MetricKind.EUCLIDEAN, MetricKind.COSINE):
        raise UnsupportedMetricError(
            f"k-means selection supports euclidean and cosine, not {metric.value}")
    mat, _ = selection_matrix(pool, metric)
    n = mat.shape[0]
    if M < 1:
        raise InputError("M must be positive")
    rng = np.random.default_rng(seed)

    warning = None
    k = M
    if M > n:
        warning = f"requested M={M} exceeds pool size {n}; returning the whole pool"
        k = n

    centers, assign, d2 = lloyd_kmeans(mat, k, rng, max_iter, rel_tol)
    chosen = []
    for j in range(k):
        members = np.flatnonzero(assign == j)
        chosen.append(int(members[np.argmin(d2[members, j])]))

    return ProposalSet(member_indices=tuple(chosen), method="kmeans", metric=metric,
                       M=M, seed=seed, origins=_origins_of(pool, chosen),
                       warning=warning)


def lloyd_kmeans(mat, k, rng, max_iter: int = 100, rel_tol: float = 1e-6):
    """k-means++ seeded Lloyd iterations; returns (centers, assignment, sq-dists)."""
    n = mat.shape[0]
    centers = _kmeans_plusplus(mat, k, rng)
    prev_inertia = np.inf
    for _ in range(max_iter):
        d2 = _sq_dists(mat, centers)
        assign = np.argmin(d2, axis=1)
        # refill empty clusters with the point farthest from its centroid
        for j in range(k):
            if not np.any(assign == j):
                far = int(np.argmax(d2[np.arange(n), assign]))
                assign[far] = j
        inertia = float(np.sum(d2[np.arange(n), assign]))
        for j in range(k):
            centers[j] = mat[assign == j].mean(axis=0)
        if prev_inertia - inertia <= rel_tol * max(prev_inertia, 1e-30):
            break
        prev_inertia = inertia

    d2 = _sq_dists(mat, centers)
    assign = np.argmin(d2, axis=1)
    for j in range(k):
        if not np.any(assign == j):
            far = int(np.argmax(d2[np.arange(n), assign]))
            assign[far] = j
    return centers, assign, d2


def split_to_singles(pool: ProposalPool) -> list[SingleConceptProposal]:
    """Each sample's concept columns as individual proposals, exact duplicates dropped.

    Origins point back to (pool index, column); the first occurrence of a
    bit-identical activation vector wins.
    """
    seen: set[bytes] = set()
    out: list[SingleConceptProposal] = []
    for i, s in enumerate(pool.samples):
        acts = s.activations
        for k in range(acts.shape[1]):
            col = np.ascontiguousarray(acts[:, k])
            key = col.tobytes()
            if key in seen:
                continue
            seen.add(key)
            out.append(SingleConceptProposal(activation=col, origin=(i, k)))
    return out
