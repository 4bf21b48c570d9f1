"""Synthetic dataset generators with exhaustively verified ground truth.

Two datasets: six Gaussian clusters on a hexagon whose cyclic arc splits form
the candidate concepts, and an early-warning vitals table whose concepts are
clinical threshold breaches. Each generator returns the dataset together with
a catalog of ground-truth concepts and the oracle-certified list of concept
combinations from which the label is linearly separable.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

from .errors import GenerationError, InputError, ShapeError
from .model import SCHEMA_VERSION, Dataset

__all__ = [
    "GroundTruthCatalog", "HexagonConfig", "VitalsConfig", "VitalSpec",
    "gen_hexagon", "gen_vitals", "enumerate_arc_concepts",
    "oracle_valid_combinations", "linearly_separable", "min_concepts_required",
    "catalog_to_dict", "catalog_from_dict", "save_catalog", "load_catalog",
]


@dataclass(frozen=True)
class GroundTruthCatalog:
    """Named binary concepts over the dataset plus the oracle's findings."""

    concept_names: tuple[str, ...]
    concept_values: np.ndarray            # n_concepts x N, entries {0,1}
    valid_combinations: tuple[tuple[int, ...], ...]
    min_concepts: int
    labeling_provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.ascontiguousarray(self.concept_values, dtype=np.int8)
        if vals.ndim != 2 or vals.shape[0] != len(self.concept_names):
            raise ShapeError("concept_values must have one row per concept name")
        if not np.all((vals == 0) | (vals == 1)):
            raise InputError("concept values must be binary")
        vals.setflags(write=False)
        combos = tuple(tuple(sorted(int(i) for i in c)) for c in self.valid_combinations)
        for combo in combos:
            for i in combo:
                if not 0 <= i < vals.shape[0]:
                    raise InputError(f"valid combination references concept {i}")
        object.__setattr__(self, "concept_values", vals)
        object.__setattr__(self, "concept_names", tuple(self.concept_names))
        object.__setattr__(self, "valid_combinations", combos)

    @property
    def n_concepts(self) -> int:
        return self.concept_values.shape[0]

    def concept(self, index: int) -> np.ndarray:
        return self.concept_values[index]


def catalog_to_dict(cat: GroundTruthCatalog) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "concepts": [{"name": n, "values": [int(v) for v in row]}
                     for n, row in zip(cat.concept_names, cat.concept_values)],
        "valid_combinations": [list(c) for c in cat.valid_combinations],
        "min_concepts": cat.min_concepts,
        "labeling_provenance": cat.labeling_provenance,
    }


def catalog_from_dict(doc: dict) -> GroundTruthCatalog:
    concepts = doc["concepts"]
    return GroundTruthCatalog(
        concept_names=tuple(c["name"] for c in concepts),
        concept_values=np.array([c["values"] for c in concepts], dtype=np.int8),
        valid_combinations=tuple(tuple(c) for c in doc["valid_combinations"]),
        min_concepts=int(doc["min_concepts"]),
        labeling_provenance=doc.get("labeling_provenance", {}),
    )


def save_catalog(cat: GroundTruthCatalog, path) -> None:
    with open(path, "w") as fh:
        json.dump(catalog_to_dict(cat), fh)


def load_catalog(path) -> GroundTruthCatalog:
    with open(path) as fh:
        return catalog_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Separability oracle.

def linearly_separable(codes, labels) -> bool:
    """Exact strict-separability test on (deduplicated) code points.

    Feasibility of s_j (w . x_j + b) >= 1 over the distinct rows; any margin
    rescales, so requiring 1 loses nothing. Conflicting duplicates (same code,
    both labels) short-circuit to False; a single represented class is
    trivially separable.
    """
    codes = np.asarray(codes, dtype=np.float64)
    labels = np.asarray(labels)
    if codes.ndim != 2 or codes.shape[0] != labels.shape[0]:
        raise ShapeError("codes and labels must agree on the number of rows")
    uniq: dict[bytes, list] = {}
    for row, lab in zip(codes, labels):
        key = row.tobytes()
        entry = uniq.setdefault(key, [row, set()])
        entry[1].add(int(lab))
    rows, labs = [], []
    for row, labset in uniq.values():
        if len(labset) > 1:
            return False
        rows.append(row)
        labs.append(labset.pop())
    if len(set(labs)) < 2:
        return True
    mat = np.stack(rows)
    sign = 2.0 * np.asarray(labs, dtype=np.float64) - 1.0
    a_ub = -sign[:, None] * np.hstack([mat, np.ones((mat.shape[0], 1))])
    res = linprog(c=np.zeros(mat.shape[1] + 1), A_ub=a_ub,
                  b_ub=-np.ones(mat.shape[0]),
                  bounds=[(None, None)] * (mat.shape[1] + 1), method="highs")
    return bool(res.status == 0)


def oracle_valid_combinations(concepts, labels, set_size: int = 3) -> list[tuple[int, ...]]:
    """All size-``set_size`` concept subsets whose codes linearly separate the labels.

    ``concepts`` is an n_concepts x N binary matrix (or a GroundTruthCatalog).
    Exhaustive over all combinations; result sorted lexicographically. The test
    runs on deduplicated code points, so it is exact and cheap even for large N.
    """
    if isinstance(concepts, GroundTruthCatalog):
        concepts = concepts.concept_values
    mat = np.asarray(concepts)
    labels = np.asarray(labels)
    out = []
    for combo in itertools.combinations(range(mat.shape[0]), set_size):
        codes = mat[list(combo)].T
        if linearly_separable(codes, labels):
            out.append(tuple(combo))
    return sorted(out)


def min_concepts_required(concepts, labels, max_size: int | None = None) -> int | None:
    """Smallest subset size with a separating combination, or None if there is none."""
    if isinstance(concepts, GroundTruthCatalog):
        concepts = concepts.concept_values
    mat = np.asarray(concepts)
    n = mat.shape[0]
    cap = n if max_size is None else min(max_size, n)
    for size in range(1, cap + 1):
        if oracle_valid_combinations(mat, labels, size):
            return size
    return None


# ---------------------------------------------------------------------------
# Hexagon dataset.

@dataclass(frozen=True)
class HexagonConfig:
    points_per_cluster: int = 200
    radius: float = 1.0
    cluster_std: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.points_per_cluster < 1 or self.radius <= 0 or self.cluster_std <= 0:
            raise InputError("hexagon config values must be positive")


def enumerate_arc_concepts(cluster_assignment, n_clusters: int = 6):
    """One binary concept per contiguous-arc bipartition of cyclic clusters.

    A split cuts the cycle at two gaps (gap g lies between cluster g and
    g+1 mod n), giving n(n-1)/2 distinct splits. Canonical polarity: the
    positive side is the arc containing cluster 0 (the arc whose lowest
    member index is smallest). Returns point-level vectors following
    ``cluster_assignment``.
    """
    assign = np.asarray(cluster_assignment, dtype=np.int64)
    if assign.min() < 0 or assign.max() >= n_clusters:
        raise InputError("cluster assignment out of range")
    concepts = []
    for a, b in itertools.combinations(range(n_clusters), 2):
        in_arc = np.array([a + 1 <= j <= b for j in range(n_clusters)])
        if not in_arc[0]:
            in_arc = ~in_arc
        concepts.append(in_arc[assign].astype(np.int8))
    return concepts


def _cluster_level_concepts(n_clusters: int = 6):
    return enumerate_arc_concepts(np.arange(n_clusters), n_clusters)


@lru_cache(maxsize=None)
def _hexagon_labeling(n_clusters: int = 6) -> tuple[tuple[int, ...], dict]:
    """Cluster labeling reconstructed from the dataset's verifiable claims.

    Searches all 2^n cluster labelings for those needing exactly three
    concepts, preferring one whose valid-triple count is 7 and otherwise
    taking the lexicographically smallest (the search is exhaustive, so the
    actual count is recorded either way).
    """
    concepts = np.stack(_cluster_level_concepts(n_clusters))
    viable = []
    for bits in itertools.product([0, 1], repeat=n_clusters):
        labels = np.array(bits)
        if labels.min() == labels.max():
            continue
        if min_concepts_required(concepts, labels, max_size=3) != 3:
            continue
        triples = oracle_valid_combinations(concepts, labels, 3)
        viable.append((bits, len(triples)))
    if not viable:
        raise GenerationError("no cluster labeling requires exactly 3 concepts")
    target = [v for v in viable if v[1] == 7]
    chosen, count = sorted(target)[0] if target else sorted(viable)[0]
    provenance = {
        "cluster_labels": list(chosen),
        "n_valid_triples": count,
        "target_count_met": bool(target),
        "candidates_with_min_3": len(viable),
    }
    return chosen, provenance


def _best_line_accuracy(points, bits, centers, cbits) -> float:
    """Accuracy of the max-margin line between the two cluster-center groups."""
    sign = 2.0 * np.asarray(cbits, dtype=np.float64) - 1.0
    d = centers.shape[1]
    # maximize margin m subject to s_j (w . c_j + b) >= m, |w|_inf <= 1
    a_ub = np.hstack([-sign[:, None] * centers, -sign[:, None], np.ones((len(cbits), 1))])
    c = np.zeros(d + 2)
    c[-1] = -1.0
    bounds = [(-1.0, 1.0)] * d + [(None, None), (0.0, None)]
    res = linprog(c=c, A_ub=a_ub, b_ub=np.zeros(len(cbits)), bounds=bounds,
                  method="highs")
    if res.status != 0:
        return 0.0
    w, b = res.x[:d], res.x[d]
    pred = (points @ w + b > 0).astype(np.int8)
    return float(np.mean(pred == bits))


def gen_hexagon(config: HexagonConfig = HexagonConfig()) -> tuple[Dataset, GroundTruthCatalog]:
    """Six isotropic Gaussian clusters at hexagon vertices, labeled per the
    reconstructed cluster labeling, with the 15 arc-split concepts and the
    oracle's valid triples.

    Raises GenerationError when the oracle cannot certify min_concepts == 3 or
    a concept's best linear realization falls below 0.99 accuracy (the cluster
    spread is too large for the catalog to be meaningful).
    """
    n_clusters = 6
    labeling, provenance = _hexagon_labeling(n_clusters)
    rng = np.random.default_rng(config.seed)
    angles = np.pi / 3.0 * np.arange(n_clusters)
    centers = config.radius * np.column_stack([np.cos(angles), np.sin(angles)])

    pts, labels, assign = [], [], []
    for j in range(n_clusters):
        pts.append(centers[j] + config.cluster_std
                   * rng.standard_normal((config.points_per_cluster, 2)))
        labels.append(np.full(config.points_per_cluster, labeling[j], dtype=np.int8))
        assign.append(np.full(config.points_per_cluster, j, dtype=np.int64))
    X = np.vstack(pts)
    y = np.concatenate(labels)
    assign = np.concatenate(assign)

    cluster_concepts = _cluster_level_concepts(n_clusters)
    point_concepts = enumerate_arc_concepts(assign, n_clusters)
    names = tuple(f"arc_split_{a}_{b}"
                  for a, b in itertools.combinations(range(n_clusters), 2))

    cluster_labels = np.array(labeling)
    triples = oracle_valid_combinations(np.stack(cluster_concepts), cluster_labels, 3)
    mc = min_concepts_required(np.stack(cluster_concepts), cluster_labels, max_size=3)
    if mc != 3:
        raise GenerationError(f"oracle certifies min_concepts={mc}, expected 3")

    for name, cbits, bits in zip(names, cluster_concepts, point_concepts):
        acc = _best_line_accuracy(X, bits, centers, cbits)
        if acc < 0.99:
            raise GenerationError(
                f"concept {name}: best linear realization reaches only {acc:.4f}")

    catalog = GroundTruthCatalog(
        concept_names=names,
        concept_values=np.stack(point_concepts),
        valid_combinations=tuple(triples),
        min_concepts=mc,
        labeling_provenance={**provenance, "cluster_assignment": assign.tolist()},
    )
    feature_names = ("x", "y")
    data = Dataset(features=X, labels=y, feature_names=feature_names,
                   ground_truth=catalog)
    return data, catalog


# ---------------------------------------------------------------------------
# Early-warning vitals dataset.

@dataclass(frozen=True)
class VitalSpec:
    """One vital's sampling distribution and breach threshold.

    ``direction`` is +1 when breaching means exceeding the cutoff, -1 when it
    means falling below. ``target_exceed`` records the breach probability the
    default cutoff was derived from; the cutoff itself is authoritative.
    """

    name: str
    mean: float
    std: float
    cutoff: float
    direction: int
    target_exceed: float

    def __post_init__(self):
        if self.std <= 0:
            raise InputError(f"{self.name}: std must be positive")
        if self.direction not in (-1, 1):
            raise InputError(f"{self.name}: direction must be +1 or -1")
        if not 0.0 < self.target_exceed < 1.0:
            raise InputError(f"{self.name}: exceed probability must be in (0, 1)")


DEFAULT_VITALS = (
    VitalSpec("heart_rate", 85.0, 18.0, 100.0, +1, 0.202),
    VitalSpec("respiratory_rate", 17.0, 4.0, 21.0, +1, 0.159),
    VitalSpec("temperature", 37.0, 1.2, 38.0, +1, 0.202),
    VitalSpec("mean_arterial_pressure", 82.0, 14.0, 70.0, -1, 0.196),
    VitalSpec("oxygen_saturation", 96.5, 2.5, 94.0, -1, 0.159),
)


@dataclass(frozen=True)
class VitalsConfig:
    n_points: int = 2252
    vitals: tuple[VitalSpec, ...] = DEFAULT_VITALS
    seed: int = 0
    min_breaches: int = 2
    standardize: bool = True

    def __post_init__(self):
        if len(self.vitals) != 5:
            raise InputError("exactly 5 vitals are required")
        if self.n_points < 1:
            raise InputError("n_points must be positive")


def gen_vitals(config: VitalsConfig = VitalsConfig()) -> tuple[Dataset, GroundTruthCatalog]:
    """Gaussian vitals, one threshold concept per vital, label = enough breaches.

    Features are standardized per vital by default (raw moments recorded in
    the provenance); concepts are computed on the raw values, so they remain
    axis thresholds after standardization. A concept that never fires (or
    always fires) makes the catalog meaningless and raises GenerationError.
    """
    rng = np.random.default_rng(config.seed)
    raw = np.column_stack([v.mean + v.std * rng.standard_normal(config.n_points)
                           for v in config.vitals])
    concepts = np.column_stack([
        (raw[:, i] > v.cutoff) if v.direction > 0 else (raw[:, i] < v.cutoff)
        for i, v in enumerate(config.vitals)]).astype(np.int8)
    labels = (concepts.sum(axis=1) >= config.min_breaches).astype(np.int8)

    for i, v in enumerate(config.vitals):
        fired = int(concepts[:, i].sum())
        if fired == 0 or fired == config.n_points:
            raise GenerationError(f"concept {v.name} is constant over the generated set")
    if labels.min() == labels.max():
        raise GenerationError("labels are constant over the generated set")

    mat = concepts.T
    full = tuple(range(5))
    if not linearly_separable(concepts, labels):
        raise GenerationError("full concept set does not separate the labels")
    mc = min_concepts_required(mat, labels)
    if mc != 5:
        raise GenerationError(
            f"a {mc}-concept subset already separates the labels; "
            "the generated set does not realize the intended ambiguity")

    suffix = {1: "high", -1: "low"}
    names = tuple(f"{v.name}_{suffix[v.direction]}" for v in config.vitals)
    means, stds = raw.mean(axis=0), raw.std(axis=0)
    feats = (raw - means) / stds if config.standardize else raw
    catalog = GroundTruthCatalog(
        concept_names=names,
        concept_values=mat,
        valid_combinations=(full,),
        min_concepts=mc,
        labeling_provenance={
            "rule": f"label = 1 iff at least {config.min_breaches} thresholds breached",
            "standardized": config.standardize,
            "raw_means": means.tolist(),
            "raw_stds": stds.tolist(),
            "cutoffs": [v.cutoff for v in config.vitals],
            "directions": [v.direction for v in config.vitals],
        },
    )
    data = Dataset(features=feats, labels=labels,
                   feature_names=tuple(v.name for v in config.vitals),
                   ground_truth=catalog)
    return data, catalog
