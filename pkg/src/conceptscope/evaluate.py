"""F1-based matching of proposals to ground-truth concepts and coverage reports.

A single concept matches a catalog entry (or its negation) at F1 >= threshold
on the whole dataset. A concept-set proposal explains the data when its
columns match pairwise-distinct catalog concepts forming one of the oracle's
valid combinations; the distinct assignment is found exactly by exhaustive
search (K stays small here).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .datagen import GroundTruthCatalog
from .diversity import round_bits
from .errors import InputError, ShapeError
from .model import SCHEMA_VERSION

__all__ = [
    "MatchReport", "f1_binary", "match_single", "match_explanation",
    "coverage_report", "method_table_markdown",
]

DEFAULT_F1_THRESHOLD = 0.9


def f1_binary(pred, truth) -> float:
    """Standard F1 with positive class 1.

    The truth vector must contain at least one positive. The no-positives
    corner (TP = FP = FN = 0) returns 1.0 by convention; it is unreachable
    through the public matchers but keeps the function total.
    """
    p = np.asarray(pred)
    t = np.asarray(truth)
    if p.shape != t.shape or p.ndim != 1:
        raise ShapeError(f"pred and truth must be equal-length vectors, "
                         f"got {p.shape} and {t.shape}")
    if not np.any(t == 1):
        raise InputError("truth has no positive entries; F1 is undefined")
    tp = int(np.sum((p == 1) & (t == 1)))
    fp = int(np.sum((p == 1) & (t == 0)))
    fn = int(np.sum((p == 0) & (t == 1)))
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0
    if tp == 0:
        return 0.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def _f1_vs_concept(bits, concept) -> tuple[float, bool]:
    """Best of (concept, negated concept); negation loses ties."""
    direct = f1_binary(bits, concept)
    flipped = f1_binary(bits, 1 - concept)
    if flipped > direct:
        return flipped, True
    return direct, False


def match_single(proposal, catalog: GroundTruthCatalog,
                 threshold: float = DEFAULT_F1_THRESHOLD):
    """Best catalog concept for one activation vector, or None below threshold.

    Activations are rounded (0.5 up); both each concept and its negation are
    tried. Ties prefer the lower concept index, then the non-negated form.
    Returns (concept index, f1, negated).
    """
    acts = getattr(proposal, "activation", proposal)
    bits = round_bits(acts)
    best = None
    for idx in range(catalog.n_concepts):
        score, negated = _f1_vs_concept(bits, catalog.concept(idx))
        key = (-score, idx, negated)
        if best is None or key < best[0]:
            best = (key, (idx, score, negated))
    idx, score, negated = best[1]
    if score >= threshold:
        return idx, float(score), bool(negated)
    return None


def _column_candidates(acts, catalog, threshold):
    cols = round_bits(acts)
    cands = []
    for k in range(cols.shape[1]):
        ck = set()
        for idx in range(catalog.n_concepts):
            score, _ = _f1_vs_concept(cols[:, k], catalog.concept(idx))
            if score >= threshold:
                ck.add(idx)
        cands.append(ck)
    return cands


def _distinct_images(cands) -> set[frozenset]:
    """All concept sets reachable by assigning columns to distinct concepts."""
    images: set[frozenset] = set()

    def rec(col, used):
        if col == len(cands):
            images.add(frozenset(used))
            return
        for idx in cands[col]:
            if idx not in used:
                used.add(idx)
                rec(col + 1, used)
                used.discard(idx)

    rec(0, set())
    return images


def match_explanation(proposal, catalog: GroundTruthCatalog,
                      threshold: float = DEFAULT_F1_THRESHOLD,
                      eligible=None):
    """Valid-combination id matched by a concept-set proposal, or None.

    Builds the column/concept bipartite graph at the F1 threshold (negations
    allowed), enumerates perfect matchings onto distinct concepts, and returns
    the index of the first valid combination (in catalog order, optionally
    restricted to ``eligible`` ids) whose concept set equals a matched image.
    Invariant under column permutation and per-column polarity flips.
    """
    acts = getattr(proposal, "activations", proposal)
    acts = np.asarray(acts)
    if acts.ndim != 2:
        raise ShapeError("a concept-set proposal needs an N x K activation matrix")
    cands = _column_candidates(acts, catalog, threshold)
    if any(not c for c in cands):
        return None
    images = _distinct_images(cands)
    if not images:
        return None
    for combo_id, combo in enumerate(catalog.valid_combinations):
        if eligible is not None and combo_id not in eligible:
            continue
        if frozenset(combo) in images:
            return combo_id
    return None


@dataclass(frozen=True)
class MatchReport:
    """Coverage of the catalog by an ordered proposal selection."""

    mode: str                                     # explanations | singles | completions
    matches: tuple[dict, ...]
    explanations_found: tuple[int, ...] = ()
    concepts_found: tuple[int, ...] = ()
    min_M: int | None = None
    n_proposals: int = 0
    total_explanations: int = 0
    total_concepts: int = 0
    threshold: float = DEFAULT_F1_THRESHOLD
    pinned_concept: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "matches", tuple(dict(m) for m in self.matches))
        object.__setattr__(self, "explanations_found",
                           tuple(sorted(int(i) for i in self.explanations_found)))
        object.__setattr__(self, "concepts_found",
                           tuple(sorted(int(i) for i in self.concepts_found)))

    @property
    def found_count(self) -> int:
        if self.mode == "singles":
            return len(self.concepts_found)
        return len(self.explanations_found)

    @property
    def found_total(self) -> int:
        if self.mode == "singles":
            return self.total_concepts
        return self.total_explanations

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode,
            "matches": [dict(m) for m in self.matches],
            "explanations_found": list(self.explanations_found),
            "concepts_found": list(self.concepts_found),
            "min_M": self.min_M,
            "n_proposals": self.n_proposals,
            "total_explanations": self.total_explanations,
            "total_concepts": self.total_concepts,
            "threshold": self.threshold,
            "pinned_concept": self.pinned_concept,
            "found": f"{self.found_count}/{self.found_total}",
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MatchReport":
        return cls(mode=doc["mode"], matches=tuple(doc["matches"]),
                   explanations_found=tuple(doc["explanations_found"]),
                   concepts_found=tuple(doc["concepts_found"]),
                   min_M=doc.get("min_M"), n_proposals=int(doc.get("n_proposals", 0)),
                   total_explanations=int(doc.get("total_explanations", 0)),
                   total_concepts=int(doc.get("total_concepts", 0)),
                   threshold=float(doc.get("threshold", DEFAULT_F1_THRESHOLD)),
                   pinned_concept=doc.get("pinned_concept"))

    def to_markdown(self) -> str:
        head = {"explanations": "Valid explanations",
                "completions": "Valid completions",
                "singles": "Valid concepts"}[self.mode]
        lines = [f"| Proposal | Match |", "|---|---|"]
        for m in self.matches:
            if self.mode == "singles":
                tgt = m["concept"]
                desc = ("none" if tgt is None
                        else f"concept {tgt}{' (negated)' if m['negated'] else ''} "
                             f"f1={m['f1']:.3f}")
            else:
                tgt = m["combination"]
                desc = "none" if tgt is None else f"combination {tgt}"
            lines.append(f"| {m['proposal']} | {desc} |")
        summary = f"**{head}: {self.found_count}/{self.found_total}**"
        if self.min_M is not None:
            summary += f"  (min M = {self.min_M})"
        return "\n".join([summary, ""] + lines)


def save_report(report: MatchReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)


def load_report(path) -> MatchReport:
    with open(path) as fh:
        return MatchReport.from_dict(json.load(fh))


def coverage_report(proposals, catalog: GroundTruthCatalog, mode: str,
                    threshold: float = DEFAULT_F1_THRESHOLD,
                    pinned_concept: int | None = None) -> MatchReport:
    """Coverage of catalog concepts or combinations by ordered proposals.

    ``proposals`` follow the selector's emission order. Modes:

    - "explanations": proposals are activation matrices; counts distinct valid
      combinations covered. min_M (the smallest prefix containing the ground
      truth) is reported when the catalog has exactly one valid combination.
    - "singles": proposals are activation vectors; counts distinct catalog
      concepts found.
    - "completions": like explanations but restricted to combinations
      containing ``pinned_concept``.
    """
    if mode not in ("explanations", "singles", "completions"):
        raise InputError(f"unknown coverage mode {mode!r}")
    if mode == "completions" and pinned_concept is None:
        raise InputError("completions mode needs the pinned concept index")

    matches = []
    if mode == "singles":
        found: set[int] = set()
        for i, prop in enumerate(proposals):
            res = match_single(prop, catalog, threshold)
            if res is None:
                matches.append({"proposal": i, "concept": None, "f1": None,
                                "negated": None})
            else:
                idx, score, neg = res
                found.add(idx)
                matches.append({"proposal": i, "concept": idx, "f1": score,
                                "negated": neg})
        return MatchReport(mode=mode, matches=tuple(matches),
                           concepts_found=tuple(found),
                           n_proposals=len(matches),
                           total_explanations=len(catalog.valid_combinations),
                           total_concepts=catalog.n_concepts, threshold=threshold)

    if mode == "completions":
        eligible = {i for i, combo in enumerate(catalog.valid_combinations)
                    if pinned_concept in combo}
    else:
        eligible = set(range(len(catalog.valid_combinations)))

    found = set()
    min_m = None
    for i, prop in enumerate(proposals):
        combo_id = match_explanation(prop, catalog, threshold, eligible=eligible)
        matches.append({"proposal": i, "combination": combo_id})
        if combo_id is not None:
            found.add(combo_id)
            if min_m is None and len(eligible) == 1:
                min_m = i + 1
    return MatchReport(mode=mode, matches=tuple(matches),
                       explanations_found=tuple(found), min_M=min_m,
                       n_proposals=len(matches),
                       total_explanations=len(eligible),
                       total_concepts=catalog.n_concepts, threshold=threshold,
                       pinned_concept=pinned_concept)


def method_table_markdown(rows, value_header: str = "Result") -> str:
    """Markdown table in the papers' method-by-metric layout.

    ``rows`` is a list of (method, metric, value) triples, e.g.
    ("greedy", "euclidean", "5/6").
    """
    lines = [f"| Method + Distance metric | {value_header} |", "|---|---|"]
    for method, metric, value in rows:
        lines.append(f"| {str(method).title()} {str(metric).title()} | {value} |")
    return "\n".join(lines)
