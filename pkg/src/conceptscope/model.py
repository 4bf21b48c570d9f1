"""Concept bottleneck model core.

Two logistic stages: inputs -> concept activations (one logistic unit per
concept) and concept activations -> label. The joint log-posterior over both
parameter blocks under independent zero-mean normal priors is the sampling
target; its gradient is analytic.

All values are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InputError, NumericalError, ShapeError

SCHEMA_VERSION = 1


def _ro(a, dtype=np.float64):
    out = np.ascontiguousarray(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with binary labels and optional ground-truth catalog."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = ()
    ground_truth: object | None = None

    def __post_init__(self):
        feats = _ro(self.features)
        raw = np.asarray(self.labels)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise ShapeError(f"features must be a nonempty 2-D matrix, got shape {feats.shape}")
        if raw.ndim != 1 or raw.shape[0] != feats.shape[0]:
            raise ShapeError("labels must be a vector with one entry per row of features")
        if not np.all(np.isfinite(feats)):
            raise InputError("features contain non-finite values")
        if not np.all((raw == 0) | (raw == 1)):
            raise InputError("labels must contain only 0 and 1")
        labels = _ro(raw, dtype=np.int8)
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(feats.shape[1]))
        if len(names) != feats.shape[1]:
            raise ShapeError("feature_names length must equal the number of columns")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_points(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def content_hash(self) -> str:
        """Stable digest of shapes, features, labels (not the catalog)."""
        h = hashlib.sha256()
        h.update(np.array(self.features.shape, dtype=np.int64).tobytes())
        h.update(self.features.tobytes())
        h.update(self.labels.astype(np.int8).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class ConceptParams:
    """Input-to-concept stage: one weight row and bias per concept."""

    weights: np.ndarray   # K x D
    biases: np.ndarray    # K

    def __post_init__(self):
        w = _ro(self.weights)
        b = _ro(self.biases)
        if w.ndim != 2 or w.shape[0] < 1:
            raise ShapeError(f"concept weights must be a K x D matrix with K >= 1, got {w.shape}")
        if b.shape != (w.shape[0],):
            raise ShapeError("concept biases must have one entry per concept")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise InputError("concept parameters contain non-finite values")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def n_concepts(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class LabelParams:
    """Concept-to-label stage: one weight per concept plus a bias."""

    weights: np.ndarray   # K
    bias: float

    def __post_init__(self):
        w = _ro(self.weights)
        if w.ndim != 1:
            raise ShapeError("label weights must be a vector")
        b = float(self.bias)
        if not (np.all(np.isfinite(w)) and np.isfinite(b)):
            raise InputError("label parameters contain non-finite values")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class PriorSpec:
    """Independent zero-mean normal priors, one std per parameter block."""

    std_theta: float = 1.0
    std_phi: float = 1.0

    def __post_init__(self):
        if not (self.std_theta > 0 and self.std_phi > 0):
            raise InputError("prior stds must be strictly positive")


@dataclass(frozen=True)
class PinnedConcept:
    """A concept column held fixed at expert-supplied activation values."""

    column_index: int
    values: np.ndarray    # N, entries in [0, 1]

    def __post_init__(self):
        v = _ro(self.values)
        if v.ndim != 1:
            raise ShapeError("pinned values must be a vector")
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise InputError("pinned values must lie in [0, 1]")
        if self.column_index < 0:
            raise ShapeError("pinned column index must be nonnegative")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class PosteriorSample:
    """One posterior draw plus its induced activations and accuracy."""

    concept_params: ConceptParams
    label_params: LabelParams
    activations: np.ndarray   # N x K
    accuracy: float
    chain_id: int
    draw_index: int
    pinned: PinnedConcept | None = None

    def __post_init__(self):
        object.__setattr__(self, "activations", _ro(self.activations))


def concept_forward(params: ConceptParams, features: np.ndarray) -> np.ndarray:
    """Concept activations sigma(w_k . x_n + b_k) for every point and concept.

    Values lie in (0, 1); beyond |logit| ~ 37 they saturate to exactly 0.0 or
    1.0 in float64.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"features must be 2-D, got shape {X.shape}")
    if X.shape[1] != params.n_features:
        raise ShapeError(
            f"feature dimension {X.shape[1]} does not match concept weights {params.n_features}")
    if not np.all(np.isfinite(X)):
        raise InputError("features contain non-finite values")
    z = X @ params.weights.T + params.biases
    return kernels.sigmoid(z)


def label_forward(params: LabelParams, activations: np.ndarray) -> np.ndarray:
    """Label probabilities sigma(phi . c_n + b) for every point."""
    C = np.asarray(activations, dtype=np.float64)
    if C.ndim != 2 or C.shape[1] != params.weights.shape[0]:
        raise ShapeError(
            f"activations with {C.shape} do not match {params.weights.shape[0]} label weights")
    return kernels.sigmoid(C @ params.weights + params.bias)


def label_logits(params: LabelParams, activations: np.ndarray) -> np.ndarray:
    C = np.asarray(activations, dtype=np.float64)
    if C.ndim != 2 or C.shape[1] != params.weights.shape[0]:
        raise ShapeError("activations do not match label weights")
    return C @ params.weights + params.bias


def flatten_params(theta: ConceptParams, phi: LabelParams) -> np.ndarray:
    """Fixed flat layout: theta weights row-major, theta biases, phi weights, phi bias."""
    return np.concatenate([
        theta.weights.ravel(), theta.biases, phi.weights, [phi.bias]])


def unflatten_params(flat: np.ndarray, n_features: int, n_concepts: int):
    """Inverse of :func:`flatten_params`; raises ShapeError on a wrong-length vector."""
    flat = np.asarray(flat, dtype=np.float64)
    D, K = n_features, n_concepts
    expected = K * D + 2 * K + 1
    if flat.ndim != 1 or flat.shape[0] != expected:
        raise ShapeError(f"flat vector must have length {expected} for D={D}, K={K}, "
                         f"got {flat.shape}")
    theta = ConceptParams(flat[:K * D].reshape(K, D), flat[K * D:K * D + K])
    phi = LabelParams(flat[K * D + K:K * D + 2 * K], float(flat[-1]))
    return theta, phi


def flat_length(n_features: int, n_concepts: int, pinned: bool = False) -> int:
    K, D = n_concepts, n_features
    if pinned:
        return (K - 1) * (D + 1) + K + 1
    return K * D + 2 * K + 1


def _check_finite_flat(flat: np.ndarray):
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        raise NumericalError(
            f"non-finite parameter at flat index {int(bad[0])}", index=int(bad[0]))


def log_posterior_flat(flat, data: Dataset, n_concepts: int, prior: PriorSpec,
                       pinned: PinnedConcept | None = None) -> tuple[float, np.ndarray]:
    """Log-posterior and gradient on the flat layout; the HMC target."""
    flat = np.ascontiguousarray(flat, dtype=np.float64)
    expected = flat_length(data.n_features, n_concepts, pinned is not None)
    if flat.shape[0] != expected:
        raise ShapeError(f"flat vector length {flat.shape[0]}, expected {expected}")
    _check_finite_flat(flat)
    pin_col = -1 if pinned is None else pinned.column_index
    pin_values = np.empty(0) if pinned is None else pinned.values
    y = data.labels.astype(np.float64)
    logp, grad = kernels.logp_grad(flat, data.features, y, n_concepts,
                                   pin_col, pin_values, prior.std_theta, prior.std_phi)
    if not np.isfinite(logp):
        raise NumericalError("log-posterior is non-finite", index=None)
    return float(logp), grad


def log_posterior_terms(theta: ConceptParams, phi: LabelParams, data: Dataset,
                        prior: PriorSpec) -> dict[str, float]:
    """The three additive pieces: Bernoulli log-likelihood and the two prior terms.

    Normal log-densities include their normalization constants, so two
    implementations of the same formulas agree exactly.
    """
    acts = concept_forward(theta, data.features)
    f = label_logits(phi, acts)
    sgn = 2.0 * data.labels.astype(np.float64) - 1.0
    loglik = float(np.sum(np.minimum(sgn * f, 0.0) - np.log1p(np.exp(-np.abs(f)))))

    def normal_term(vec_sq: float, n: int, std: float) -> float:
        var = std * std
        return -0.5 * vec_sq / var - 0.5 * n * np.log(2.0 * np.pi * var)

    theta_sq = float(np.sum(theta.weights ** 2) + np.sum(theta.biases ** 2))
    phi_sq = float(np.sum(phi.weights ** 2) + phi.bias ** 2)
    return {
        "loglik": loglik,
        "logprior_theta": normal_term(theta_sq, theta.weights.size + theta.biases.size,
                                      prior.std_theta),
        "logprior_phi": normal_term(phi_sq, phi.weights.size + 1, prior.std_phi),
    }


def log_posterior(theta: ConceptParams, phi: LabelParams, data: Dataset,
                  prior: PriorSpec) -> float:
    """Joint log-posterior up to the constant that does not depend on parameters."""
    terms = log_posterior_terms(theta, phi, data, prior)
    total = terms["loglik"] + terms["logprior_theta"] + terms["logprior_phi"]
    if not np.isfinite(total):
        flat = flatten_params(theta, phi)
        _check_finite_flat(flat)
        raise NumericalError("log-posterior is non-finite", index=None)
    return total


def grad_log_posterior(theta: ConceptParams, phi: LabelParams, data: Dataset,
                       prior: PriorSpec) -> np.ndarray:
    """Analytic gradient of :func:`log_posterior` in the flat layout."""
    flat = flatten_params(theta, phi)
    _, grad = log_posterior_flat(flat, data, theta.n_concepts, prior)
    return grad


def predictions(sample: PosteriorSample) -> np.ndarray:
    """Hard labels; probability exactly 0.5 (logit 0) predicts class 0."""
    f = label_logits(sample.label_params, sample.activations)
    return (f > 0.0).astype(np.int8)


def sample_accuracy(sample: PosteriorSample, data: Dataset) -> float:
    """Fraction of points whose thresholded label probability matches the label."""
    if sample.activations.shape[0] != data.n_points:
        raise ShapeError("sample activations do not match the dataset size")
    return float(np.mean(predictions(sample) == data.labels))


def materialize_sample(theta: ConceptParams, phi: LabelParams, data: Dataset,
                       chain_id: int, draw_index: int,
                       pinned: PinnedConcept | None = None) -> PosteriorSample:
    """Build a PosteriorSample: forward pass, pinned-column substitution, accuracy."""
    acts = concept_forward(theta, data.features)
    if pinned is not None:
        acts = acts.copy()
        acts[:, pinned.column_index] = pinned.values
    f = acts @ phi.weights + phi.bias
    acc = float(np.mean((f > 0.0).astype(np.int8) == data.labels))
    return PosteriorSample(concept_params=theta, label_params=phi, activations=acts,
                           accuracy=acc, chain_id=chain_id, draw_index=draw_index,
                           pinned=pinned)


# ---------------------------------------------------------------------------
# Dataset file formats: JSON document and CSV import.

def dataset_to_dict(data: Dataset) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "feature_names": list(data.feature_names),
        "features": [[float(v) for v in row] for row in data.features],
        "labels": [int(v) for v in data.labels],
    }
    if data.ground_truth is not None:
        from .datagen import catalog_to_dict
        doc["ground_truth"] = catalog_to_dict(data.ground_truth)
    return doc


def dataset_from_dict(doc: dict) -> Dataset:
    if not isinstance(doc, dict) or "features" not in doc or "labels" not in doc:
        raise InputError("dataset document must contain 'features' and 'labels'")
    gt = None
    if doc.get("ground_truth") is not None:
        from .datagen import catalog_from_dict
        gt = catalog_from_dict(doc["ground_truth"])
    return Dataset(features=np.array(doc["features"], dtype=np.float64),
                   labels=np.array(doc["labels"]),
                   feature_names=tuple(doc.get("feature_names") or ()),
                   ground_truth=gt)


def save_dataset(data: Dataset, path) -> None:
    with open(path, "w") as fh:
        json.dump(dataset_to_dict(data), fh)


def load_dataset(path) -> Dataset:
    with open(path) as fh:
        return dataset_from_dict(json.load(fh))


def dataset_from_csv(path) -> Dataset:
    """CSV import: header row, every column but the last is a feature, last is the label."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or len(rows[0]) < 2:
        raise InputError("CSV needs a header row plus data rows, and >= 2 columns")
    header, body = rows[0], rows[1:]
    try:
        mat = np.array([[float(v) for v in row] for row in body])
    except ValueError as exc:
        raise InputError(f"CSV contains a non-numeric value: {exc}") from exc
    return Dataset(features=mat[:, :-1], labels=mat[:, -1],
                   feature_names=tuple(header[:-1]))
