"""Hamiltonian Monte Carlo over the flattened model parameters.

Multi-restart chains with burn-in, optional thinning, accuracy filtering, and
conditioning on a pinned concept column. Kinetic energy is standard Gaussian
with identity mass; divergent proposals are rejected rather than aborting the
chain. Chain seeds come from a splittable seed sequence indexed by chain id,
so restarts are independent and the concatenated pool is reproducible
bit-for-bit regardless of execution order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InputError, ShapeError, StorageError
from .model import (SCHEMA_VERSION, ConceptParams, Dataset, LabelParams,
                    PinnedConcept, PosteriorSample, PriorSpec, flat_length,
                    log_posterior_flat, materialize_sample)

__all__ = [
    "HmcConfig", "ProposalPool", "PinnedConcept", "leapfrog", "hmc_chain",
    "run_restarts", "filter_predictive", "save_pool", "load_pool",
]


@dataclass(frozen=True)
class HmcConfig:
    step_size: float = 0.001
    leapfrog_steps: int = 3
    burn_in_steps: int = 1000
    samples_per_restart: int = 100
    restarts: int = 10
    seed: int = 0
    thinning: int = 1

    def __post_init__(self):
        if self.step_size <= 0:
            raise InputError("step_size must be positive")
        for name in ("leapfrog_steps", "burn_in_steps", "samples_per_restart",
                     "restarts", "thinning"):
            if int(getattr(self, name)) < 1:
                raise InputError(f"{name} must be a positive integer")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InputError("seed must fit in 64 unsigned bits")

    def to_dict(self) -> dict:
        return {"step_size": self.step_size, "leapfrog_steps": self.leapfrog_steps,
                "burn_in_steps": self.burn_in_steps,
                "samples_per_restart": self.samples_per_restart,
                "restarts": self.restarts, "seed": self.seed, "thinning": self.thinning}

    @classmethod
    def from_dict(cls, doc: dict) -> "HmcConfig":
        return cls(**{k: doc[k] for k in cls().to_dict() if k in doc})


@dataclass(frozen=True)
class ProposalPool:
    """Posterior samples surviving (or awaiting) the accuracy filter."""

    samples: tuple[PosteriorSample, ...]
    t_acc: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        bad = [i for i, s in enumerate(self.samples) if s.accuracy < self.t_acc]
        if bad:
            raise InputError(f"sample {bad[0]} violates accuracy >= {self.t_acc}")

    def __len__(self) -> int:
        return len(self.samples)


def leapfrog(position, momentum, step_size, n_steps, gradient_fn, *,
             initial_gradient=None):
    """Half-kick / drift / half-kick integration of Hamiltonian dynamics.

    ``gradient_fn`` returns the gradient of the log-density (so kicks use
    +step/2 * grad). ``n_steps == 0`` is the identity. A non-finite
    intermediate raises DivergenceError carrying the step index.
    """
    q = np.array(position, dtype=np.float64)
    p = np.array(momentum, dtype=np.float64)
    if q.shape != p.shape:
        raise ShapeError("position and momentum must have the same shape")
    if n_steps == 0:
        return q, p
    grad = initial_gradient if initial_gradient is not None else gradient_fn(q)
    p = p + 0.5 * step_size * grad
    for step in range(n_steps):
        q = q + step_size * p
        if not np.all(np.isfinite(q)):
            raise DivergenceError(f"non-finite position at leapfrog step {step}", step=step)
        grad = gradient_fn(q)
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(f"non-finite gradient at leapfrog step {step}", step=step)
        p = p + (step_size if step < n_steps - 1 else 0.5 * step_size) * grad
    return q, p


def hmc_chain(init, config: HmcConfig, target, rng) -> tuple[list[np.ndarray], dict]:
    """One chain: burn-in discarded, every ``thinning``-th retained afterwards.

    ``target(q) -> (logp, grad)``. Returns the retained draws plus acceptance
    and divergence counts. Divergent trajectories reject and continue.
    """
    q = np.array(init, dtype=np.float64)
    logp, grad = target(q)
    if not np.isfinite(logp):
        raise InputError("target is not finite at the initial position")

    eps, n_leap = config.step_size, config.leapfrog_steps
    total = config.burn_in_steps + config.samples_per_restart * config.thinning
    draws: list[np.ndarray] = []
    accepted = divergences = 0

    for it in range(total):
        p0 = rng.standard_normal(q.shape[0])
        u = rng.random()
        try:
            q_new = np.array(q)
            p_new = p0 + 0.5 * eps * grad
            logp_new, grad_new = logp, grad
            for step in range(n_leap):
                q_new = q_new + eps * p_new
                logp_new, grad_new = target(q_new)
                if not (np.isfinite(logp_new) and np.all(np.isfinite(grad_new))):
                    raise DivergenceError("non-finite target along trajectory", step=step)
                p_new = p_new + (eps if step < n_leap - 1 else 0.5 * eps) * grad_new
            log_ratio = (logp_new - 0.5 * p_new @ p_new) - (logp - 0.5 * p0 @ p0)
            if np.isfinite(log_ratio) and np.log(u) < log_ratio:
                q, logp, grad = q_new, logp_new, grad_new
                accepted += 1
        except DivergenceError:
            divergences += 1
        if it >= config.burn_in_steps and (it - config.burn_in_steps + 1) % config.thinning == 0:
            draws.append(np.array(q))

    stats = {"accept_rate": accepted / total, "divergences": divergences}
    return draws, stats


def _prior_init(rng, n_features: int, n_concepts: int, prior: PriorSpec,
                pinned: PinnedConcept | None) -> np.ndarray:
    ks = n_concepts - (1 if pinned is not None else 0)
    n_theta = ks * (n_features + 1)
    n_phi = n_concepts + 1
    z = rng.standard_normal(n_theta + n_phi)
    z[:n_theta] *= prior.std_theta
    z[n_theta:] *= prior.std_phi
    return z


def _sigmoid_np(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _fit_label_stage(C, y, iters=8, ridge=1.0):
    """Ridge-regularized IRLS fit of the concept->label logistic stage."""
    A = np.hstack([C, np.ones((C.shape[0], 1))])
    beta = np.zeros(A.shape[1])
    eye = np.eye(A.shape[1])
    for _ in range(iters):
        p = _sigmoid_np(A @ beta)
        w = np.maximum(p * (1.0 - p), 1e-6)
        H = A.T @ (A * w[:, None]) + ridge * eye
        g = A.T @ (y - p) - ridge * beta
        beta = beta + np.linalg.solve(H, g)
    return beta


def _random_cut(rng, X, axis_prob=0.2):
    """One crisp logistic unit: random direction, cut at a random inter-point void.

    Directions mix single-feature thresholds with oblique unit vectors. The
    cut position is drawn along the direction with probability proportional to
    the gaps between consecutive projected points, so boundaries land in data
    voids. Label-free.
    """
    n, d = X.shape
    if d > 1 and rng.random() >= axis_prob:
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
    else:
        u = np.zeros(d)
        u[rng.integers(d)] = rng.choice(np.array([-1.0, 1.0]))
    proj = np.sort(X @ u)
    lo, hi = int(0.02 * n), max(int(0.98 * n), int(0.02 * n) + 2)
    gaps = proj[lo + 1:hi] - proj[lo:hi - 1]
    total = gaps.sum()
    if total <= 0:
        cut = proj[n // 2]
    else:
        r = lo + rng.choice(gaps.shape[0], p=gaps / total)
        cut = 0.5 * (proj[r] + proj[r + 1])
    spread = max(proj[-1] - proj[0], 1e-9)
    s = rng.uniform(4.0, 12.0) * 4.0 / spread
    return s * u, -s * cut


def _col_signature(col):
    """Polarity-canonical rounded activation pattern, for deduplicating cuts."""
    bits = (col >= 0.5).astype(np.uint8)
    if bits[0]:
        bits = 1 - bits
    return bits.tobytes()


def _staged_search_init(rng, data: Dataset, n_concepts: int, prior: PriorSpec,
                        pinned: PinnedConcept | None, branch: int,
                        final_branch: int, tol: float,
                        explore_tol: float | None = None) -> np.ndarray:
    """Overdispersed restart initialization by randomized greedy search.

    Concept units are chosen one stage at a time: each stage proposes random
    crisp cuts, refits the label stage, and keeps one of the near-best
    candidates, picking uniformly over distinct rounded cut patterns so that
    duplicated geometry does not bias the draw. Prior-drawn initialization
    (the obvious default) leaves restarts stuck in a single posterior basin;
    this search spreads them across basins, which is what the restarts exist
    to do. Uses only the dataset and the likelihood, never ground-truth
    annotations.
    """
    X, y = data.features, data.labels.astype(np.float64)
    N, D = X.shape
    K = n_concepts
    sampled = [k for k in range(K) if pinned is None or k != pinned.column_index]

    full = np.zeros((N, K))
    if pinned is not None:
        full[:, pinned.column_index] = pinned.values
    w = np.zeros((len(sampled), D))
    b = np.zeros(len(sampled))

    filled: list[int] = [] if pinned is None else [pinned.column_index]
    for stage, col in enumerate(sampled):
        last = stage == len(sampled) - 1
        nb = final_branch if last else branch
        stage_tol = tol if (last or explore_tol is None) else explore_tol
        cands = []
        for _ in range(nb):
            wk, bk = _random_cut(rng, X)
            ck = _sigmoid_np(X @ wk + bk)
            cols = full[:, filled + [col]].copy()
            cols[:, -1] = ck
            beta = _fit_label_stage(cols, y, iters=6)
            f = cols @ beta[:-1] + beta[-1]
            acc = float(np.mean((f > 0.0).astype(np.int8) == data.labels))
            cands.append((acc, wk, bk, ck))
        best = max(c[0] for c in cands)
        tied = [c for c in cands if c[0] >= best - stage_tol]
        groups: dict[bytes, list] = {}
        for c in tied:
            groups.setdefault(_col_signature(c[3]), []).append(c)
        keys = sorted(groups)
        grp = groups[keys[rng.integers(len(keys))]]
        _, wk, bk, ck = grp[rng.integers(len(grp))]
        w[stage], b[stage] = wk, bk
        full[:, col] = ck
        filled.append(col)

    beta = _fit_label_stage(full, y, iters=10)
    return np.concatenate([w.ravel(), b, beta])


def assemble_params(flat, n_features: int, n_concepts: int,
                    pinned: PinnedConcept | None = None):
    """Structured params from a flat vector; the pinned row comes back as zeros."""
    D, K = n_features, n_concepts
    flat = np.asarray(flat, dtype=np.float64)
    if flat.shape[0] != flat_length(D, K, pinned is not None):
        raise ShapeError("flat vector length does not match D, K and pin state")
    ks = K if pinned is None else K - 1
    w_s = flat[:ks * D].reshape(ks, D)
    b_s = flat[ks * D:ks * (D + 1)]
    if pinned is None:
        w, b = w_s, b_s
    else:
        w = np.zeros((K, D))
        b = np.zeros(K)
        rows = [k for k in range(K) if k != pinned.column_index]
        w[rows, :] = w_s
        b[rows] = b_s
    phi_w = flat[ks * (D + 1):ks * (D + 1) + K]
    phi_b = float(flat[-1])
    return ConceptParams(w, b), LabelParams(phi_w, phi_b)


def run_restarts(data: Dataset, n_concepts: int, prior: PriorSpec, config: HmcConfig,
                 pinned: PinnedConcept | None = None, progress_cb=None,
                 init: str = "search", search_branch: int = 16,
                 search_final_branch: int = 64, search_tol: float = 0.04,
                 search_explore_tol: float | None = None) -> ProposalPool:
    """Independent restart chains concatenated in chain order.

    The returned pool is unfiltered (t_acc = 0). When ``pinned`` is given the
    pinned concept's parameter row is absent from the sampled state and every
    materialized sample carries the pinned activations verbatim.

    ``init`` picks the restart initializer: "search" (default) draws each
    chain's start from the randomized greedy cut search, "prior" draws it from
    the prior.
    """
    if n_concepts < 1:
        raise InputError("need at least one concept")
    if init not in ("search", "prior"):
        raise InputError("init must be 'search' or 'prior'")
    if pinned is not None:
        if not 0 <= pinned.column_index < n_concepts:
            raise ShapeError("pinned column index out of range")
        if pinned.values.shape[0] != data.n_points:
            raise ShapeError("pinned values must have one entry per data point")

    def target(q):
        return log_posterior_flat(q, data, n_concepts, prior, pinned)

    children = np.random.SeedSequence(config.seed).spawn(config.restarts)
    samples: list[PosteriorSample] = []
    chain_stats = []
    for chain_id in range(config.restarts):
        rng = np.random.default_rng(children[chain_id])
        if init == "search":
            start = _staged_search_init(rng, data, n_concepts, prior, pinned,
                                        search_branch, search_final_branch,
                                        search_tol, search_explore_tol)
        else:
            start = _prior_init(rng, data.n_features, n_concepts, prior, pinned)
        draws, stats = hmc_chain(start, config, target, rng)
        chain_stats.append(stats)
        for draw_index, flat in enumerate(draws):
            theta, phi = assemble_params(flat, data.n_features, n_concepts, pinned)
            samples.append(materialize_sample(theta, phi, data, chain_id, draw_index,
                                              pinned))
        if progress_cb is not None:
            progress_cb(chain_id + 1, config.restarts)

    provenance = {
        "config": config.to_dict(),
        "dataset_hash": data.content_hash(),
        "n_concepts": n_concepts,
        "prior": {"std_theta": prior.std_theta, "std_phi": prior.std_phi},
        "pinned_column": None if pinned is None else pinned.column_index,
        "init": init,
        "chains": chain_stats,
    }
    return ProposalPool(samples=tuple(samples), t_acc=0.0, provenance=provenance)


def filter_predictive(pool: ProposalPool, t_acc: float) -> ProposalPool:
    """Keep samples with accuracy >= t_acc, in order. Empty result is flagged."""
    kept = tuple(s for s in pool.samples if s.accuracy >= t_acc)
    provenance = dict(pool.provenance)
    provenance["filtered_from"] = len(pool.samples)
    if not kept:
        provenance["warning"] = f"no samples at accuracy >= {t_acc}"
    return ProposalPool(samples=kept, t_acc=t_acc, provenance=provenance)


def pool_to_dict(pool: ProposalPool) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "t_acc": pool.t_acc,
        "provenance": pool.provenance,
        "samples": [
            {
                "theta_weights": [[float(v) for v in row] for row in s.concept_params.weights],
                "theta_biases": [float(v) for v in s.concept_params.biases],
                "phi_weights": [float(v) for v in s.label_params.weights],
                "phi_bias": s.label_params.bias,
                "accuracy": s.accuracy,
                "chain_id": s.chain_id,
                "draw_index": s.draw_index,
            }
            for s in pool.samples
        ],
    }
    pin = next((s.pinned for s in pool.samples if s.pinned is not None), None)
    doc["pinned"] = None if pin is None else {
        "column_index": pin.column_index,
        "values": [float(v) for v in pin.values],
    }
    return doc


def save_pool(pool: ProposalPool, path) -> None:
    with open(path, "w") as fh:
        json.dump(pool_to_dict(pool), fh)


def pool_from_dict(doc: dict, data: Dataset) -> ProposalPool:
    """Rebuild a pool against its dataset; activations are recomputed, not trusted.

    The dataset hash must match the archive and each recomputed accuracy must
    equal the stored one.
    """
    if doc.get("provenance", {}).get("dataset_hash") not in (None, data.content_hash()):
        raise StorageError("pool archive was built against a different dataset")
    pin = None
    if doc.get("pinned"):
        pin = PinnedConcept(column_index=int(doc["pinned"]["column_index"]),
                            values=np.array(doc["pinned"]["values"]))
    samples = []
    for rec in doc["samples"]:
        theta = ConceptParams(np.array(rec["theta_weights"]), np.array(rec["theta_biases"]))
        phi = LabelParams(np.array(rec["phi_weights"]), float(rec["phi_bias"]))
        s = materialize_sample(theta, phi, data, int(rec["chain_id"]),
                               int(rec["draw_index"]), pin)
        if abs(s.accuracy - float(rec["accuracy"])) > 1e-12:
            raise StorageError("stored accuracy does not match recomputation")
        samples.append(s)
    return ProposalPool(samples=tuple(samples), t_acc=float(doc.get("t_acc", 0.0)),
                        provenance=doc.get("provenance", {}))


def load_pool(path, data: Dataset) -> ProposalPool:
    with open(path) as fh:
        return pool_from_dict(json.load(fh), data)
