"""Pure-numpy builds of the hot kernels.

Reference semantics for the numba builds in ``numba_impl``: same math, same
parameter layout, vectorized instead of looped.
"""

import numpy as np


def sigmoid(z):
    """Numerically stable logistic, elementwise; exact 0/1 never returned for finite z."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_sigmoid(z):
    """log(sigmoid(z)) via the branch-free form min(z,0) - log1p(exp(-|z|))."""
    z = np.asarray(z, dtype=np.float64)
    return np.minimum(z, 0.0) - np.log1p(np.exp(-np.abs(z)))


def logp_grad(flat, X, y, K, pin_col, pin_values, std_theta, std_phi):
    """Joint log-posterior and its gradient in the flat parameter layout.

    Layout: concept weights row-major (sampled rows only), concept biases,
    label weights (always K of them), label bias. When ``pin_col >= 0`` that
    concept column is fixed to ``pin_values`` and its weight row/bias are
    absent from ``flat``.

    Returns ``(logp, grad)`` with ``grad`` laid out like ``flat``.
    """
    N, D = X.shape
    ks = K if pin_col < 0 else K - 1
    nw = ks * D
    theta_w = flat[:nw].reshape(ks, D)
    theta_b = flat[nw:nw + ks]
    phi_w = flat[nw + ks:nw + ks + K]
    phi_b = flat[nw + ks + K]

    Z = X @ theta_w.T + theta_b
    Cs = sigmoid(Z)                       # N x ks, sampled columns only
    if pin_col < 0:
        C = Cs
        phi_s = phi_w
    else:
        cols = np.concatenate([np.arange(pin_col), np.arange(pin_col + 1, K)])
        C = np.empty((N, K))
        C[:, cols] = Cs
        C[:, pin_col] = pin_values
        phi_s = phi_w[cols]

    f = C @ phi_w + phi_b
    sgn = 2.0 * y - 1.0
    loglik = float(np.sum(np.minimum(sgn * f, 0.0) - np.log1p(np.exp(-np.abs(f)))))

    vt = std_theta * std_theta
    vp = std_phi * std_phi
    n_theta = ks * (D + 1)
    n_phi = K + 1
    theta_sq = float(np.sum(theta_w * theta_w) + np.sum(theta_b * theta_b))
    phi_sq = float(np.sum(phi_w * phi_w) + phi_b * phi_b)
    logprior = (-0.5 * theta_sq / vt - 0.5 * n_theta * np.log(2.0 * np.pi * vt)
                - 0.5 * phi_sq / vp - 0.5 * n_phi * np.log(2.0 * np.pi * vp))

    resid = y - sigmoid(f)                # N
    g_phi_w = C.T @ resid - phi_w / vp
    g_phi_b = float(np.sum(resid)) - phi_b / vp
    dZ = (resid[:, None] * phi_s[None, :]) * Cs * (1.0 - Cs)
    g_theta_w = dZ.T @ X - theta_w / vt
    g_theta_b = dZ.sum(axis=0) - theta_b / vt

    grad = np.concatenate([g_theta_w.ravel(), g_theta_b, g_phi_w, [g_phi_b]])
    return loglik + logprior, grad


def row_dists(mat, idx, metric_id, scale):
    """Distances from row ``idx`` of ``mat`` to every row.

    metric_id: 0 euclidean, 1 cosine on pre-normalized rows (1 - dot),
    2 absolute, 3 percent on pre-rounded rows (mean disagreement).
    ``scale`` divides absolute-sum distances (1.0 except percent, where it is
    the element count).
    """
    v = mat[idx]
    if metric_id == 0:
        diff = mat - v
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if metric_id == 1:
        return 1.0 - mat @ v
    diff = np.abs(mat - v)
    return diff.sum(axis=1) / scale
