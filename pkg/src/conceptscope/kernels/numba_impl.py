"""Numba ``@njit`` builds of the hot kernels. Same contracts as ``numpy_impl``."""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _sigmoid_scalar(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def sigmoid(z):
    out = np.empty_like(z)
    flat_in = z.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = _sigmoid_scalar(flat_in[i])
    return out


@njit(cache=True)
def log_sigmoid(z):
    out = np.empty_like(z)
    flat_in = z.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        v = flat_in[i]
        flat_out[i] = min(v, 0.0) - math.log1p(math.exp(-abs(v)))
    return out


@njit(cache=True)
def logp_grad(flat, X, y, K, pin_col, pin_values, std_theta, std_phi):
    N, D = X.shape
    ks = K if pin_col < 0 else K - 1
    nw = ks * D

    grad = np.zeros(flat.shape[0])
    c_row = np.empty(K)
    loglik = 0.0
    vt = std_theta * std_theta
    vp = std_phi * std_phi

    for n in range(N):
        # concept activations; sampled row j maps to full column (j or j+1 past the pin)
        for j in range(ks):
            col = j if (pin_col < 0 or j < pin_col) else j + 1
            z = flat[nw + j]
            for d in range(D):
                z += flat[j * D + d] * X[n, d]
            c_row[col] = _sigmoid_scalar(z)
        if pin_col >= 0:
            c_row[pin_col] = pin_values[n]

        f = flat[nw + ks + K]
        for k in range(K):
            f += flat[nw + ks + k] * c_row[k]

        sf = f if y[n] == 1.0 else -f
        loglik += min(sf, 0.0) - math.log1p(math.exp(-abs(f)))

        r = y[n] - _sigmoid_scalar(f)
        for k in range(K):
            grad[nw + ks + k] += r * c_row[k]
        grad[nw + ks + K] += r
        for j in range(ks):
            col = j if (pin_col < 0 or j < pin_col) else j + 1
            c = c_row[col]
            g = r * flat[nw + ks + col] * c * (1.0 - c)
            for d in range(D):
                grad[j * D + d] += g * X[n, d]
            grad[nw + j] += g

    n_theta = ks * (D + 1)
    n_phi = K + 1
    theta_sq = 0.0
    for i in range(nw + ks):
        theta_sq += flat[i] * flat[i]
        grad[i] -= flat[i] / vt
    phi_sq = 0.0
    for i in range(nw + ks, flat.shape[0]):
        phi_sq += flat[i] * flat[i]
        grad[i] -= flat[i] / vp

    logprior = (-0.5 * theta_sq / vt - 0.5 * n_theta * math.log(2.0 * math.pi * vt)
                - 0.5 * phi_sq / vp - 0.5 * n_phi * math.log(2.0 * math.pi * vp))
    return loglik + logprior, grad


@njit(cache=True)
def row_dists(mat, idx, metric_id, scale):
    n, m = mat.shape
    out = np.empty(n)
    for r in range(n):
        acc = 0.0
        if metric_id == 0:
            for j in range(m):
                d = mat[r, j] - mat[idx, j]
                acc += d * d
            out[r] = math.sqrt(acc)
        elif metric_id == 1:
            for j in range(m):
                acc += mat[r, j] * mat[idx, j]
            out[r] = 1.0 - acc
        else:
            for j in range(m):
                acc += abs(mat[r, j] - mat[idx, j])
            out[r] = acc / scale
    return out
