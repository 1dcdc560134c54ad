"""Brute-force reference solvers used to cross-check the closed forms.

They are deliberately slow and share no code with the solvers they check.
"""

import itertools

import numpy as np


def projected_gradient_qp(sigma, v, u, tol=1e-14, max_iter=200_000):
    """Minimize ``w' Sigma w`` on ``{V' w = U}`` by projected gradient descent.

    Feasibility is restored after every step by the Euclidean projection
    ``w - V (V'V)^{-1} (V'w - U)``.
    """
    sigma = np.asarray(sigma, dtype=float)
    v = np.asarray(v, dtype=float).reshape(sigma.shape[0], -1)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    gram_inv = np.linalg.inv(v.T @ v)

    def project(w):
        return w - v @ (gram_inv @ (v.T @ w - u))

    step = 1.0 / (2.0 * np.linalg.eigvalsh(sigma)[-1])
    w = project(np.zeros(sigma.shape[0]))
    for _ in range(max_iter):
        new = project(w - step * 2.0 * sigma @ w)
        if np.linalg.norm(new - w) <= tol * (1.0 + np.linalg.norm(w)):
            w = new
            break
        w = new
    return w, float(w @ sigma @ w)


def feasible_point(v, u, rng, noise=1.0):
    """Random point of ``{V' w = U}``: least-squares solution plus null-space noise."""
    v = np.asarray(v, dtype=float)
    base = np.linalg.lstsq(v.T, u, rcond=None)[0]
    q, _ = np.linalg.qr(v, mode="complete")
    null = q[:, v.shape[1]:]
    return base + null @ (noise * rng.standard_normal(null.shape[1]))


def grid_box_min(a, lower, upper, step, radius):
    """Smallest ``U' A U`` over grid points of a box clipped to ``[-radius, radius]``.

    Box edges are always included in the grid so corner solutions are hit
    exactly.
    """
    a = np.asarray(a, dtype=float)
    axes = []
    for lo, hi in zip(lower, upper):
        lo_c, hi_c = max(lo, -radius), min(hi, radius)
        pts = np.arange(lo_c, hi_c + 0.5 * step, step)
        pts = np.unique(np.clip(np.append(pts, [lo_c, hi_c]), lo_c, hi_c))
        axes.append(pts)
    best_val, best_u = np.inf, None
    rest = np.array(list(itertools.product(*axes[1:]))) if len(axes) > 1 else np.empty((1, 0))
    # chunk over the first axis to bound memory
    for first in axes[0]:
        pts = np.column_stack([np.full(len(rest), first), rest])
        vals = np.einsum("ij,jk,ik->i", pts, a, pts)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_u = float(vals[i]), pts[i]
    return best_u, best_val


def dense_block_inverse(a, split):
    """Blocks of ``inv(a)`` cut at ``split``."""
    inv = np.linalg.inv(a)
    return inv[:split, :split], inv[:split, split:], inv[split:, :split], inv[split:, split:]


def poisson_series_scaling(rho, terms=60, tol=1e-13):
    """Scaling for Poisson(1) weights by plain bisection on the truncated series."""
    j = np.arange(terms)
    log_pmf = -1.0 - np.array([np.sum(np.log(np.arange(1, t + 1))) for t in j])
    pmf = np.exp(log_pmf)

    def g(x):
        return float(np.sum(pmf / (1.0 + rho * j * x)))

    lo, hi = 0.0, 1.0
    while g(hi) > 1.0 - rho:
        hi *= 2.0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if g(mid) > 1.0 - rho:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
