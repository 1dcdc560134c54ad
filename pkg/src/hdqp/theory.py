"""Deterministic predictions for plug-in quadratic programs.

All functions take the population Gram matrix ``M = V' Sigma^{-1} V`` and
targets ``U``. The mean constraint ``w' mu = mu_p`` sits in column
``mean_index`` (1-based, default: the last column); ``e_k`` below is the
unit vector at that position.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DomainError, SingularM, SingularN
from .qp_core import PIVOT_RTOL

REGIMES = ("gaussian_exact", "elliptical_asymptotic", "bootstrap", "correlated")


@dataclass(frozen=True)
class Prediction:
    """A named prediction with the inputs used to compute it."""

    name: str
    value: object
    regime: str
    inputs_digest: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")


def _m_inverse(m, err=SingularM, name="M"):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    eig = np.linalg.eigvalsh(0.5 * (m + m.T))
    if np.min(np.abs(eig)) <= PIVOT_RTOL * np.max(np.abs(eig)):
        raise err(f"{name} is singular", factor=name)
    inv = linalg.inv(m)
    return 0.5 * (inv + inv.T)


def _unit(k, mean_index):
    idx = k - 1 if mean_index is None else mean_index - 1
    if not 0 <= idx < k:
        raise IndexError(f"mean index {mean_index} outside 1..{k}")
    e = np.zeros(k)
    e[idx] = 1.0
    return e, idx


def gaussian_risk_df(n, p, k):
    """Degrees of freedom of the chi-square factor, ``n - 1 - p + k``."""
    df = n - 1 - p + k
    if df <= 0:
        raise DomainError(f"n - 1 - p + k must be positive, got {df}")
    return df


def gaussian_risk_factor(n, p, k):
    """Mean ratio of plug-in risk to oracle risk for Gaussian data.

    The ratio is distributed as ``chi2(n - 1 - p + k) / (n - 1)``, so its
    mean is ``(n - 1 - p + k) / (n - 1)``.
    """
    return gaussian_risk_df(n, p, k) / (n - 1)


def frontier_value(m, u):
    """Population minimal risk ``U' M^{-1} U``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return float(u @ _m_inverse(m) @ u)


def oracle_mean_penalty(m, u, alpha, mean_index=None):
    """Risk drop caused by estimating the mean alone.

    ``alpha (U' M^{-1} e_k)^2 / (1 + alpha e_k' M^{-1} e_k)``.
    """
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    m_inv = _m_inverse(m)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    e, idx = _unit(len(u), mean_index)
    cross = u @ m_inv @ e
    return float(alpha * cross**2 / (1.0 + alpha * m_inv[idx, idx]))


def gaussian_emp_frontier(m, u, n, p, mean_index=None):
    """Expected plug-in risk for Gaussian data at finite ``n``.

    The covariance factor ``1 - (p - k)/(n - 1)`` multiplies the oracle risk
    with the mean penalty evaluated at ``alpha = p / n``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    k = len(u)
    factor = gaussian_risk_factor(n, p, k)
    return factor * (frontier_value(m, u) - oracle_mean_penalty(m, u, p / n, mean_index))


def predicted_emp_frontier(m, u, rho_n, s, kappa_n=None, mean_index=None):
    """Asymptotic plug-in risk for elliptical data.

    ``(1/S) (fTheo - (kappa/S)(e_k' M^{-1} U)^2 / (1 + (kappa/S) e_k' M^{-1} e_k))``
    with ``kappa = rho_n / (1 - rho_n)`` unless given. Returns 0 for
    ``S = inf``.
    """
    if not 0.0 <= rho_n < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho_n}")
    if not s > 0:
        raise DomainError("scaling must be positive")
    if np.isinf(s):
        return 0.0
    if kappa_n is None:
        kappa_n = rho_n / (1.0 - rho_n)
    f_theo = frontier_value(m, u)
    return (f_theo - oracle_mean_penalty(m, u, kappa_n / s, mean_index)) / s


def predicted_weight_bias(sigma, v, m, u, s, kappa_n, mean_index=None):
    """Bias direction ``w_b`` and magnitude ``zeta`` of plug-in weights.

    ``w_b = Sigma^{-1} V M^{-1} e_k`` and
    ``zeta = e_k' M^{-1} U / (1 + (kappa/S) e_k' M^{-1} e_k)``; for any
    fixed ``gamma`` the plug-in ``gamma' w`` tends to
    ``gamma' w_theo - zeta (kappa/S) gamma' w_b``.
    """
    m_inv = _m_inverse(m)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    e, idx = _unit(len(u), mean_index)
    v = np.asarray(v, dtype=float).reshape(np.shape(sigma)[0], -1)
    w_b = linalg.solve(sigma, v @ (m_inv @ e), assume_a="pos")
    c = kappa_n / s
    zeta = float((e @ m_inv @ u) / (1.0 + c * m_inv[idx, idx]))
    return w_b, zeta


def predicted_weights(sigma, v, m, u, s, kappa_n, mean_index=None):
    """Predicted limit of the plug-in weight vector."""
    m_inv = _m_inverse(m)
    v = np.asarray(v, dtype=float).reshape(np.shape(sigma)[0], -1)
    w_theo = linalg.solve(sigma, v @ (m_inv @ np.atleast_1d(u)), assume_a="pos")
    w_b, zeta = predicted_weight_bias(sigma, v, m, u, s, kappa_n, mean_index)
    return w_theo - zeta * (kappa_n / s) * w_b


def predicted_realized_returns(m, u, s, kappa_n, mu_p, mean_index=None):
    """Predicted ``mu' w`` of the plug-in portfolio targeting ``mu_p``.

    ``U`` supplies the other targets; its mean entry is overwritten by
    ``mu_p``.
    """
    m_inv = _m_inverse(m)
    u = np.array(np.atleast_1d(u), dtype=float)
    _, idx = _unit(len(u), mean_index)
    u[idx] = mu_p
    c = kappa_n / s
    denom = 1.0 + c * m_inv[idx, idx]
    others = np.delete(np.arange(len(u)), idx)
    cross = float(u[others] @ m_inv[idx, others])
    return mu_p / denom - c * cross / denom


def n_gamma(sigma, v_hat, gamma):
    """``(V_g' Sigma^{-1} V_g)^{-1}`` with ``V_g = [V_hat, gamma]``."""
    vg = np.column_stack([np.asarray(v_hat, dtype=float).reshape(len(gamma), -1), gamma])
    gram = vg.T @ linalg.solve(sigma, vg, assume_a="pos")
    return _m_inverse(gram, SingularN, "bordered Gram matrix")


def conditional_weight_expectation(n_mat, u):
    """``E(gamma' w_emp | mu_hat)`` for Gaussian data.

    ``-sum_i u_i N(i, k+1) / N(k+1, k+1)`` where ``N`` is the
    ``(k+1) x (k+1)`` matrix from :func:`n_gamma`.
    """
    n_mat = np.atleast_2d(np.asarray(n_mat, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if n_mat.shape != (len(u) + 1, len(u) + 1):
        raise ValueError("N must be (k+1) x (k+1)")
    try:
        linalg.cholesky(0.5 * (n_mat + n_mat.T))
    except linalg.LinAlgError:
        raise SingularN("N is not positive definite", factor="N") from None
    corner = n_mat[-1, -1]
    if corner <= PIVOT_RTOL * np.max(np.abs(n_mat)):
        raise SingularN("N has a vanishing last diagonal entry", factor="N")
    return float(-(u @ n_mat[:-1, -1]) / corner)


def summarize(m, u, n, p, s=None, kappa_n=None, regime="elliptical_asymptotic", mean_index=None):
    """Frontier predictions bundled as :class:`Prediction` records."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    k = len(u)
    rho = p / n
    if s is None:
        s = 1.0 / (1.0 - rho)
    if kappa_n is None:
        kappa_n = rho / (1.0 - rho)
    digest = {"n": n, "p": p, "k": k, "rho": rho, "S": s, "kappa": kappa_n}
    _, idx = _unit(k, mean_index)
    if regime == "gaussian_exact":
        emp = gaussian_emp_frontier(m, u, n, p, mean_index)
    else:
        emp = predicted_emp_frontier(m, u, rho, s, kappa_n, mean_index)
    return [
        Prediction("f_theo", frontier_value(m, u), regime, digest),
        Prediction("f_emp", emp, regime, digest),
        Prediction("realized_return", predicted_realized_returns(m, u, s, kappa_n, u[idx], mean_index), regime, digest),
    ]
