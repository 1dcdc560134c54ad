"""Bias-corrected plug-in estimators of optimal weights and risk.

Plug-in weights solve the quadratic program with ``mu_hat`` and
``Sigma_hat``. In high dimension the Gram matrix ``M_hat`` of the
constraints is inflated along the mean direction by ``kappa_n`` and scaled
by the ellipticity factor ``S``. The corrections below remove both
effects from a single sample, without knowing the ellipticity law.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import spectral
from .errors import DegenerateLambda, DegenerateSample, SingularMatrix
from .qp_core import PIVOT_RTOL, cholesky_factor

PSD_FLOOR_RTOL = 1e-8
TWO_FORM_RTOL = 1e-8
LAMBDA_FLOOR = 1e-8


def estimate_lambda_sq(sample, center=None):
    """``||X_i - c||^2 / trace(Sigma_hat)`` for every observation.

    ``center`` defaults to ``mu_hat``; passing the true mean gives the
    known-mean variant.
    """
    data = sample.data
    center = sample.mu_hat if center is None else np.asarray(center, dtype=float)
    trace = float(np.trace(sample.sigma_hat))
    if not trace > 0:
        raise DegenerateSample("sample covariance has zero trace")
    resid = data - center
    return np.einsum("ij,ij->i", resid, resid) / trace


def estimate_limit_scaling(sample, lambda_sq=None):
    """Root ``S_hat`` of the discretized fixed-point equation at ``rho_n = p/n``."""
    if lambda_sq is None:
        lambda_sq = estimate_lambda_sq(sample)
    return spectral.solve_empirical(lambda_sq, sample.p / sample.n).value


def m_tilde(m_hat, kappa_n, mean_index=None, floor=None):
    """``M_hat - kappa_n e_k e_k'`` with eigenvalues clipped at ``floor``.

    ``floor`` defaults to ``1e-8`` times the spectral norm of the
    unrepaired matrix.

    Returns
    -------
    (matrix, repaired) : (ndarray, bool)
    """
    m_hat = np.atleast_2d(np.asarray(m_hat, dtype=float))
    k = m_hat.shape[0]
    idx = k - 1 if mean_index is None else mean_index - 1
    out = 0.5 * (m_hat + m_hat.T)
    out[idx, idx] -= kappa_n
    vals, vecs = np.linalg.eigh(out)
    if floor is None:
        floor = PSD_FLOOR_RTOL * np.max(np.abs(vals))
    if vals.min() >= floor:
        return out, False
    repaired = (vecs * np.maximum(vals, floor)) @ vecs.T
    return 0.5 * (repaired + repaired.T), True


def _sym_inverse(mat, name):
    mat = np.atleast_2d(mat)
    try:
        chol = linalg.cho_factor(mat, lower=True)
    except linalg.LinAlgError:
        raise SingularMatrix(f"{name} is not positive definite", factor=name) from None
    diag = np.abs(np.diag(chol[0])) ** 2
    if diag.min() <= PIVOT_RTOL * np.abs(mat).max():
        raise SingularMatrix(f"{name} is numerically singular", factor=name)
    inv = linalg.cho_solve(chol, np.eye(mat.shape[0]))
    return 0.5 * (inv + inv.T)


def _two_form_check(sinv_v, m_tilde_inv, m_hat_inv, u, kappa_n, idx, direct):
    """Compare ``direct`` with ``w_naive + kappa z w_b``."""
    e = np.zeros(len(u))
    e[idx] = 1.0
    z = float(e @ m_tilde_inv @ u) / (1.0 + kappa_n * m_tilde_inv[idx, idx])
    other = sinv_v @ (m_hat_inv @ u) + kappa_n * z * (sinv_v @ (m_tilde_inv @ e))
    scale = max(np.linalg.norm(direct), np.finfo(float).tiny)
    if np.linalg.norm(other - direct) > TWO_FORM_RTOL * scale:
        raise SingularMatrix("corrected weights disagree between the two algebraic forms", factor="M_tilde")


def corrected_weights(sigma_hat, v_hat, m_tilde_mat, u, kappa_n=None, mean_index=None):
    """``Sigma_hat^{-1} V_hat M_tilde^{-1} U``.

    When ``kappa_n`` is given the result is cross-checked against
    ``w_naive + kappa_n z w_b``, which must agree unless ``M_tilde`` was
    repaired (pass ``kappa_n=None`` in that case).
    """
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    v_hat = np.asarray(v_hat, dtype=float).reshape(sigma_hat.shape[0], -1)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    try:
        chol = cholesky_factor(sigma_hat, "Sigma_hat")
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc), factor="Sigma_hat") from None
    sinv_v = linalg.cho_solve(chol, v_hat)
    mt_inv = _sym_inverse(m_tilde_mat, "M_tilde")
    weights = sinv_v @ (mt_inv @ u)
    if kappa_n is not None:
        idx = len(u) - 1 if mean_index is None else mean_index - 1
        m_hat = v_hat.T @ sinv_v
        _two_form_check(sinv_v, mt_inv, _sym_inverse(0.5 * (m_hat + m_hat.T), "M_hat"), u, kappa_n, idx, weights)
    return weights


def corrected_frontier(f_naive, m_tilde_mat, u, kappa_n, s_hat, mean_index=None):
    """``S_hat (f_naive + kappa (e_k' M_tilde^{-1} U)^2 / (1 + kappa e_k' M_tilde^{-1} e_k))``."""
    if not s_hat > 0:
        raise ValueError("S_hat must be positive")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    idx = len(u) - 1 if mean_index is None else mean_index - 1
    mt_inv = _sym_inverse(m_tilde_mat, "M_tilde")
    cross = float(mt_inv[idx] @ u)
    return float(s_hat * (f_naive + kappa_n * cross**2 / (1.0 + kappa_n * mt_inv[idx, idx])))


def robust_scatter(sample, center, lambda_sq_hat, floor=LAMBDA_FLOOR):
    """``(1/n) sum (X_i - c)(X_i - c)' / lambda_i^2``."""
    lam = np.asarray(lambda_sq_hat, dtype=float)
    if np.any(lam < floor):
        raise DegenerateLambda(f"{int(np.sum(lam < floor))} squared ellipticities below {floor:g}")
    resid = (sample.data - np.asarray(center, dtype=float)) / np.sqrt(lam)[:, None]
    scatter = resid.T @ resid / sample.n
    return 0.5 * (scatter + scatter.T)


@dataclass
class CorrectionReport:
    """Naive and corrected solutions for one sample and one target vector.

    :meth:`csv_row` flattens the scalar fields in the order of
    :func:`csv_header`: ``kappa_n, s_hat, f_naive, f_corrected,
    psd_repair_applied``, then the upper triangles of ``m_hat`` and
    ``m_tilde`` row by row. Weight vectors are not serialized.
    """

    kappa_n: float
    lambda_sq_hat: np.ndarray
    s_hat: float
    m_hat: np.ndarray
    m_tilde: np.ndarray
    w_naive: np.ndarray
    w_corrected: np.ndarray
    f_naive: float
    f_corrected: float
    psd_repair_applied: bool

    def csv_row(self):
        iu = np.triu_indices(self.m_hat.shape[0])
        scalars = [self.kappa_n, self.s_hat, self.f_naive, self.f_corrected, int(self.psd_repair_applied)]
        return scalars + self.m_hat[iu].tolist() + self.m_tilde[iu].tolist()


def csv_header(k):
    """Column names matching :meth:`CorrectionReport.csv_row`."""
    iu = zip(*np.triu_indices(k))
    pairs = [f"{i + 1}{j + 1}" for i, j in iu]
    return (
        ["kappa_n", "s_hat", "f_naive", "f_corrected", "psd_repair_applied"]
        + [f"m_hat_{ij}" for ij in pairs]
        + [f"m_tilde_{ij}" for ij in pairs]
    )


def correct_sample(sample, v_fixed, u_fixed, mu_p_grid, lambda_sq=None, kappa_n=None, check_identity=True):
    """Naive and corrected solutions along a grid of target means.

    The mean constraint ``w' mu_hat = mu_p`` is appended after the fixed
    constraints ``V_fixed' w = U_fixed``. ``Sigma_hat`` is factored once
    for the whole grid.

    Returns
    -------
    list of CorrectionReport, one per grid point.
    """
    p, n = sample.p, sample.n
    v_fixed = np.asarray(v_fixed, dtype=float).reshape(p, -1)
    u_fixed = np.atleast_1d(np.asarray(u_fixed, dtype=float))
    rho_n = p / n
    if kappa_n is None:
        kappa_n = spectral.kappa(rho_n)
    if lambda_sq is None:
        lambda_sq = estimate_lambda_sq(sample)
    s_hat = spectral.solve_empirical(lambda_sq, rho_n).value

    v_hat = np.column_stack([v_fixed, sample.mu_hat])
    try:
        chol = cholesky_factor(sample.sigma_hat, "Sigma_hat")
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc), factor="Sigma_hat") from None
    sinv_v = linalg.cho_solve(chol, v_hat)
    m_hat = v_hat.T @ sinv_v
    m_hat = 0.5 * (m_hat + m_hat.T)
    mh_inv = _sym_inverse(m_hat, "M_hat")
    mt, repaired = m_tilde(m_hat, kappa_n)
    mt_inv = _sym_inverse(mt, "M_tilde")
    k = m_hat.shape[0]

    reports = []
    for mu_p in np.atleast_1d(mu_p_grid):
        u = np.append(u_fixed, mu_p)
        w_naive = sinv_v @ (mh_inv @ u)
        w_corr = sinv_v @ (mt_inv @ u)
        if check_identity and not repaired:
            _two_form_check(sinv_v, mt_inv, mh_inv, u, kappa_n, k - 1, w_corr)
        f_naive = float(u @ mh_inv @ u)
        cross = float(mt_inv[-1] @ u)
        f_corr = s_hat * (f_naive + kappa_n * cross**2 / (1.0 + kappa_n * mt_inv[-1, -1]))
        reports.append(
            CorrectionReport(
                kappa_n=kappa_n, lambda_sq_hat=lambda_sq, s_hat=s_hat, m_hat=m_hat, m_tilde=mt,
                w_naive=w_naive, w_corrected=w_corr, f_naive=f_naive, f_corrected=float(f_corr),
                psd_repair_applied=repaired,
            )
        )
    return reports
