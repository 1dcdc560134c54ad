"""Closed-form solution of quadratic programs with linear equality constraints.

The problem is::

    minimize    w' Sigma w
    subject to  V' w = U

with ``Sigma`` positive definite (p x p) and ``V`` of full column rank
(p x k). Writing ``M = V' Sigma^{-1} V``, the minimizer is
``Sigma^{-1} V M^{-1} U`` and the minimum is ``U' M^{-1} U``.
"""

from dataclasses import dataclass, field

import warnings

import numpy as np
from scipy import linalg

from .errors import (
    NotPositiveDefinite,
    SingularBlock,
    SingularBorderedMatrix,
    SingularM,
)

# relative pivot threshold for the small k x k systems
PIVOT_RTOL = 1e-12
SYMMETRY_RTOL = 1e-12
MAX_CONSTRAINTS = 16


def cholesky_factor(sigma, name="sigma"):
    """Lower Cholesky factor of a symmetric positive-definite matrix."""
    try:
        return linalg.cho_factor(sigma, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{name} is not positive definite: {exc}") from None


def _check_invertible(mat, err, name):
    """Raise ``err`` when a symmetric matrix has a pivot below the relative floor."""
    eig = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    scale = np.max(np.abs(eig)) if eig.size else 0.0
    if scale == 0.0 or np.min(np.abs(eig)) <= PIVOT_RTOL * scale:
        raise err(f"{name} is singular (eigenvalues {eig})", factor=name)


@dataclass
class ProblemSpec:
    """Population parameters of one equality-constrained QP.

    Parameters
    ----------
    sigma : (p, p) array
        Symmetric positive-definite covariance.
    mu : (p,) array
        Mean vector. By convention the last column of ``v_cols`` equals
        ``mu`` when the mean constraint is active.
    v_cols : (p, k) array
        Constraint vectors as columns.
    u : (k,) array
        Constraint targets.
    """

    sigma: np.ndarray
    mu: np.ndarray
    v_cols: np.ndarray
    u: np.ndarray
    _chol: tuple = field(init=False, repr=False)
    _sigma_inv_v: np.ndarray = field(init=False, repr=False)
    m: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)
        self.v_cols = np.atleast_2d(np.asarray(self.v_cols, dtype=float))
        if self.v_cols.shape[0] != self.sigma.shape[0]:
            self.v_cols = self.v_cols.T
        self.u = np.atleast_1d(np.asarray(self.u, dtype=float))

        p = self.sigma.shape[0]
        if self.sigma.shape != (p, p):
            raise ValueError(f"sigma must be square, got {self.sigma.shape}")
        if self.mu.shape != (p,):
            raise ValueError(f"mu must have shape ({p},), got {self.mu.shape}")
        if self.v_cols.shape[0] != p or self.u.shape != (self.v_cols.shape[1],):
            raise ValueError("v_cols must be (p, k) and u must be (k,)")
        # k = p is allowed: the feasible set is then a single point
        if not 1 <= self.k <= p:
            raise ValueError(f"need 1 <= k <= p, got k={self.k}, p={p}")
        if self.k > MAX_CONSTRAINTS:
            raise ValueError(f"k={self.k} exceeds the supported maximum {MAX_CONSTRAINTS}")

        norm = np.max(np.abs(self.sigma))
        if np.max(np.abs(self.sigma - self.sigma.T)) > SYMMETRY_RTOL * norm:
            raise NotPositiveDefinite("sigma is not symmetric")

        self._chol = cholesky_factor(self.sigma)
        self._sigma_inv_v = linalg.cho_solve(self._chol, self.v_cols)
        m = self.v_cols.T @ self._sigma_inv_v
        self.m = 0.5 * (m + m.T)
        _check_invertible(self.m, SingularM, "M")

    @property
    def p(self):
        return self.sigma.shape[0]

    @property
    def k(self):
        return self.v_cols.shape[1]

    def sigma_solve(self, rhs):
        """``Sigma^{-1} rhs`` through the cached Cholesky factor."""
        return linalg.cho_solve(self._chol, rhs)

    def with_targets(self, u):
        """Same constraints, new targets. Reuses the factorization."""
        new = object.__new__(ProblemSpec)
        new.__dict__.update(self.__dict__)
        new.u = np.atleast_1d(np.asarray(u, dtype=float))
        if new.u.shape != self.u.shape:
            raise ValueError("target vector has the wrong length")
        return new


@dataclass(frozen=True)
class OptimalSolution:
    weights: np.ndarray
    risk: float
    m_inverse: np.ndarray


def solve_eqc(spec):
    """Minimize ``w' Sigma w`` subject to ``V' w = U``.

    Returns
    -------
    OptimalSolution
        ``weights = Sigma^{-1} V M^{-1} U`` and ``risk = U' M^{-1} U``.
    """
    m_chol = linalg.cho_factor(spec.m, lower=True)
    lagrange = linalg.cho_solve(m_chol, spec.u)
    weights = spec._sigma_inv_v @ lagrange
    m_inv = linalg.cho_solve(m_chol, np.eye(spec.k))
    risk = float(spec.u @ lagrange)
    return OptimalSolution(weights=weights, risk=risk, m_inverse=0.5 * (m_inv + m_inv.T))


def bordered_matrix(spec, gamma):
    """The (k+1) x (k+1) Gram matrix of ``[V, gamma]`` under ``Sigma^{-1}``."""
    gamma = np.asarray(gamma, dtype=float)
    vg = np.column_stack([spec.v_cols, gamma])
    gram = vg.T @ spec.sigma_solve(vg)
    return 0.5 * (gram + gram.T)


def linear_functional(spec, gamma):
    """``gamma' w_opt`` computed from the inverse of the bordered Gram matrix.

    Uses ``gamma' w = -(U', 0) Minv e_{k+1} / Minv[k+1, k+1]`` which never
    forms the optimal weights.
    """
    bordered = bordered_matrix(spec, gamma)
    _check_invertible(bordered, SingularBorderedMatrix, "bordered M")
    inv_last = linalg.solve(bordered, np.eye(spec.k + 1)[:, -1], assume_a="sym")
    return float(-(spec.u @ inv_last[:-1]) / inv_last[-1])


def partitioned_inverse(a11, a12, a21, a22):
    """Blocks of the inverse of ``[[a11, a12], [a21, a22]]`` via Schur complements.

    Returns ``(b11, b12, b21, b22)`` with::

        b11 = (a11 - a12 a22^{-1} a21)^{-1}
        b22 = (a22 - a21 a11^{-1} a12)^{-1}
        b12 = -a11^{-1} a12 b22
        b21 = -b22 a21 a11^{-1}
    """
    a11, a12, a21, a22 = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (a11, a12, a21, a22))

    def inv(mat, name):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", linalg.LinAlgWarning)
            lu, piv = linalg.lu_factor(mat, check_finite=True)
        diag = np.abs(np.diag(lu))
        if diag.min() <= PIVOT_RTOL * max(np.abs(mat).max(), np.finfo(float).tiny):
            raise SingularBlock(f"{name} is singular", factor=name)
        return linalg.lu_solve((lu, piv), np.eye(mat.shape[0]))

    a11_inv = inv(a11, "A11")
    a22_inv = inv(a22, "A22")
    b11 = inv(a11 - a12 @ a22_inv @ a21, "A11 - A12 A22^-1 A21")
    b22 = inv(a22 - a21 @ a11_inv @ a12, "A22 - A21 A11^-1 A12")
    b12 = -a11_inv @ a12 @ b22
    b21 = -b22 @ a21 @ a11_inv
    return b11, b12, b21, b22


@dataclass(frozen=True)
class FrontierCurve:
    mu_p: np.ndarray
    risk: np.ndarray
    m_inverse: np.ndarray
    fixed_targets: np.ndarray

    def __iter__(self):
        return iter(zip(self.mu_p.tolist(), self.risk.tolist()))

    def __len__(self):
        return len(self.mu_p)

    def quadratic_coefficients(self):
        """``(a, b, c)`` with ``risk = a mu_p^2 + b mu_p + c``."""
        m_inv = self.m_inverse
        fixed = self.fixed_targets
        a = m_inv[-1, -1]
        b = 2.0 * (fixed @ m_inv[:-1, -1])
        c = fixed @ m_inv[:-1, :-1] @ fixed
        return float(a), float(b), float(c)


def efficient_frontier(sigma, mu, extra_constraints, mu_p_grid):
    """Minimal risk as a function of the target mean ``mu_p``.

    Parameters
    ----------
    sigma, mu : arrays
        Population covariance and mean.
    extra_constraints : tuple ``(V_minus, U_minus)``
        The constraints other than ``w' mu = mu_p``; ``V_minus`` is
        ``(p, k-1)``. Pass ``(None, None)`` for the mean constraint alone.
    mu_p_grid : sequence of float
    """
    grid = np.atleast_1d(np.asarray(mu_p_grid, dtype=float))
    if grid.size == 0:
        raise ValueError("mu_p grid is empty")
    v_minus, u_minus = extra_constraints
    mu = np.asarray(mu, dtype=float)
    if v_minus is None:
        v_minus = np.empty((mu.shape[0], 0))
        u_minus = np.empty(0)
    v_minus = np.asarray(v_minus, dtype=float).reshape(mu.shape[0], -1)
    u_minus = np.atleast_1d(np.asarray(u_minus, dtype=float))
    spec = ProblemSpec(sigma, mu, np.column_stack([v_minus, mu]), np.append(u_minus, grid[0]))
    risks = np.array([solve_eqc(spec.with_targets(np.append(u_minus, t))).risk for t in grid])
    return FrontierCurve(mu_p=grid, risk=risks, m_inverse=solve_eqc(spec).m_inverse, fixed_targets=u_minus)
