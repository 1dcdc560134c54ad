"""Fixed-point equations for the high-dimensional scaling of quadratic forms.

For a law ``G`` of squared ellipticities ``tau`` and aspect ratio
``rho = p / n`` the scaling ``S`` solves::

    integral dG(tau) / (1 + rho tau S) = 1 - rho

The left side is continuous, convex and decreasing in ``S``, so a root
exists exactly when the mass of ``G`` at zero is below ``1 - rho``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, stats

from . import rng as rng_mod
from .errors import DomainError, NoRoot, RankDeficientLambda

RESIDUAL_TOL = 1e-10
LOWER_BRACKET = 1e-12
POISSON_TAIL = 1e-14


@dataclass(frozen=True)
class WeightDistribution:
    """Law of ``tau = lambda^2`` fed to the fixed-point solver.

    Build instances with :meth:`point_mass`, :meth:`empirical`,
    :meth:`poisson_one` or :meth:`scaled_t_sq`.
    """

    tag: str
    c: float = 1.0
    tau: tuple = ()
    df: float = 0.0

    @classmethod
    def point_mass(cls, c=1.0):
        if not c > 0:
            raise DomainError(f"point mass must be positive, got {c}")
        return cls("point_mass", c=float(c))

    @classmethod
    def empirical(cls, tau):
        tau = np.asarray(tau, dtype=float).ravel()
        if tau.size == 0:
            raise DomainError("empirical law needs at least one atom")
        if np.any(tau <= 0):
            raise DomainError("empirical atoms must be strictly positive; use solve_empirical for zeros")
        return cls("empirical", tau=tuple(tau.tolist()))

    @classmethod
    def poisson_one(cls):
        return cls("poisson_one")

    @classmethod
    def scaled_t_sq(cls, df=6.0):
        if not df > 2:
            raise DomainError(f"scaled t needs df > 2, got {df}")
        return cls("scaled_t_sq", df=float(df))

    @property
    def mean_tau(self):
        if self.tag == "point_mass":
            return self.c
        if self.tag == "empirical":
            return float(np.mean(self.tau))
        # Poisson(1) has mean one; the t law is normalized to E(lambda^2) = 1
        return 1.0

    @property
    def mass_at_zero(self):
        return float(np.exp(-1.0)) if self.tag == "poisson_one" else 0.0

    def g_value(self, rho, x):
        """``integral dG(tau) / (1 + rho tau x)``."""
        if self.tag == "point_mass":
            return 1.0 / (1.0 + rho * self.c * x)
        if self.tag == "empirical":
            return float(np.mean(1.0 / (1.0 + rho * x * np.asarray(self.tau))))
        if self.tag == "poisson_one":
            j = _poisson_support()
            return float(np.sum(stats.poisson.pmf(j, 1.0) / (1.0 + rho * x * j)))
        if self.tag == "scaled_t_sq":
            scale2 = (self.df - 2.0) / self.df
            density = stats.t(self.df).pdf
            val, _ = integrate.quad(
                lambda t: density(t) / (1.0 + rho * x * scale2 * t * t),
                0.0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200,
            )
            return 2.0 * val
        raise ValueError(f"unknown weight law {self.tag!r}")


def _poisson_support():
    last = int(stats.poisson.isf(POISSON_TAIL, 1.0)) + 2
    return np.arange(last + 1, dtype=float)


@dataclass(frozen=True)
class LimitScaling:
    value: float
    rho: float
    residual: float


def _check_rho(rho):
    if not 0.0 < rho < 1.0:
        raise DomainError(f"aspect ratio must lie in (0, 1), got {rho}")


def _solve_level(func, level, mass_at_zero):
    """Root of the decreasing map ``func`` at ``level``."""
    if mass_at_zero >= level:
        raise NoRoot(f"mass {mass_at_zero:.6g} at zero is not below the level {level:.6g}")
    lo = LOWER_BRACKET
    hi = 1.0
    while func(hi) > level:
        lo = hi
        hi *= 2.0
        if hi > 1e300:
            raise NoRoot("no sign change found while bracketing")
    root = optimize.brentq(lambda x: func(x) - level, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return root, abs(func(root) - level)


def solve_limit_scaling(g, rho):
    """Solve the fixed-point equation for ``S`` given the law ``g``.

    Raises
    ------
    DomainError
        ``rho`` outside ``(0, 1)``, or ``rho >= 1 - 1/e`` for the Poisson law.
    NoRoot
        The mass of ``g`` at zero is at least ``1 - rho``.
    """
    _check_rho(rho)
    if g.tag == "poisson_one" and rho >= 1.0 - np.exp(-1.0):
        raise DomainError(f"Poisson(1) scaling needs rho < 1 - 1/e, got {rho}")
    root, residual = _solve_level(lambda x: g.g_value(rho, x), 1.0 - rho, g.mass_at_zero)
    return LimitScaling(value=float(root), rho=float(rho), residual=float(residual))


def empirical_g_value(lambda_sq, rho_n, x):
    """``(1/n) sum 1 / (1 + x tau_i rho_n)``; zero atoms contribute ``1/n``."""
    tau = np.asarray(lambda_sq, dtype=float)
    return float(np.mean(1.0 / (1.0 + x * tau * rho_n)))


def solve_empirical(lambda_sq, rho_n):
    """Root of the discretized equation at level ``1 - rho_n``."""
    _check_rho(rho_n)
    tau = np.asarray(lambda_sq, dtype=float)
    if np.any(tau < 0):
        raise DomainError("squared ellipticities must be nonnegative")
    mass_zero = float(np.mean(tau == 0.0))
    root, residual = _solve_level(lambda x: empirical_g_value(tau, rho_n, x), 1.0 - rho_n, mass_zero)
    return LimitScaling(value=float(root), rho=float(rho_n), residual=float(residual))


def kappa(rho_n):
    """Mean-estimation bias ``rho_n / (1 - rho_n)``."""
    if not 0.0 <= rho_n < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho_n}")
    return rho_n / (1.0 - rho_n)


@dataclass(frozen=True)
class CorrelatedKappa:
    """Monte Carlo estimate of the correlated-data bias.

    ``value`` estimates ``hat m' S^{-1} hat m`` (no centering) and
    ``inverse_form = value / (1 - value)`` the centered-covariance form.
    """

    value: float
    std_error: float
    inverse_form: float
    replicates: int


def kappa_correlated_mc(lam, p, replicates, seed):
    """Bias of ``hat m' Sigma_hat^{-1} hat m`` for data ``Lambda Y Sigma^{1/2}``.

    With ``Lambda = A D B'`` and ``omega = A' e`` the bias is
    ``(1/n) sum omega_i^2 E P(i, i)`` where ``P(i, i) = d_i^2 a_i``,
    ``a_i = Y_i' F^{-1} Y_i / n`` and ``F = Y' D^2 Y / n``. The
    expectation is averaged over ``replicates`` Gaussian draws.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[0]
    if lam.shape != (n, n):
        raise ValueError("Lambda must be square")
    if not p < n:
        raise DomainError(f"need p < n, got p={p}, n={n}")
    if replicates < 2:
        raise ValueError("need at least two replicates for a standard error")
    a_mat, d, _ = np.linalg.svd(lam)
    if d.min() <= 1e-10 * d.max():
        raise RankDeficientLambda("Lambda is rank deficient")
    omega_sq = (a_mat.T @ np.ones(n)) ** 2
    d_sq = d * d

    draws = np.empty(replicates)
    for r in range(replicates):
        y = rng_mod.generator(seed, r).standard_normal((n, p))
        f_mat = (y * d_sq[:, None]).T @ y / n
        chol = np.linalg.cholesky(f_mat)
        z = np.linalg.solve(chol, y.T)
        leverage = d_sq * np.einsum("ij,ij->j", z, z) / n
        draws[r] = np.mean(omega_sq * leverage)
    value = float(draws.mean())
    se = float(draws.std(ddof=1) / np.sqrt(replicates))
    return CorrelatedKappa(value=value, std_error=se, inverse_form=value / (1.0 - value), replicates=replicates)


def mp_edges(rho):
    """Support edges ``((1 - sqrt(rho))^2, (1 + sqrt(rho))^2)``."""
    _check_rho(rho)
    r = np.sqrt(rho)
    return (1.0 - r) ** 2, (1.0 + r) ** 2


def mp_density(x, rho):
    """Marchenko-Pastur density for aspect ratio ``rho`` and unit variance."""
    lo, hi = mp_edges(rho)
    x = np.asarray(x, dtype=float)
    inside = (x > lo) & (x < hi)
    safe = np.where(inside, x, 1.0)
    val = np.sqrt(np.clip((hi - safe) * (safe - lo), 0.0, None)) / (2.0 * np.pi * rho * safe)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out
