"""Nonparametric bootstrap of the sample mean and covariance.

A resample is described by its multiplicity vector ``w`` (``w_i`` copies
of row ``i``, ``sum w = n``). As ``n`` grows the empirical law of the
``w_i`` tends to Poisson(1), which puts mass ``1/e`` at zero. The
bootstrap covariance therefore behaves like an elliptical sample with
``tau ~ Poisson(1)`` rather than like the original Gaussian one, and the
bootstrap estimate of high-dimensional bias is inconsistent.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from . import rng as rng_mod
from . import spectral
from .errors import DegenerateResample, DomainError

TV_SUPPORT = 11


@dataclass(frozen=True)
class BootstrapDraw:
    weights: np.ndarray
    mu_star: np.ndarray
    sigma_star: np.ndarray
    seed: int

    @property
    def support_size(self):
        """Number of distinct observations in the resample."""
        return int(np.count_nonzero(self.weights))

    @property
    def degenerate(self):
        return self.support_size <= self.sigma_star.shape[0]

    def quadratic_form(self, v, rhs=None):
        """``v' (Sigma*)^{-1} rhs`` (``rhs`` defaults to ``v``).

        Raises
        ------
        DegenerateResample
            Fewer than ``p + 1`` distinct observations were drawn.
        """
        if self.degenerate:
            raise DegenerateResample(
                f"only {self.support_size} distinct rows for p={self.sigma_star.shape[0]}", )
        rhs = v if rhs is None else rhs
        return float(np.asarray(v) @ linalg.solve(self.sigma_star, rhs, assume_a="pos"))


def multinomial_weights(n, seed):
    """Multiplicities of ``n`` draws with replacement from ``n`` rows."""
    if n < 1:
        raise ValueError("n must be at least 1")
    picks = rng_mod.generator(seed).integers(0, n, size=n)
    return np.bincount(picks, minlength=n)


def weight_empirical_distribution(weights):
    """Fraction of weights equal to ``0, 1, 2, ...``, up to the maximum weight."""
    weights = np.asarray(weights, dtype=np.int64)
    return np.bincount(weights) / weights.size


def tv_to_poisson(histogram, support=TV_SUPPORT):
    """Total-variation distance to Poisson(1) restricted to ``{0, ..., support-1}``."""
    hist = np.zeros(support)
    h = np.asarray(histogram, dtype=float)[:support]
    hist[: h.size] = h
    pmf = stats.poisson.pmf(np.arange(support), 1.0)
    return 0.5 * float(np.sum(np.abs(hist - pmf)))


def bootstrap_moments(sample, weights):
    """Weighted mean ``X' D e / n`` and covariance of a resample.

    The covariance equals ``X' D X / (n-1) - n/(n-1) mu* mu*'``; it is
    computed in the centered form ``(X - mu*)' D (X - mu*) / (n-1)``.
    """
    data = sample.data
    n = data.shape[0]
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,) or np.any(w < 0) or w.sum() != n:
        raise ValueError("weights must be n nonnegative counts summing to n")
    mu_star = w @ data / n
    centered = data - mu_star
    sigma_star = (centered * w[:, None]).T @ centered / (n - 1)
    return mu_star, 0.5 * (sigma_star + sigma_star.T)


def bootstrap_draw(sample, seed):
    weights = multinomial_weights(sample.n, seed)
    mu_star, sigma_star = bootstrap_moments(sample, weights)
    return BootstrapDraw(weights=weights, mu_star=mu_star, sigma_star=sigma_star, seed=int(seed))


def bootstrap_limit_scaling(rho):
    """Scaling ``S*`` of bootstrap quadratic forms for Gaussian data."""
    if not 0.0 < rho < 1.0 - np.exp(-1.0):
        raise DomainError(f"bootstrap scaling needs 0 < rho < 1 - 1/e, got {rho}")
    return spectral.solve_limit_scaling(spectral.WeightDistribution.poisson_one(), rho).value


@dataclass(frozen=True)
class BootstrapPrediction:
    """Limits of bootstrap quadratic forms.

    ``quad_v`` is the limit of ``v'(Sigma*)^{-1} v / v' Sigma^{-1} v``;
    ``cross`` that of ``v'(Sigma*)^{-1} mu*`` for ``v`` orthogonal to the
    mean under ``Sigma^{-1}``; ``quad_mu`` that of ``mu*'(Sigma*)^{-1} mu*``.
    ``kappa_analog = S* - 1`` replaces ``rho / (1 - rho)``.
    """

    quad_v: float
    cross: float
    quad_mu: float
    kappa_analog: float


def bootstrap_predictions(rho, mu_sq):
    if mu_sq < 0:
        raise DomainError("mu' Sigma^{-1} mu must be nonnegative")
    s_star = bootstrap_limit_scaling(rho)
    return BootstrapPrediction(quad_v=s_star, cross=0.0, quad_mu=s_star * mu_sq + s_star - 1.0, kappa_analog=s_star - 1.0)


def elliptical_bootstrap_scaling(lambda_sq_hat, weights, rho):
    """Scaling for a bootstrap of elliptical data.

    The effective squared ellipticities are ``lambda_i^2 w_i``; ``weights``
    may be one draw (n,) or several stacked as rows, which are pooled.
    """
    tau = np.asarray(weights, dtype=float) * np.asarray(lambda_sq_hat, dtype=float)
    return spectral.solve_empirical(tau.ravel(), rho).value
