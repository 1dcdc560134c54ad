"""Synthetic observation matrices and their sample moments.

Three models share one generation path. A standard Gaussian block ``Y``
(n x p) is always drawn first from the seed's Gaussian stream, then

* gaussian:    ``X = mu + Y Sigma^{1/2}``
* elliptical:  ``X_i = mu + lambda_i (Y Sigma^{1/2})_i``, with the
  ellipticity drawn from a separate stream
* correlated:  ``X = e mu' + Lambda Y Sigma^{1/2}``

so that a point-mass ellipticity of one, or ``Lambda = I``, reproduces the
Gaussian sampler bit for bit.
"""

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from . import rng as rng_mod
from .errors import (
    DegreesOfFreedomTooSmall,
    DomainError,
    InvalidAlpha,
    NotPositiveDefinite,
    RankDeficientLambda,
    RankOutOfBounds,
)


def sample_moments(data):
    """Column mean and the 1/(n-1) sample covariance of ``data``."""
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    mu_hat = data.mean(axis=0)
    centered = data - mu_hat
    sigma_hat = centered.T @ centered / (n - 1)
    sigma_hat = 0.5 * (sigma_hat + sigma_hat.T)
    return mu_hat, sigma_hat


@dataclass(frozen=True)
class LambdaLaw:
    """Law of the ellipticity ``lambda_i``, normalized so ``E(lambda^2) = 1``.

    Use the constructors :meth:`point_mass`, :meth:`scaled_t` and
    :meth:`empirical` rather than the raw fields.
    """

    tag: str
    value: float = 1.0
    tau: tuple = ()

    @classmethod
    def point_mass(cls, c=1.0):
        if c <= 0:
            raise DomainError("point mass must be positive")
        return cls("point_mass", value=float(c))

    @classmethod
    def scaled_t(cls, df=6.0):
        if df <= 2:
            raise DegreesOfFreedomTooSmall(f"scaled t needs df > 2, got {df}")
        return cls("scaled_t", value=float(df))

    @classmethod
    def empirical(cls, tau):
        """Squared ellipticities given as data; rescaled to mean one.

        When the vector has exactly ``n`` entries the sampler assigns
        ``lambda_i^2 = tau_i`` in order (fixed ellipticity); otherwise it
        resamples from the vector with replacement.
        """
        tau = np.asarray(tau, dtype=float)
        if tau.size == 0 or np.any(tau <= 0):
            raise DomainError("empirical ellipticities must be positive")
        return cls("empirical", tau=tuple((tau / tau.mean()).tolist()))

    @property
    def t_scale(self):
        """Multiplier on a Student t draw so that ``E(lambda^2) = 1``."""
        return np.sqrt((self.value - 2.0) / self.value)

    def draw_lambda_sq(self, n, gen):
        if self.tag == "point_mass":
            return np.full(n, self.value)
        if self.tag == "scaled_t":
            lam = self.t_scale * gen.standard_t(self.value, size=n)
            return lam * lam
        if self.tag == "empirical":
            tau = np.asarray(self.tau)
            if tau.size == n:
                return tau.copy()
            return gen.choice(tau, size=n, replace=True)
        raise ValueError(f"unknown ellipticity law {self.tag!r}")

    def describe(self):
        if self.tag == "empirical":
            return f"empirical({len(self.tau)})"
        return f"{self.tag}({self.value:g})"


@dataclass
class SampleSet:
    """An ``n x p`` observation matrix with its sample moments."""

    data: np.ndarray
    model: str
    seed: int
    lambda_sq_true: np.ndarray = None
    law: str = ""
    mu_hat: np.ndarray = field(init=False)
    sigma_hat: np.ndarray = field(init=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        self.mu_hat, self.sigma_hat = sample_moments(self.data)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def p(self):
        return self.data.shape[1]

    def to_csv(self, path):
        """Write the observations to ``path`` and metadata to ``path.meta``."""
        path = Path(path)
        np.savetxt(path, self.data, delimiter=",", fmt="%.17g")
        meta = {"model": self.model, "seed": self.seed, "n": self.n, "p": self.p, "law": self.law}
        lines = [f"{k}={v}" for k, v in meta.items()]
        path.with_name(path.name + ".meta").write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        data = np.loadtxt(path, delimiter=",", ndmin=2)
        meta = {}
        for line in path.with_name(path.name + ".meta").read_text().splitlines():
            if line.strip():
                key, _, value = line.partition("=")
                meta[key.strip()] = value.strip()
        if data.shape != (int(meta["n"]), int(meta["p"])):
            raise ValueError(f"{path}: data shape {data.shape} does not match metadata")
        return cls(data=data, model=meta["model"], seed=int(meta["seed"]), law=meta.get("law", ""))


def toeplitz_sigma(p, alpha):
    """Covariance with entries ``alpha ** |i - j|``."""
    if not 0.0 <= alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in [0, 1), got {alpha}")
    if p < 1:
        raise ValueError("p must be at least 1")
    return linalg.toeplitz(alpha ** np.arange(p, dtype=float))


def sorted_eigh(sigma):
    """Eigenpairs in increasing eigenvalue order, first nonzero component positive."""
    vals, vecs = np.linalg.eigh(sigma)
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    for j in range(vecs.shape[1]):
        nz = np.flatnonzero(np.abs(vecs[:, j]) > 1e-14)
        if nz.size and vecs[nz[0], j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vals, vecs


def build_constraints(sigma, idx_v1, idx_beta2, weight):
    """Constraint vector ``v1`` and mean ``mu`` from eigenvectors of ``sigma``.

    ``idx_v1`` and ``idx_beta2`` are 1-based ranks counted from the smallest
    eigenvalue. Returns ``(v1, mu)`` with
    ``mu = sqrt(weight) v1 + sqrt(1 - weight) beta2``.
    """
    p = sigma.shape[0]
    for idx in (idx_v1, idx_beta2):
        if not 1 <= idx <= p:
            raise RankOutOfBounds(f"eigen-rank {idx} outside 1..{p}")
    if not 0.0 <= weight <= 1.0:
        raise DomainError(f"weight must be in [0, 1], got {weight}")
    _, vecs = sorted_eigh(sigma)
    v1 = vecs[:, idx_v1 - 1].copy()
    beta2 = vecs[:, idx_beta2 - 1]
    mu = np.sqrt(weight) * v1 + np.sqrt(1.0 - weight) * beta2
    return v1, mu


def sqrt_psd(sigma):
    """Symmetric square root of a positive-definite matrix."""
    vals, vecs = np.linalg.eigh(sigma)
    if vals.min() <= 0:
        raise NotPositiveDefinite(f"smallest eigenvalue {vals.min():.3g} is not positive")
    root = (vecs * np.sqrt(vals)) @ vecs.T
    return 0.5 * (root + root.T)


def _gaussian_block(n, sigma, seed, sigma_root=None):
    p = sigma.shape[0]
    if n <= p:
        warnings.warn(f"n={n} <= p={p}: the sample covariance is singular", stacklevel=3)
    root = sqrt_psd(sigma) if sigma_root is None else sigma_root
    y = rng_mod.generator(seed, rng_mod.STREAM_GAUSSIAN).standard_normal((n, p))
    return y @ root


def sample_gaussian(n, mu, sigma, seed, sigma_root=None):
    """``n`` i.i.d. rows from ``N(mu, sigma)``.

    ``sigma_root`` may pass a precomputed symmetric root to skip the
    eigendecomposition in Monte Carlo loops.
    """
    z = _gaussian_block(n, sigma, seed, sigma_root)
    return SampleSet(data=z + mu, model="gaussian", seed=int(seed), law="point_mass(1)")


def sample_elliptical(n, mu, sigma, law, seed, sigma_root=None):
    """Rows ``mu + lambda_i Sigma^{1/2} Y_i`` with ``lambda_i^2`` drawn from ``law``."""
    z = _gaussian_block(n, sigma, seed, sigma_root)
    tau = law.draw_lambda_sq(n, rng_mod.generator(seed, rng_mod.STREAM_ELLIPTICITY))
    if law.tag == "point_mass" and law.value == 1.0:
        data = z + mu
    else:
        data = np.sqrt(tau)[:, None] * z + mu
    return SampleSet(data=data, model="elliptical", seed=int(seed), lambda_sq_true=tau, law=law.describe())


def sample_correlated(n, mu, sigma, lam, seed, sigma_root=None):
    """Rows mixed in time: ``X = e mu' + Lambda Y Sigma^{1/2}``."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (n, n):
        raise ValueError(f"Lambda must be ({n}, {n}), got {lam.shape}")
    sv = np.linalg.svd(lam, compute_uv=False)
    if sv.min() <= 1e-10 * sv.max():
        raise RankDeficientLambda("Lambda is rank deficient")
    z = _gaussian_block(n, sigma, seed, sigma_root)
    diag = np.diag(lam)
    if np.count_nonzero(lam - np.diag(diag)) == 0:
        mixed = z if np.all(diag == 1.0) else diag[:, None] * z
        tau = diag**2
    else:
        mixed = lam @ z
        tau = None
    return SampleSet(data=mixed + mu, model="correlated", seed=int(seed), lambda_sq_true=tau, law="Lambda")


def ar1_mixing(n, phi):
    """Lower-triangular AR(1)-style mixing matrix, rows scaled to unit norm.

    Row ``i`` holds ``phi ** (i - j)`` for ``j <= i``; used as a banded
    temporal-correlation example.
    """
    idx = np.arange(n)
    lag = idx[:, None] - idx[None, :]
    lam = np.where(lag >= 0, float(phi) ** np.clip(lag, 0, None), 0.0)
    lam /= np.linalg.norm(lam, axis=1, keepdims=True)
    return lam
