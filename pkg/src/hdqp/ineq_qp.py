"""Quadratic programs whose targets range over a box or a union of boxes.

Given the positive-definite form ``A`` (typically ``M^{-1}``), the minimal
risk over a target set ``Q`` is ``inf_{U in Q} U' A U``. Equality
constraints are the singleton case.
"""

import itertools
import re
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConfigError, Infeasible, NotPositiveDefinite
from .estimators import m_tilde as _m_tilde

FACE_ENUMERATION_MAX_K = 8
PG_TOL = 1e-10
PG_MAX_ITER = 200_000
FEAS_TOL = 1e-12


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("lower and upper bounds differ in length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("bounds must not be NaN")
        if np.any(lo > hi):
            raise Infeasible("box has lower > upper in some coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def k(self):
        return self.lower.size

    def contains(self, u, tol=0.0):
        u = np.asarray(u, dtype=float)
        return bool(np.all(u >= self.lower - tol) and np.all(u <= self.upper + tol))

    def project(self, u):
        return np.clip(u, self.lower, self.upper)


@dataclass(frozen=True)
class ConstraintSet:
    """Target set: a singleton, a box, or a finite union of boxes."""

    tag: str
    boxes: tuple

    @classmethod
    def singleton(cls, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if not np.all(np.isfinite(u)):
            raise ValueError("singleton target must be finite")
        return cls("singleton", (Box(u, u),))

    @classmethod
    def box(cls, lower, upper):
        return cls("box", (Box(lower, upper),))

    @classmethod
    def finite_union(cls, boxes):
        boxes = tuple(b if isinstance(b, Box) else Box(*b) for b in boxes)
        if not boxes:
            raise Infeasible("union of zero boxes is empty")
        if len({b.k for b in boxes}) != 1:
            raise ValueError("boxes in a union must share a dimension")
        return cls("finite_union", boxes)

    @property
    def k(self):
        return self.boxes[0].k

    def contains(self, u, tol=0.0):
        return any(b.contains(u, tol) for b in self.boxes)

    def contains_origin(self):
        return self.contains(np.zeros(self.k))


_VECTOR = re.compile(r"^\[(.*)\]$")


def _parse_vector(text):
    m = _VECTOR.match(text.strip())
    if not m:
        raise ConfigError(f"expected a bracketed vector, got {text!r}")
    try:
        return np.array([float(tok) for tok in m.group(1).split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad number in {text!r}: {exc}") from None


def parse_constraint_set(text):
    """Parse ``Q = box; lower = [1, -inf]; upper = [2, inf]``.

    Also accepted: ``Q = singleton; u = [1, 2]`` and
    ``Q = union; lower = [...]; upper = [...]; lower = [...]; upper = [...]``
    where bound pairs are matched in order.
    """
    items = []
    for part in text.split(";"):
        if part.strip():
            key, sep, value = part.partition("=")
            if not sep:
                raise ConfigError(f"missing '=' in {part!r}")
            items.append((key.strip().lower(), value.strip()))
    if not items or items[0][0] != "q":
        raise ConfigError("constraint set must start with 'Q = <kind>'")
    kind = items[0][1].lower()
    rest = items[1:]
    if kind == "singleton":
        values = [v for key, v in rest if key == "u"]
        if len(values) != 1:
            raise ConfigError("singleton needs exactly one 'u = [...]'")
        return ConstraintSet.singleton(_parse_vector(values[0]))
    lowers = [_parse_vector(v) for key, v in rest if key == "lower"]
    uppers = [_parse_vector(v) for key, v in rest if key == "upper"]
    unknown = {key for key, _ in rest} - {"lower", "upper"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    if len(lowers) != len(uppers) or not lowers:
        raise ConfigError("lower/upper bounds must come in pairs")
    if kind == "box":
        if len(lowers) != 1:
            raise ConfigError("a box takes a single lower/upper pair")
        return ConstraintSet.box(lowers[0], uppers[0])
    if kind in ("union", "finite_union"):
        return ConstraintSet.finite_union(list(zip(lowers, uppers)))
    raise ConfigError(f"unknown constraint set kind {kind!r}")


def _check_pd(a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValueError("quadratic form must be square")
    a = 0.5 * (a + a.T)
    try:
        linalg.cholesky(a)
    except linalg.LinAlgError:
        raise NotPositiveDefinite("quadratic form is not positive definite") from None
    return a


def _box_faces(a, box):
    """Exact minimizer over a box by enumerating face patterns.

    Each coordinate is pinned to its lower bound, its upper bound, or left
    free; on the free set the minimizer solves ``A_FF x_F = -A_FB x_B``.
    The best feasible stationary point is the global minimizer because the
    objective is convex.
    """
    k = box.k
    lo, hi = box.lower, box.upper
    choices = []
    for j in range(k):
        if lo[j] == hi[j]:
            choices.append(("lo",))
            continue
        opts = ["free"]
        if np.isfinite(lo[j]):
            opts.append("lo")
        if np.isfinite(hi[j]):
            opts.append("hi")
        choices.append(tuple(opts))

    best_u, best_val = None, np.inf
    scale = 1.0 + np.max(np.abs(np.where(np.isfinite(lo), lo, 0.0)), initial=0.0) \
        + np.max(np.abs(np.where(np.isfinite(hi), hi, 0.0)), initial=0.0)
    for pattern in itertools.product(*choices):
        u = np.zeros(k)
        free = np.array([c == "free" for c in pattern])
        for j, c in enumerate(pattern):
            if c == "lo":
                u[j] = lo[j]
            elif c == "hi":
                u[j] = hi[j]
        if free.any():
            fixed = ~free
            rhs = -a[np.ix_(free, fixed)] @ u[fixed]
            u[free] = linalg.solve(a[np.ix_(free, free)], rhs, assume_a="pos")
        if not box.contains(u, tol=FEAS_TOL * scale):
            continue
        u = box.project(u)
        val = float(u @ a @ u)
        if val < best_val:
            best_u, best_val = u, val
    return best_u, best_val


def _box_projected_gradient(a, box):
    """Projected gradient descent with step ``1 / (2 lambda_max)``."""
    step = 1.0 / (2.0 * np.linalg.eigvalsh(a)[-1])
    u = box.project(np.zeros(box.k))
    for _ in range(PG_MAX_ITER):
        new = box.project(u - step * 2.0 * (a @ u))
        if np.linalg.norm(new - u) <= PG_TOL * (1.0 + np.linalg.norm(u)):
            u = new
            break
        u = new
    else:
        warnings.warn("projected gradient hit the iteration cap", RuntimeWarning, stacklevel=3)
    return u, float(u @ a @ u)


def minimize_over_q(a, q):
    """Minimize ``U' A U`` over the target set ``q``.

    Returns
    -------
    (U_star, value)
    """
    a = _check_pd(a)
    if a.shape[0] != q.k:
        raise ValueError(f"form is {a.shape[0]}-dimensional but Q is {q.k}-dimensional")
    best_u, best_val = None, np.inf
    for box in q.boxes:
        if box.k <= FACE_ENUMERATION_MAX_K:
            u, val = _box_faces(a, box)
        else:
            u, val = _box_projected_gradient(a, box)
        if val < best_val:
            best_u, best_val = u, val
    if best_u is None:
        raise Infeasible("no feasible point found")
    return best_u, max(best_val, 0.0)


def _warn_origin(q):
    if q.contains_origin():
        warnings.warn("target set contains the origin; the minimum is trivially 0", stacklevel=3)


def _inverse(m):
    m = _check_pd(m)
    inv = linalg.inv(m)
    return 0.5 * (inv + inv.T)


def empirical_ineq_frontier(m_hat, q):
    """``inf_{U in Q} U' M_hat^{-1} U``."""
    _warn_origin(q)
    return minimize_over_q(_inverse(m_hat), q)[1]


def deterministic_equivalent(m, s, kappa_n, q, mean_index=None):
    """``inf_{U in Q} U' M0^{-1} U`` with ``M0 = S M + kappa_n e_k e_k'``."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    idx = m.shape[0] - 1 if mean_index is None else mean_index - 1
    m0 = s * m
    m0[idx, idx] += kappa_n
    _warn_origin(q)
    return minimize_over_q(_inverse(m0), q)[1]


def corrected_ineq_frontier(m_hat, kappa_n, s_hat, q, mean_index=None):
    """Consistent estimate of ``inf_{U in Q} U' M^{-1} U`` from ``M_hat``.

    Uses ``(M_hat - kappa_n e_k e_k') / S_hat`` in place of ``M``; the
    difference is repaired to be positive definite when needed.
    """
    mt, _ = _m_tilde(m_hat, kappa_n, mean_index)
    _warn_origin(q)
    return minimize_over_q(s_hat * _inverse(mt), q)[1]


def stability_radius(a, q):
    """``r0 = sqrt(2 G(U0) / c0)`` with ``U0`` the minimizer and ``c0 = lambda_min(A)``.

    For any ``A_hat`` with ``||A_hat - A||_op <= c0 / 3`` the minima over
    ``q`` differ by at most ``||A_hat - A||_op r0^2``.
    """
    a = _check_pd(a)
    _, val = minimize_over_q(a, q)
    c0 = np.linalg.eigvalsh(a)[0]
    return float(np.sqrt(2.0 * val / c0))
