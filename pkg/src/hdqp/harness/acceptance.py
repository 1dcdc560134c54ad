"""Acceptance criteria as runnable checks.

Each criterion returns a :class:`CriterionResult` with ``margin`` defined
as tolerance minus observed deviation (positive means pass with room to
spare). The ``fast`` tier uses fewer replicates and, for the correction
criterion, the looser 10% tolerances; ``full`` runs the stated scale.
"""

import csv
import filecmp
import io
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg

from .. import bootstrap, datagen, estimators, ineq_qp, qp_core, spectral, theory
from ..rng import derive_seed, generator
from . import oracles
from .config import DEFAULT_SEED, SCENARIOS
from .runner import run_experiment, run_replicates, summarize

REPORT_FIELDS = ("criterion", "name", "passed", "margin", "detail")

# seed-derivation slots for criteria that do not reuse figure scenarios
SLOT_RISK_FACTOR = 101
SLOT_QUAD_FORM = 102
SLOT_KAPPA = 103
SLOT_BOOT_DATA = 107
SLOT_BOOT_DRAWS = 108
SLOT_WEIGHTS = 109
SLOT_PROPERTIES = 110


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    margin: float
    detail: str

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.name} (margin {self.margin:+.4g}) {self.detail}"


def _pmap(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _setup(size):
    cfg = SCENARIOS[f"{size}_gaussian"]
    sigma = datagen.toeplitz_sigma(cfg.p, cfg.alpha)
    v1, mu = datagen.build_constraints(sigma, *cfg.eig_ranks, cfg.mu_weight)
    return cfg, sigma, datagen.sqrt_psd(sigma), v1, mu


# -- 1: Gaussian covariance factor -------------------------------------------

def risk_factor_ratios(replicates, base_seed, threads=1, mu_p=3.0):
    """Plug-in risk over oracle risk for the small Gaussian setup."""
    cfg, sigma, root, v1, mu = _setup("small")
    chol = linalg.cho_factor(sigma, lower=True)

    def one(r):
        s = datagen.sample_gaussian(cfg.n, mu, sigma, derive_seed(base_seed, SLOT_RISK_FACTOR, r), sigma_root=root)
        v_hat = np.column_stack([v1, s.mu_hat])
        u = np.array([cfg.u1, mu_p])
        emp = qp_core.solve_eqc(qp_core.ProblemSpec(s.sigma_hat, s.mu_hat, v_hat, u))
        m_oracle = v_hat.T @ linalg.cho_solve(chol, v_hat)
        oracle_risk = float(u @ np.linalg.solve(m_oracle, u))
        return float(emp.weights @ s.sigma_hat @ emp.weights) / oracle_risk

    return np.array(_pmap(one, range(replicates), threads))


def criterion_1(tier, base_seed, threads):
    reps = 1000 if tier == "full" else 200
    ratios = risk_factor_ratios(reps, base_seed, threads)
    target = theory.gaussian_risk_factor(250, 100, 2)
    se = ratios.std(ddof=1) / np.sqrt(reps)
    dev = abs(ratios.mean() - target)
    return CriterionResult(1, "Gaussian covariance factor", dev <= 3 * se, 3 * se - dev,
                           f"mean={ratios.mean():.5f} target={target:.5f} se={se:.5f} reps={reps}")


# -- 2: Gaussian quadratic-form scaling ----------------------------------------

def quad_form_ratios(replicates, base_seed, threads=1):
    """``v' Sigma_hat^{-1} v / v' Sigma^{-1} v`` for ``v = v1`` and ``v = mu``."""
    cfg, sigma, root, v1, mu = _setup("large")
    vs = np.column_stack([v1, mu])
    pop = np.einsum("ij,ij->j", vs, linalg.solve(sigma, vs, assume_a="pos"))

    def one(r):
        s = datagen.sample_gaussian(cfg.n, mu, sigma, derive_seed(base_seed, SLOT_QUAD_FORM, r), sigma_root=root)
        emp = np.einsum("ij,ij->j", vs, linalg.solve(s.sigma_hat, vs, assume_a="pos"))
        return emp / pop

    return np.array(_pmap(one, range(replicates), threads))


def criterion_2(tier, base_seed, threads):
    reps = 100 if tier == "full" else 20
    ratios = quad_form_ratios(reps, base_seed, threads).mean(axis=0)
    target = 1.0 / (1.0 - 0.4)
    rel = np.abs(ratios / target - 1.0)
    return CriterionResult(2, "Gaussian quadratic-form scaling", bool(np.all(rel <= 0.02)), 0.02 - rel.max(),
                           f"v1={ratios[0]:.5f} mu={ratios[1]:.5f} target={target:.5f} reps={reps}")


# -- 3: elliptical kappa --------------------------------------------------------

def elliptical_mean_forms(replicates, base_seed, threads=1, df=6.0):
    """``mu_hat' Sigma_hat^{-1} mu_hat`` for centered t data, large setup."""
    cfg, sigma, root, _, _ = _setup("large")
    law = datagen.LambdaLaw.scaled_t(df)
    zero = np.zeros(cfg.p)

    def one(r):
        s = datagen.sample_elliptical(cfg.n, zero, sigma, law, derive_seed(base_seed, SLOT_KAPPA, r), sigma_root=root)
        return float(s.mu_hat @ linalg.solve(s.sigma_hat, s.mu_hat, assume_a="pos"))

    return np.array(_pmap(one, range(replicates), threads))


def criterion_3(tier, base_seed, threads):
    reps = 100 if tier == "full" else 20
    vals = elliptical_mean_forms(reps, base_seed, threads)
    target = spectral.kappa(0.4)
    rel = abs(vals.mean() / target - 1.0)
    return CriterionResult(3, "elliptical kappa", rel <= 0.05, 0.05 - rel,
                           f"mean={vals.mean():.5f} target={target:.5f} reps={reps}")


# -- 4: elliptical dominance ---------------------------------------------------

def criterion_4(tier, base_seed, threads):
    reps = 400 if tier == "full" else 100
    s_t6 = spectral.solve_limit_scaling(spectral.WeightDistribution.scaled_t_sq(6.0), 0.4).value
    grid = (1.0, 3.0, 5.0)
    means = {}
    for name in ("small_t6", "small_gaussian"):
        cfg = SCENARIOS[name].with_(replicates=reps, mu_p_grid=grid, base_seed=base_seed, parallelism=threads)
        means[name] = summarize(run_replicates(cfg))
    ok = s_t6 > 1.0 / 0.6
    margins = [s_t6 - 1.0 / 0.6]
    parts = [f"S_t6={s_t6:.5f}"]
    for mu_p in grid:
        t6 = means["small_t6"][mu_p]["f_naive"][0]
        ga = means["small_gaussian"][mu_p]["f_naive"][0]
        th = means["small_gaussian"][mu_p]["f_theo"][0]
        ok = ok and t6 < ga < th
        margins.extend([ga - t6, th - ga])
        parts.append(f"mu_p={mu_p:g}: t6={t6:.4f} gauss={ga:.4f} theo={th:.4f}")
    return CriterionResult(4, "elliptical dominance", bool(ok), min(margins), "; ".join(parts) + f" reps={reps}")


# -- 5 and 6: correction quality and S_hat consistency --------------------------

def correction_runs(tier, base_seed, threads):
    reps = 1000 if tier == "full" else 100
    out = {}
    for name in ("large_gaussian", "large_t6"):
        cfg = SCENARIOS[name].with_(replicates=reps, mu_p_grid=(1.0, 3.0, 5.0), base_seed=base_seed, parallelism=threads)
        out[name] = run_replicates(cfg)
    return out


def criterion_5(tier, base_seed, threads, runs=None):
    runs = correction_runs(tier, base_seed, threads) if runs is None else runs
    ret_tol, f_tol = (0.05, 0.03) if tier == "full" else (0.10, 0.10)
    ok, margins, parts = True, [], []
    for name, recs in runs.items():
        summ = summarize(recs)
        at5 = summ[5.0]
        naive_bias = abs(at5["returns_naive"][0] - 5.0)
        corr_bias = abs(at5["returns_corrected"][0] - 5.0)
        ok = ok and corr_bias <= ret_tol * naive_bias
        margins.append(ret_tol * naive_bias - corr_bias)
        parts.append(f"{name}: returns bias corrected={corr_bias:.4f} naive={naive_bias:.4f}")
        for mu_p in (1.0, 3.0, 5.0):
            f_corr, f_theo = summ[mu_p]["f_corrected"][0], summ[mu_p]["f_theo"][0]
            rel = abs(f_corr / f_theo - 1.0)
            ok = ok and rel <= f_tol
            margins.append(f_tol - rel)
            parts.append(f"f({mu_p:g}) rel err={rel:.4f}")
    reps = len(next(iter(runs.values()))) // 3
    return CriterionResult(5, "correction quality", bool(ok), min(margins), "; ".join(parts) + f" reps={reps}")


def criterion_6(tier, base_seed, threads, runs=None):
    runs = correction_runs(tier, base_seed, threads) if runs is None else runs
    targets = {
        "large_gaussian": (1.0 / 0.6, 0.03),
        "large_t6": (spectral.solve_limit_scaling(spectral.WeightDistribution.scaled_t_sq(6.0), 0.4).value, 0.05),
    }
    ok, margins, parts = True, [], []
    for name, recs in runs.items():
        s_hat = np.array([r.s_hat for r in recs if r.mu_p == 1.0])
        target, tol = targets[name]
        rel = np.abs(s_hat / target - 1.0)
        worst = rel.max()
        ok = ok and worst <= tol
        margins.append(tol - worst)
        parts.append(
            f"{name}: mean S_hat={s_hat.mean():.5f} target={target:.5f} worst rel={worst:.4f} "
            f"sd rel={np.std(s_hat / target, ddof=1):.4f} within tol={np.mean(rel <= tol):.3f}"
        )
    return CriterionResult(6, "S_hat consistency", bool(ok), min(margins), "; ".join(parts))


# -- 7: bootstrap inconsistency -------------------------------------------------

def bootstrap_statistics(draws, base_seed, threads=1, n=2000, p=600):
    """Quadratic forms of bootstrap resamples of one fixed Gaussian dataset with zero mean."""
    sigma = datagen.toeplitz_sigma(p, 0.4)
    sample = datagen.sample_gaussian(n, np.zeros(p), sigma, derive_seed(base_seed, SLOT_BOOT_DATA))
    _, vecs = datagen.sorted_eigh(sigma)
    v = vecs[:, p // 2]
    pop = float(v @ linalg.solve(sigma, v, assume_a="pos"))

    def one(b):
        d = bootstrap.bootstrap_draw(sample, derive_seed(base_seed, SLOT_BOOT_DRAWS, b))
        return d.quadratic_form(v) / pop, d.quadratic_form(d.mu_star)

    return np.array(_pmap(one, range(draws), threads))


def criterion_7(tier, base_seed, threads):
    draws = 200 if tier == "full" else 50
    stats = bootstrap_statistics(draws, base_seed, threads)
    rho = 0.3
    pred = bootstrap.bootstrap_predictions(rho, 0.0)
    qv, qm = stats[:, 0], stats[:, 1]
    se_v = qv.std(ddof=1) / np.sqrt(draws)
    rel_v = abs(qv.mean() / pred.quad_v - 1.0)
    rel_m = abs(qm.mean() / pred.quad_mu - 1.0)
    gap = qv.mean() - 1.0 / (1.0 - rho)
    ok = rel_v <= 0.05 and rel_m <= 0.05 and gap > 3 * se_v
    margin = min(0.05 - rel_v, 0.05 - rel_m, (gap - 3 * se_v) / pred.quad_v)
    return CriterionResult(
        7, "bootstrap inconsistency", bool(ok), margin,
        f"quad_v={qv.mean():.5f} S*={pred.quad_v:.5f} gap/se={gap / se_v:.1f} "
        f"quad_mu={qm.mean():.5f} S*-1={pred.quad_mu:.5f} draws={draws}",
    )


# -- 8: weight law ----------------------------------------------------------------

def criterion_8(tier, base_seed, threads):
    w = bootstrap.multinomial_weights(100_000, derive_seed(base_seed, SLOT_WEIGHTS))
    tv = bootstrap.tv_to_poisson(bootstrap.weight_empirical_distribution(w))
    return CriterionResult(8, "bootstrap weight law", tv < 0.01, 0.01 - tv, f"TV={tv:.5f}")


# -- 9: property suites --------------------------------------------------------

def _random_spd(gen, p, cond_floor=0.5):
    a = gen.standard_normal((p, p))
    return a @ a.T / p + cond_floor * np.eye(p)


def property_qp_oracle(gen, instances=200):
    worst = 0.0
    for _ in range(instances):
        p = int(gen.integers(3, 9))
        k = int(gen.integers(1, min(p, 4)))
        sigma = _random_spd(gen, p)
        v = gen.standard_normal((p, k))
        u = gen.standard_normal(k)
        exact = qp_core.solve_eqc(qp_core.ProblemSpec(sigma, v[:, -1], v, u)).risk
        _, approx = oracles.projected_gradient_qp(sigma, v, u)
        worst = max(worst, abs(exact - approx) / max(1.0, abs(exact)))
    return worst


def property_partitioned_inverse(gen, instances=100):
    worst = 0.0
    for _ in range(instances):
        size = int(gen.integers(2, 9))
        split = int(gen.integers(1, size))
        a = _random_spd(gen, size) + gen.standard_normal((size, size)) * 0.1
        b11, b12, b21, b22 = qp_core.partitioned_inverse(a[:split, :split], a[:split, split:], a[split:, :split], a[split:, split:])
        inv = np.block([[b11, b12], [b21, b22]])
        worst = max(worst, np.abs(a @ inv - np.eye(size)).max())
    return worst


def property_box_minimizer(gen, instances=30):
    """Largest violation of ``exact <= grid <= exact + slack`` (<= 0 is a pass).

    ``slack`` bounds how far the nearest grid point to the minimizer can
    raise the objective: ``||A|| (2 r h_k + h_k^2)`` with
    ``h_k = step sqrt(k) / 2`` and ``r`` the grid radius times ``sqrt(k)``.
    """
    worst = -np.inf
    for i in range(instances):
        k = 2 if i % 3 else 3
        a = _random_spd(gen, k, 0.3)
        lower = np.where(gen.random(k) < 0.3, -np.inf, gen.uniform(-1.5, 1.0, k))
        upper = np.where(gen.random(k) < 0.3, np.inf, lower + gen.uniform(0.2, 1.5, k))
        upper = np.where(np.isinf(lower) & np.isinf(upper), 1.0, upper)
        step = 2e-3 if k == 2 else 4e-2
        u_star, exact = ineq_qp.minimize_over_q(a, ineq_qp.ConstraintSet.box(lower, upper))
        radius = 1.0 + np.abs(u_star).max()
        _, grid = oracles.grid_box_min(a, lower, upper, step, radius=radius)
        h = step * np.sqrt(k) / 2.0
        slack = np.linalg.norm(a, 2) * (2.0 * radius * np.sqrt(k) * h + h * h)
        worst = max(worst, exact - grid - 1e-12, grid - exact - slack)
    return worst


def property_jensen(gen):
    laws = [spectral.WeightDistribution.point_mass(c) for c in (0.5, 1.0, 2.0)]
    laws += [spectral.WeightDistribution.scaled_t_sq(df) for df in (3.0, 6.0, 12.0)]
    laws += [spectral.WeightDistribution.empirical(gen.gamma(2.0, 0.5, 200)) for _ in range(5)]
    worst = np.inf
    for law in laws:
        for rho in (0.05, 0.2, 0.4, 0.6, 0.9):
            s = spectral.solve_limit_scaling(law, rho).value
            worst = min(worst, s - 1.0 / ((1.0 - rho) * law.mean_tau) + 1e-9)
    for rho in (0.05, 0.3, 0.6):
        s = spectral.solve_limit_scaling(spectral.WeightDistribution.poisson_one(), rho).value
        worst = min(worst, s - 1.0 / (1.0 - rho) + 1e-9)
    return worst


def property_corrected_constraints(gen, instances=50):
    worst = 0.0
    for i in range(instances):
        n, p = 120, 40
        sigma = _random_spd(gen, p)
        mu = gen.standard_normal(p) / np.sqrt(p)
        v1 = gen.standard_normal(p) / np.sqrt(p)
        s = datagen.sample_gaussian(n, mu, sigma, int(gen.integers(2**63)))
        reps = estimators.correct_sample(s, v1, [1.0], [0.5, 2.0])
        for rep in reps:
            worst = max(worst, abs(v1 @ rep.w_corrected - 1.0))
    return worst


def property_determinism(threads_list=(1, 4, 16), base_seed=DEFAULT_SEED):
    cfg = SCENARIOS["small_t6"].with_(replicates=8, mu_p_grid=(0.5, 2.5, 5.0), base_seed=base_seed)
    with tempfile.TemporaryDirectory() as tmp:
        paths = []
        for t in threads_list:
            out = Path(tmp) / f"t{t}"
            paths.append(run_experiment(cfg.with_(parallelism=t, output_dir=str(out))))
        return all(
            filecmp.cmp(paths[0][j], other[j], shallow=False) for other in paths[1:] for j in range(2)
        )


def criterion_9(tier, base_seed, threads):
    gen = generator(base_seed, SLOT_PROPERTIES)
    qp = property_qp_oracle(gen, 200 if tier == "full" else 50)
    pinv = property_partitioned_inverse(gen)
    box = property_box_minimizer(gen, 30 if tier == "full" else 9)
    jensen = property_jensen(gen)
    cons = property_corrected_constraints(gen, 50 if tier == "full" else 10)
    det = property_determinism(base_seed=base_seed)
    checks = {
        "qp_oracle": (qp <= 1e-6, 1e-6 - qp),
        "partitioned_inverse": (pinv <= 1e-10, 1e-10 - pinv),
        "box_vs_grid": (box <= 0.0, -box),
        "jensen": (jensen >= 0, jensen),
        "corrected_constraints": (cons <= 1e-8, 1e-8 - cons),
        "determinism": (det, 0.0 if det else -1.0),
    }
    ok = all(c[0] for c in checks.values())
    detail = " ".join(f"{k}={'ok' if v[0] else 'FAIL'}" for k, v in checks.items())
    return CriterionResult(9, "property suites", bool(ok), min(v[1] for v in checks.values()), detail)


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}


def acceptance_suite(tier="fast", base_seed=DEFAULT_SEED, parallelism=1, only=None):
    """Run the selected criteria and return their results in order."""
    if tier not in ("fast", "full"):
        raise ValueError("tier must be 'fast' or 'full'")
    selected = sorted(CRITERIA) if only is None else sorted(only)
    runs = None
    results = []
    for number in selected:
        if number in (5, 6):
            if runs is None:
                runs = correction_runs(tier, base_seed, parallelism)
            results.append(CRITERIA[number](tier, base_seed, parallelism, runs=runs))
        else:
            results.append(CRITERIA[number](tier, base_seed, parallelism))
    return results


def format_report(results):
    """CSV report with the fixed header :data:`REPORT_FIELDS`."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_FIELDS)
    for r in results:
        writer.writerow([r.number, r.name, int(r.passed), format(r.margin, ".6g"), r.detail])
    return buf.getvalue()
