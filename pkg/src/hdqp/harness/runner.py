"""Monte Carlo runner: naive versus corrected solutions over replicates.

Replicate ``r`` of a scenario draws its sample from
``derive_seed(base_seed, scenario_id, r)``, so results do not depend on the
number of worker threads or on execution order. Records are gathered in
replicate order before anything is written.
"""

import csv
import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import datagen, estimators
from ..errors import HDQPError, ReplicateError
from ..qp_core import ProblemSpec, efficient_frontier, solve_eqc
from ..rng import derive_seed


@dataclass(frozen=True)
class Population:
    """Population quantities of one scenario."""

    sigma: np.ndarray
    sigma_root: np.ndarray
    v1: np.ndarray
    mu: np.ndarray
    m: np.ndarray

    @property
    def v(self):
        return np.column_stack([self.v1, self.mu])

    def f_theo(self, u1, mu_p):
        spec = ProblemSpec(self.sigma, self.mu, self.v, [u1, mu_p])
        return solve_eqc(spec).risk

    def frontier(self, u1, grid):
        """Population risk along ``grid``, factoring ``Sigma`` once."""
        return efficient_frontier(self.sigma, self.mu, (self.v1[:, None], [u1]), grid).risk


def population(config):
    sigma = datagen.toeplitz_sigma(config.p, config.alpha)
    v1, mu = datagen.build_constraints(sigma, *config.eig_ranks, config.mu_weight)
    spec = ProblemSpec(sigma, mu, np.column_stack([v1, mu]), [config.u1, 0.0])
    return Population(sigma=sigma, sigma_root=datagen.sqrt_psd(sigma), v1=v1, mu=mu, m=spec.m)


def draw_sample(config, pop, seed):
    """One sample of the scenario's model."""
    if config.law_df is None:
        return datagen.sample_gaussian(config.n, pop.mu, pop.sigma, seed, sigma_root=pop.sigma_root)
    law = datagen.LambdaLaw.scaled_t(config.law_df)
    return datagen.sample_elliptical(config.n, pop.mu, pop.sigma, law, seed, sigma_root=pop.sigma_root)


@dataclass(frozen=True)
class ReplicateRecord:
    replicate_index: int
    mu_p: float
    f_theo: float
    f_naive: float
    f_corrected: float
    returns_naive: float
    returns_corrected: float
    s_hat: float
    kappa_n: float
    psd_repair_applied: bool
    seed_used: int


RECORD_FIELDS = tuple(f.name for f in dataclasses.fields(ReplicateRecord))
SERIES = ("f_theo", "f_naive", "f_corrected", "returns_naive", "returns_corrected")


def replicate_seed(config, index):
    return derive_seed(config.base_seed, config.scenario_id, index)


def run_replicate(config, pop, index, f_theo=None):
    """All grid points of one replicate."""
    seed = replicate_seed(config, index)
    grid = np.asarray(config.mu_p_grid)
    if f_theo is None:
        f_theo = pop.frontier(config.u1, grid)
    try:
        sample = draw_sample(config, pop, seed)
        reports = estimators.correct_sample(sample, pop.v1, [config.u1], grid)
    except (HDQPError, np.linalg.LinAlgError, ArithmeticError) as exc:
        raise ReplicateError(f"replicate {index} (seed {seed}) failed: {exc}", index) from exc
    records = []
    for mu_p, ft, rep in zip(grid, f_theo, reports):
        records.append(
            ReplicateRecord(
                replicate_index=index, mu_p=float(mu_p), f_theo=float(ft),
                f_naive=rep.f_naive, f_corrected=rep.f_corrected,
                returns_naive=float(pop.mu @ rep.w_naive), returns_corrected=float(pop.mu @ rep.w_corrected),
                s_hat=rep.s_hat, kappa_n=rep.kappa_n, psd_repair_applied=rep.psd_repair_applied, seed_used=seed,
            )
        )
    return records


def run_replicates(config, pop=None):
    """Records for every replicate and grid point, in replicate order."""
    pop = population(config) if pop is None else pop
    f_theo = pop.frontier(config.u1, config.mu_p_grid)
    indices = range(config.replicates)
    if config.parallelism == 1:
        chunks = [run_replicate(config, pop, r, f_theo) for r in indices]
    else:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            chunks = list(pool.map(lambda r: run_replicate(config, pop, r, f_theo), indices))
    return [rec for chunk in chunks for rec in chunk]


def format_float(x):
    return format(float(x), ".17g")


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_float(value)


def write_records(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS)
        for rec in records:
            writer.writerow([_cell(getattr(rec, name)) for name in RECORD_FIELDS])


def read_records(path):
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RECORD_FIELDS:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            vals = dict(zip(header, row))
            out.append(
                ReplicateRecord(
                    replicate_index=int(vals["replicate_index"]),
                    psd_repair_applied=bool(int(vals["psd_repair_applied"])),
                    seed_used=int(vals["seed_used"]),
                    **{k: float(vals[k]) for k in RECORD_FIELDS if k not in ("replicate_index", "psd_repair_applied", "seed_used")},
                )
            )
    return out


def summarize(records):
    """Per grid point mean and 2.5 / 97.5 percent quantiles of every series.

    Returns a dict ``{mu_p: {series: (mean, lo, hi)}}`` ordered by ``mu_p``.
    """
    by_mu = {}
    for rec in records:
        by_mu.setdefault(rec.mu_p, []).append(rec)
    out = {}
    for mu_p in sorted(by_mu):
        rows = by_mu[mu_p]
        stats = {}
        for name in SERIES:
            vals = np.array([getattr(r, name) for r in rows])
            lo, hi = np.quantile(vals, [0.025, 0.975])
            stats[name] = (float(vals.mean()), float(lo), float(hi))
        out[mu_p] = stats
    return out


SUMMARY_FIELDS = ("mu_p",) + tuple(f"{s}_{stat}" for s in SERIES for stat in ("mean", "q025", "q975"))


def write_summary(summary, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_FIELDS)
        for mu_p, stats in summary.items():
            row = [format_float(mu_p)]
            for name in SERIES:
                row.extend(format_float(x) for x in stats[name])
            writer.writerow(row)


def run_experiment(config):
    """Run ``config`` and write ``records.csv`` and ``summary.csv``.

    Returns
    -------
    (records_path, summary_path)
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = run_replicates(config)
    rec_path = out / "records.csv"
    sum_path = out / "summary.csv"
    write_records(records, rec_path)
    write_summary(summarize(records), sum_path)
    return rec_path, sum_path
