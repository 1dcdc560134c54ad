"""Experiment configuration and the built-in scenario presets.

Config files are flat ``key = value`` lines under ``[section]`` headers,
read with :mod:`configparser`. Vectors are comma lists. Keys::

    [experiment]
    model = gaussian          ; or t6, or elliptical with df = <float>
    n = 250
    p = 100
    k = 2                     ; only the two-constraint layout is supported
    replicates = 1000
    alpha = 0.4
    eig_ranks = 90, 15
    mu_weight = 0.3
    u1 = 1
    mu_p_grid = 0.1, 1, 5     ; or mu_p_min / mu_p_max / mu_p_points
    base_seed = 20240917
    scenario_id = 0
    parallelism = 1
    output_dir = out
"""

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError

DEFAULT_SEED = 20240917
DEFAULT_GRID = tuple(np.linspace(0.1, 5.0, 50).tolist())
MODELS = ("gaussian", "t6", "elliptical")


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "gaussian"
    n: int = 250
    p: int = 100
    k: int = 2
    replicates: int = 1000
    alpha: float = 0.4
    eig_ranks: tuple = (90, 15)
    mu_weight: float = 0.3
    u1: float = 1.0
    mu_p_grid: tuple = DEFAULT_GRID
    base_seed: int = DEFAULT_SEED
    scenario_id: int = 0
    parallelism: int = 1
    output_dir: str = "out"
    df: float = 6.0
    label: str = ""

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if not 0 < self.p < self.n:
            raise ConfigError(f"need 0 < p < n, got p={self.p}, n={self.n}")
        if self.k != 2:
            raise ConfigError("only k = 2 (budget-style constraint plus mean) is supported")
        if len(self.mu_p_grid) == 0:
            raise ConfigError("mu_p grid is empty")
        if len(self.eig_ranks) != 2:
            raise ConfigError("eig_ranks takes two values")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be at least 1")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("base_seed must fit in 64 unsigned bits")
        if self.model == "elliptical" and self.df <= 2:
            raise ConfigError("df must exceed 2")
        object.__setattr__(self, "mu_p_grid", tuple(float(x) for x in self.mu_p_grid))
        object.__setattr__(self, "eig_ranks", tuple(int(x) for x in self.eig_ranks))

    @property
    def law_df(self):
        """Degrees of freedom of the ellipticity, or ``None`` for Gaussian data."""
        if self.model == "gaussian":
            return None
        return 6.0 if self.model == "t6" else self.df

    def with_(self, **changes):
        return replace(self, **changes)


_INT_KEYS = {"n", "p", "k", "replicates", "base_seed", "scenario_id", "parallelism"}
_FLOAT_KEYS = {"alpha", "mu_weight", "u1", "df"}
_STR_KEYS = {"model", "output_dir", "label"}
_GRID_KEYS = {"mu_p_min", "mu_p_max", "mu_p_points"}


def _floats(text):
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}: {exc}") from None


def parse_config(text):
    """Build an :class:`ExperimentConfig` from config-file text."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    values = {}
    for section in parser.sections():
        values.update(parser[section])
    kwargs = {}
    grid_parts = {}
    for key, raw in values.items():
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(raw)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(raw)
            elif key in _STR_KEYS:
                kwargs[key] = raw.strip()
            elif key == "eig_ranks":
                kwargs[key] = tuple(int(x) for x in _floats(raw))
            elif key == "mu_p_grid":
                kwargs[key] = _floats(raw)
            elif key in _GRID_KEYS:
                grid_parts[key] = float(raw)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    if grid_parts:
        if "mu_p_grid" in kwargs or set(grid_parts) != _GRID_KEYS:
            raise ConfigError("give either mu_p_grid or all of mu_p_min, mu_p_max, mu_p_points")
        kwargs["mu_p_grid"] = tuple(
            np.linspace(grid_parts["mu_p_min"], grid_parts["mu_p_max"], int(grid_parts["mu_p_points"])).tolist()
        )
    return ExperimentConfig(**kwargs)


def load_config(path):
    return parse_config(Path(path).read_text())


# scenario ids are part of the seed derivation; never renumber them
SMALL = dict(n=250, p=100, eig_ranks=(90, 15))
LARGE = dict(n=2500, p=1000, eig_ranks=(900, 150))
SCENARIOS = {
    "small_t6": ExperimentConfig(model="t6", scenario_id=1, label="t6, n=250, p=100", **SMALL),
    "small_gaussian": ExperimentConfig(model="gaussian", scenario_id=2, label="Gaussian, n=250, p=100", **SMALL),
    "large_t6": ExperimentConfig(model="t6", scenario_id=3, label="t6, n=2500, p=1000", **LARGE),
    "large_gaussian": ExperimentConfig(model="gaussian", scenario_id=4, label="Gaussian, n=2500, p=1000", **LARGE),
}

FIGURES = {
    "returns_small": ("small_t6", "small_gaussian"),
    "returns_large": ("large_t6", "large_gaussian"),
    "frontiers": ("small_t6", "small_gaussian", "large_t6", "large_gaussian"),
}
