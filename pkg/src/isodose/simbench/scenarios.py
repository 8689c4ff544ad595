"""Random true dose-response curves for the simulation bench.

Three families are sampled on the fixed grid ``x = 1, ..., 5``:

* Logistic: location ~ U[1, 5], scale ~ U[0.3, 2].
* Weibull on dose ``x > 0``: shape ~ U[0.8, 4], scale set so the median is
  ~ U[1, 5].
* Staircase: two-component Normal-CDF mixture with steep steps between the
  outer design points (means ~ 1.5 +- 0.3 and 4.5 +- 0.3, sds ~ U[0.05, 0.25],
  weight ~ U[0.3, 0.7]), leaving a near-flat plateau across ``x_2..x_4``.

Every draw is vetted: ``0.01 <= F(x_1) <= 0.2``, ``F(x_m) >= 0.5`` and
``F(x_m) - F(x_1) >= 0.3``; rejected draws are redrawn.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, logit, ndtr

from ..errors import ConfigError

DOSES = np.arange(1.0, 6.0)
FAMILIES = ("Logistic", "Weibull", "Staircase")
MAX_REJECTIONS = 1000

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def family_tag(name: str) -> str:
    for fam in FAMILIES:
        if fam.lower() == name.strip().lower():
            return fam
    raise ConfigError(f"unknown scenario family {name!r}")


@dataclass(frozen=True)
class ScenarioSpec:
    """A sampled true curve ``F``; ``params`` is a sorted tuple of (name, value)."""

    family: str
    params: tuple
    seed: object = None
    doses: tuple = tuple(DOSES.tolist())

    @property
    def p(self) -> dict:
        return dict(self.params)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        p = self.p
        if self.family == "Logistic":
            return expit((x - p["location"]) / p["scale"])
        if self.family == "Weibull":
            t = np.maximum(x, 0.0)
            return 1.0 - np.exp(-((t / p["scale"]) ** p["shape"]))
        if self.family == "Staircase":
            w = p["weight"]
            return w * ndtr((x - p["mean1"]) / p["sd1"]) + (1 - w) * ndtr(
                (x - p["mean2"]) / p["sd2"]
            )
        raise ConfigError(f"unknown family {self.family!r}")

    def quantile(self, q: float) -> float:
        """Dose where the true curve equals ``q``."""
        p = self.p
        if not 0.0 < q < 1.0:
            raise ValueError("quantile level must lie in (0, 1)")
        if self.family == "Logistic":
            return float(p["location"] + p["scale"] * logit(q))
        if self.family == "Weibull":
            return float(p["scale"] * (-math.log1p(-q)) ** (1.0 / p["shape"]))
        lo = min(p["mean1"], p["mean2"]) - 12 * max(p["sd1"], p["sd2"])
        hi = max(p["mean1"], p["mean2"]) + 12 * max(p["sd1"], p["sd2"])
        return float(brentq(lambda t: float(self.cdf(t)) - q, lo, hi, xtol=1e-13))

    def at_doses(self) -> np.ndarray:
        return self.cdf(np.asarray(self.doses))


def passes_vetting(values: np.ndarray) -> bool:
    first, last = float(values[0]), float(values[-1])
    return 0.01 <= first <= 0.2 and last >= 0.5 and last - first >= 0.3


def _propose(family: str, rng: np.random.Generator) -> dict:
    x1, xm = DOSES[0], DOSES[-1]
    if family == "Logistic":
        return {"location": rng.uniform(x1, xm), "scale": rng.uniform(0.3, 2.0)}
    if family == "Weibull":
        shape = rng.uniform(0.8, 4.0)
        median = rng.uniform(x1, xm)
        return {"shape": shape, "scale": median / math.log(2.0) ** (1.0 / shape)}
    if family == "Staircase":
        return {
            "mean1": 1.5 + rng.uniform(-0.3, 0.3),
            "mean2": 4.5 + rng.uniform(-0.3, 0.3),
            "sd1": rng.uniform(0.05, 0.25),
            "sd2": rng.uniform(0.05, 0.25),
            "weight": rng.uniform(0.3, 0.7),
        }
    raise ConfigError(f"unknown scenario family {family!r}")


def draw_scenario(family: str, rng_seed: SeedLike) -> ScenarioSpec:
    """Sample a vetted scenario; identical seeds give identical scenarios."""
    family = family_tag(family)
    rng = make_rng(rng_seed)
    for _ in range(MAX_REJECTIONS):
        params = _propose(family, rng)
        spec = ScenarioSpec(family, tuple(sorted((k, float(v)) for k, v in params.items())),
                            _seed_repr(rng_seed))
        if passes_vetting(spec.at_doses()):
            return spec
    raise ConfigError(f"{family}: vetting failed {MAX_REJECTIONS} times in a row")


def _seed_repr(seed):
    if isinstance(seed, np.random.SeedSequence):
        return (seed.entropy, tuple(seed.spawn_key))
    if isinstance(seed, np.random.Generator):
        return None
    return seed
