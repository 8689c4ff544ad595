"""Allocation of subjects to doses: equal split or k-in-a-row up-and-down."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class DesignSpec:
    kind: str  # "FixedEqual" or "KInARow"
    m: int
    n: int
    k: int = 2
    start_index: int = 1  # 1-based dose index

    def __post_init__(self):
        if self.kind not in ("FixedEqual", "KInARow"):
            raise ConfigError(f"unknown design kind {self.kind!r}")
        if self.m < 2:
            raise ConfigError("design needs m >= 2")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.kind == "FixedEqual" and self.n < self.m:
            raise ConfigError("equal split needs n >= m")
        if self.kind == "KInARow" and not 1 <= self.start_index <= self.m:
            raise ConfigError("start_index must lie in 1..m")

    @classmethod
    def fixed(cls, n: int, m: int = 5) -> "DesignSpec":
        return cls("FixedEqual", m, n)

    @classmethod
    def k_in_a_row(cls, n: int, m: int = 5, k: int = 2, start_index: int = 1) -> "DesignSpec":
        return cls("KInARow", m, n, k, start_index)


def equal_allocation(n: int, m: int) -> np.ndarray:
    """``n // m`` per point; the remainder goes to the lowest doses."""
    alloc = np.full(m, n // m, dtype=np.int64)
    alloc[: n % m] += 1
    return alloc


def k_in_a_row_path(probs, n: int, k: int, start_index: int, rng: np.random.Generator):
    """Simulate one up-and-down trial.

    Returns 0-based dose indices and 0/1 responses, one per subject. A
    positive response moves down one dose; ``k`` consecutive negatives at the
    current dose move up one. Moves are clipped at both ends.
    """
    probs = np.asarray(probs, dtype=float)
    m = len(probs)
    doses = np.empty(n, dtype=np.int64)
    resp = np.empty(n, dtype=np.int64)
    j, run = start_index - 1, 0
    u = rng.random(n)
    for i in range(n):
        doses[i] = j
        r = int(u[i] < probs[j])
        resp[i] = r
        if r:
            j, run = max(j - 1, 0), 0
        else:
            run += 1
            if run == k:
                j, run = min(j + 1, m - 1), 0
    return doses, resp


def tally(doses, resp, m: int):
    trials = np.bincount(doses, minlength=m).astype(np.int64)
    events = np.bincount(doses, weights=resp, minlength=m).astype(np.int64)
    return events, trials
