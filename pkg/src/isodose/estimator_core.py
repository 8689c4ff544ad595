"""Weighted isotonic point estimation for binary dose-response data.

Two estimators share one pooling engine:

* ``pava`` - ordinary isotonic regression (IR); one estimate per design point,
  pooled stretches are flat.
* ``cir`` - centered isotonic regression; each pooled stretch collapses onto a
  single shrinkage point placed at the weighted mean dose of its members.

When the weights are integer sample sizes the engine keeps block means as
exact fractions, so tie detection and the pooled totals carry no rounding.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateVarianceError, ValidationError

_COUNT_TOL = 1e-9
_REL_TIE_TOL = 1e-12
VARIANCE_FLOOR = 1e-4


@dataclass(frozen=True, eq=False)
class DoseResponseData:
    """Binomial tallies at increasing doses.

    ``y`` holds observed response proportions. When every ``n_j * y_j`` is a
    whole number of responses (within 1e-9) the proportions are snapped to
    ``events / n`` so downstream arithmetic sees the exact ratio, and the
    estimators work in exact rational arithmetic. Other proportions are
    accepted for point estimation only; interval methods need counts.
    """

    x: np.ndarray
    y: np.ndarray
    n: np.ndarray
    _whole: bool = field(init=False, repr=False, default=True)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        n_raw = np.asarray(self.n, dtype=float).ravel()
        if x.size == 0:
            raise ValidationError("x", "need at least one design point")
        if not (x.size == y.size == n_raw.size):
            raise ValidationError(
                "y", f"x, y, n lengths differ ({x.size}, {y.size}, {n_raw.size})"
            )
        if not np.all(np.isfinite(x)):
            raise ValidationError("x", "doses must be finite")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise ValidationError("x", "doses must be strictly increasing")
        if np.any(~np.isfinite(n_raw)) or np.any(n_raw != np.round(n_raw)):
            raise ValidationError("n", "sample sizes must be integers")
        if np.any(n_raw < 1):
            raise ValidationError("n", "sample sizes must be >= 1")
        if np.any(~np.isfinite(y)) or np.any(y < 0) or np.any(y > 1):
            raise ValidationError("y", "proportions must lie in [0, 1]")
        counts = n_raw * y
        events = np.round(counts)
        whole = bool(np.all(np.abs(counts - events) <= _COUNT_TOL * np.maximum(1.0, n_raw)))
        n_int = n_raw.astype(np.int64)
        if whole:
            y = np.array([int(k) / int(nn) for k, nn in zip(events.astype(np.int64), n_int)])
        for name, arr in (("x", x), ("y", y.copy()), ("n", n_int)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_whole", whole)

    @classmethod
    def from_counts(cls, x, events, trials) -> "DoseResponseData":
        events = np.asarray(events, dtype=float)
        trials = np.asarray(trials, dtype=float)
        if np.any(events < 0) or np.any(events > trials):
            raise ValidationError("events", "need 0 <= events <= trials")
        with np.errstate(divide="ignore", invalid="ignore"):
            y = np.where(trials > 0, events / np.where(trials > 0, trials, 1), 0.0)
        return cls(x=x, y=y, n=trials)

    @property
    def m(self) -> int:
        return int(self.x.size)

    @property
    def is_count_data(self) -> bool:
        return self._whole

    @property
    def events(self) -> np.ndarray:
        """Response counts; only meaningful when ``is_count_data``."""
        return np.round(self.n * self.y).astype(np.int64)

    def require_counts(self):
        if not self._whole:
            raise ValidationError("y", "n * y must be a whole number of responses")

    @property
    def total(self) -> int:
        return int(self.n.sum())


@dataclass(frozen=True, eq=False)
class MonotoneFit:
    """Output of IR / CIR: points ``(xs, fs)`` with pooled weights ``ns``.

    ``synthetic_boundary`` flags the flat end points that CIR re-adds when a
    pooled stretch swallowed ``x_1`` or ``x_m``; those carry ``ns == 0``.
    ``fs_exact`` holds the estimates as fractions when the fit was computed
    from integer tallies, otherwise ``None``.
    """

    xs: np.ndarray
    fs: np.ndarray
    ns: np.ndarray
    synthetic_boundary: np.ndarray
    method: str
    converged: bool = True
    iterations: int = 0
    fs_exact: Optional[tuple] = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# pooling engine


class _Block:
    __slots__ = ("start", "end", "w", "wy", "wx", "value", "pooled")

    def __init__(self, j, w, wy, wx, value):
        self.start = j
        self.end = j + 1
        self.w = w
        self.wy = wy
        self.wx = wx
        self.value = value
        self.pooled = False


def _ties(a, b, exact):
    if exact:
        return a == b
    return abs(a - b) <= _REL_TIE_TOL * max(abs(a), abs(b), 1e-300)


def _violates(a, b, strict, exact):
    if _ties(a, b, exact):
        return strict and 0 < a < 1
    return a > b


def _pool_blocks(x, y, weights, events=None, strict=False, pick="first"):
    """Pool adjacent violators pairwise until none remain.

    With ``events`` given (integer tallies whose weights are the integer
    sample sizes), block values are exact ``Fraction`` objects. ``pick``
    selects which violation is resolved first (``"first"`` or ``"last"``).
    """
    exact = events is not None
    blocks = []
    for j in range(len(y)):
        w = weights[j]
        if exact:
            w = int(w)
            wy = int(events[j])
            value = Fraction(wy, w)
        else:
            w = float(w)
            wy = w * float(y[j])
            value = float(y[j])
        blocks.append(_Block(j, w, wy, w * float(x[j]), value))

    while len(blocks) > 1:
        viol = [
            i
            for i in range(len(blocks) - 1)
            if _violates(blocks[i].value, blocks[i + 1].value, strict, exact)
        ]
        if not viol:
            break
        h = viol[0] if pick == "first" else viol[-1]
        left, right = blocks[h], blocks[h + 1]
        left.end = right.end
        left.w = left.w + right.w
        left.wy = left.wy + right.wy
        left.wx = left.wx + right.wx
        left.value = Fraction(left.wy, left.w) if exact else left.wy / left.w
        left.pooled = True
        del blocks[h + 1]
    return blocks, exact


def _block_float(block, y):
    # Untouched blocks return the observation itself, bit for bit.
    return float(y[block.start]) if not block.pooled else float(block.value)


def _exact_events(data):
    return data.events if data.is_count_data else None


def pava(data: DoseResponseData, strict: bool = False, *, pick: str = "first") -> MonotoneFit:
    """Isotonic regression of ``data.y`` with sample-size weights.

    Returns one estimate per design point. ``strict=True`` also pools equal
    neighbours strictly inside (0, 1), which is the tie rule CIR uses.
    """
    y = data.y
    blocks, exact = _pool_blocks(data.x, y, data.n, _exact_events(data), strict, pick)
    fs = np.empty(data.m)
    exact_vals = [] if exact else None
    for b in blocks:
        val = _block_float(b, y)
        fs[b.start:b.end] = val
        if exact:
            exact_vals.extend([b.value] * (b.end - b.start))
    return MonotoneFit(
        xs=data.x.copy(),
        fs=fs,
        ns=data.n.copy(),
        synthetic_boundary=np.zeros(data.m, dtype=bool),
        method="IR",
        fs_exact=tuple(exact_vals) if exact else None,
    )


def _cir_from_blocks(data, blocks, exact, method, counts):
    x, y = data.x, data.y
    xs, fs, ns, exact_vals = [], [], [], []
    for b in blocks:
        xs.append(float(x[b.start]) if not b.pooled else b.wx / float(b.w))
        fs.append(_block_float(b, y))
        ns.append(int(counts[b.start:b.end].sum()))
        exact_vals.append(b.value)
    synthetic = [False] * len(xs)
    if xs[0] > x[0]:
        xs.insert(0, float(x[0]))
        fs.insert(0, fs[0])
        ns.insert(0, 0)
        exact_vals.insert(0, exact_vals[0])
        synthetic.insert(0, True)
    if xs[-1] < x[-1]:
        xs.append(float(x[-1]))
        fs.append(fs[-1])
        ns.append(0)
        exact_vals.append(exact_vals[-1])
        synthetic.append(True)
    return MonotoneFit(
        xs=np.array(xs),
        fs=np.array(fs),
        ns=np.array(ns, dtype=np.int64),
        synthetic_boundary=np.array(synthetic, dtype=bool),
        method=method,
        fs_exact=tuple(exact_vals) if exact else None,
    )


def cir(data: DoseResponseData, strict: bool = True, *, pick: str = "first") -> MonotoneFit:
    """Centered isotonic regression.

    Each pooled stretch becomes one shrinkage point at the sample-size
    weighted mean of its doses. If pooling consumed ``x_1`` or ``x_m`` a flat
    synthetic point with zero weight is added back at that end, so the fit
    always spans the original dose range.
    """
    blocks, exact = _pool_blocks(data.x, data.y, data.n, _exact_events(data), strict, pick)
    return _cir_from_blocks(data, blocks, exact, "CIR", data.n)


def bias_optimal_weights(f1: float, f2: float, n1: float, n2: float) -> tuple[float, float]:
    """Weights ``(a, b)`` making ``a*Y1 + b*Y2`` uncorrelated with ``Y2 - Y1``.

    These are inverse-variance weights for two independent Binomial
    proportions; ``b / a = n2 f1 (1 - f1) / (n1 f2 (1 - f2))``.
    """
    v1 = f1 * (1.0 - f1)
    v2 = f2 * (1.0 - f2)
    if not (0.0 < f1 < 1.0) or not (0.0 < f2 < 1.0):
        raise DegenerateVarianceError(
            f"probabilities must lie strictly inside (0, 1), got {f1}, {f2}"
        )
    if n1 <= 0 or n2 <= 0:
        raise ValueError("sample sizes must be positive")
    ratio = (n2 * v1) / (n1 * v2)
    a = 1.0 / (1.0 + ratio)
    return a, ratio * a


def _fit_at_design(fit: MonotoneFit, x: np.ndarray) -> np.ndarray:
    return np.interp(x, fit.xs, fit.fs)


def cir_reweighted(
    data: DoseResponseData, max_iter: int = 50, tol: float = 1e-8, strict: bool = True
) -> MonotoneFit:
    """CIR with iterated plug-in inverse-variance pooling weights.

    Starts from ordinary CIR, evaluates the current curve at each design point
    and re-pools with weights ``n_j / max(F(1 - F), 1e-4)``. Stops when the
    curve at the design points moves by less than ``tol``. If ``max_iter`` is
    exhausted the last iterate is returned with ``converged=False``.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    base = cir(data, strict)
    current = base
    prev_vals = _fit_at_design(base, data.x)
    n = data.n.astype(float)
    for it in range(1, max_iter + 1):
        var = np.maximum(prev_vals * (1.0 - prev_vals), VARIANCE_FLOOR)
        if np.all(var == var[0]):
            # weights proportional to n: nothing changes
            return MonotoneFit(
                xs=base.xs, fs=base.fs, ns=base.ns,
                synthetic_boundary=base.synthetic_boundary,
                method="CIR-reweighted", converged=True, iterations=it,
                fs_exact=base.fs_exact,
            )
        weights = n / var
        blocks, _ = _pool_blocks(data.x, data.y, weights, None, strict)
        current = _cir_from_blocks(data, blocks, False, "CIR-reweighted", data.n)
        vals = _fit_at_design(current, data.x)
        delta = float(np.max(np.abs(vals - prev_vals)))
        prev_vals = vals
        if delta < tol:
            return replace(current, converged=True, iterations=it)
    return replace(current, converged=False, iterations=max_iter)


def fit_estimator(data: DoseResponseData, method: str) -> MonotoneFit:
    """Dispatch by method tag (``IR``, ``CIR``, ``CIR-reweighted``)."""
    key = method.upper().replace("_", "-")
    if key == "IR":
        return pava(data)
    if key == "CIR":
        return cir(data)
    if key == "CIR-REWEIGHTED":
        return cir_reweighted(data)
    raise ValueError(f"unknown estimator {method!r}")


def as_data(x: Sequence[float], y: Sequence[float], n: Sequence[int]) -> DoseResponseData:
    return DoseResponseData(np.asarray(x, float), np.asarray(y, float), np.asarray(n))
