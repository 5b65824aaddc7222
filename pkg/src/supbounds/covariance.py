"""Stationary correlation models and the checks the lower bounds rely on."""
from __future__ import annotations

import csv
import dataclasses
import math

import numpy as np

SERIES_SWITCH = 1e-4
GRID_CAP = 1e8
# Small-alpha threshold used by the asymptotic statements; a config value,
# no claim is made that it is sufficient.
ALPHA_ZERO = 1.0 / 400.0


def _shao_one_minus_r(alpha, t):
    t = np.asarray(t, dtype=float)
    tiny = t < SERIES_SWITCH
    ts = np.where(tiny, 1.0, t)
    # 1 - r = (2 sinh(t/2))^alpha / 2 - 2 sinh(alpha t / 4)^2, free of cancellation
    direct = 0.5 * (2.0 * np.sinh(ts / 2.0)) ** alpha - 2.0 * np.sinh(alpha * ts / 4.0) ** 2
    tt = np.where(tiny, t, 0.0)
    t2 = tt * tt
    power = 1.0 + alpha * t2 / 24.0 + alpha * t2 * t2 * (1.0 / 1920.0 + (alpha - 1.0) / 1152.0)
    series = 0.5 * tt**alpha * power - alpha**2 * t2 / 8.0 - alpha**4 * t2 * t2 / 384.0
    return np.where(tiny, series, direct)


def _shao_r_far(alpha, t):
    # e^{at/2} (1 - (1 - e^{-t})^a) written so large t does not subtract huge numbers
    t = np.asarray(t, dtype=float)
    tail = -np.expm1(alpha * np.log1p(-np.exp(-t)))
    return 0.5 * (np.exp(-alpha * t / 2.0) + np.exp(alpha * t / 2.0) * tail)


def _check_alpha(alpha):
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"shao model needs 0 < alpha < 2, got {alpha}")


def shao_r(alpha: float, t):
    """Correlation ``(e^{at/2} + e^{-at/2} - (e^{t/2} - e^{-t/2})^a) / 2`` of the Shao process.

    Parameters
    ----------
    alpha : float
        Roughness index in (0, 2).
    t : float or array_like
        Non-negative lags.

    Returns
    -------
    float or ndarray
        ``r(t)``.  Lags up to 1 go through ``1 - r`` in a cancellation-free
        form (with a series below ``1e-4``); larger lags use a form that
        avoids subtracting two exponentially large terms.
    """
    _check_alpha(alpha)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("lags must be non-negative")
    near = t <= 1.0
    out = np.where(near, 1.0 - _shao_one_minus_r(alpha, np.where(near, t, 0.0)), _shao_r_far(alpha, np.where(near, 1.0, t)))
    return float(out) if out.ndim == 0 else out


@dataclasses.dataclass(frozen=True)
class CorrelationModel:
    """A stationary correlation function ``r`` with ``r(0) = 1``.

    Build with :meth:`shao`, :meth:`exponential` or :meth:`table`.  Table
    models are linearly interpolated between their lags and refuse lags past
    the last one.
    """

    kind: str
    alpha: float | None = None
    rate: float | None = None
    lags: tuple | None = None
    values: tuple | None = None

    @classmethod
    def shao(cls, alpha: float) -> "CorrelationModel":
        _check_alpha(alpha)
        return cls("shao", alpha=float(alpha))

    @classmethod
    def exponential(cls, rate: float) -> "CorrelationModel":
        if not rate > 0:
            raise ValueError("exponential model needs a positive rate")
        return cls("exponential", rate=float(rate))

    @classmethod
    def table(cls, values, lags=None) -> "CorrelationModel":
        values = tuple(float(v) for v in values)
        lags = tuple(float(x) for x in (range(len(values)) if lags is None else lags))
        if len(values) == 0 or len(lags) != len(values):
            raise ValueError("table model needs matching, non-empty lags and values")
        if lags[0] != 0.0 or values[0] != 1.0:
            raise ValueError("table model must start with r(0) = 1")
        if any(b <= a for a, b in zip(lags, lags[1:])):
            raise ValueError("table lags must be strictly increasing")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("table values must be finite")
        return cls("table", lags=lags, values=values)

    @classmethod
    def from_csv(cls, path) -> "CorrelationModel":
        """Load a two-column ``lag,r`` table; a non-numeric first row is taken as a header."""
        lags, values = [], []
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row or not "".join(row).strip():
                    continue
                try:
                    lag, val = float(row[0]), float(row[1])
                except ValueError:
                    if i == 0:
                        continue
                    raise
                lags.append(lag)
                values.append(val)
        return cls.table(values, lags)

    @property
    def default_spacing(self) -> float:
        return 1.0

    def r(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("lags must be non-negative")
        if self.kind == "shao":
            return shao_r(self.alpha, t)
        if self.kind == "exponential":
            out = np.exp(-self.rate * t)
        else:
            if np.any(t > self.lags[-1] * (1 + 1e-12)):
                raise ValueError(f"table model only covers lags up to {self.lags[-1]}")
            out = np.interp(t, self.lags, self.values)
        return float(out) if out.ndim == 0 else out

    def one_minus_r(self, t):
        """``1 - r(t)`` without cancellation where the model allows it."""
        t = np.asarray(t, dtype=float)
        if self.kind == "shao":
            near = t <= 1.0
            out = np.where(near, _shao_one_minus_r(self.alpha, np.where(near, t, 0.0)), 1.0 - _shao_r_far(self.alpha, np.where(near, 1.0, t)))
        elif self.kind == "exponential":
            out = -np.expm1(-self.rate * t)
        else:
            out = 1.0 - np.asarray(self.r(t))
        return float(out) if out.ndim == 0 else out

    def describe(self) -> dict:
        if self.kind == "shao":
            return {"kind": "shao", "alpha": self.alpha}
        if self.kind == "exponential":
            return {"kind": "exponential", "rate": self.rate}
        return {"kind": "table", "points": len(self.values), "max_lag": self.lags[-1]}


@dataclasses.dataclass
class HypothesisReport:
    monotone_nonincreasing: bool
    nonnegative: bool
    r1_condition: bool
    r1_value: float
    monotone_witness: int | None = None
    negative_witness: int | None = None

    @property
    def passed(self) -> bool:
        return self.monotone_nonincreasing and self.nonnegative and self.r1_condition

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["passed"] = self.passed
        return d


def check_hypotheses(model: CorrelationModel, u: float, grid) -> HypothesisReport:
    """Check monotonicity, non-negativity and ``r(gap) (1 + 2/u^2) <= 1`` on a sorted grid.

    ``gap`` is the first grid spacing (the first point itself for a
    one-point grid).  Witnesses are grid indices of the first violation.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be non-empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted")
    if not u >= 1:
        raise ValueError("u must be at least 1")
    vals = np.atleast_1d(model.r(grid))
    rises = np.nonzero(np.diff(vals) > 0)[0]
    negs = np.nonzero(vals < 0)[0]
    gap = grid[1] - grid[0] if grid.size > 1 else grid[0]
    r1 = float(model.r(gap)) * (1.0 + 2.0 / u**2)
    return HypothesisReport(
        monotone_nonincreasing=rises.size == 0,
        nonnegative=negs.size == 0,
        r1_condition=r1 <= 1.0,
        r1_value=r1,
        monotone_witness=int(rises[0] + 1) if rises.size else None,
        negative_witness=int(negs[0]) if negs.size else None,
    )


class GridCapExceeded(ValueError):
    """Raised when the equally spaced grid would have more points than the cap."""

    def __init__(self, log_points: float, cap: float):
        self.log_points = log_points
        self.cap = cap
        super().__init__(f"grid would need about exp({log_points:.4g}) points, above the cap {cap:g}")


@dataclasses.dataclass(frozen=True)
class UnitGrid:
    M: int

    @property
    def spacing(self) -> float:
        return 1.0 / self.M

    @property
    def times(self) -> np.ndarray:
        return np.arange(1, self.M + 1) / self.M


def log_grid_size(alpha: float, u: float, b: float) -> float:
    """log of ``(b u^2 alpha / 2)^(1/alpha)`` before taking the integer part."""
    return math.log(b * u * u * alpha / 2.0) / alpha


def prop2_grid(alpha: float, u: float, b: float, cap: float = GRID_CAP) -> UnitGrid:
    """Grid ``{i/M}`` with ``M = floor((b u^2 alpha / 2)^(1/alpha))``.

    Raises :class:`GridCapExceeded` when ``M`` would exceed ``cap``.
    """
    _check_alpha(alpha)
    if not 1.0 <= b <= 100.0:
        raise ValueError("b must lie in [1, 100]")
    lm = log_grid_size(alpha, u, b)
    if lm > math.log(cap):
        raise GridCapExceeded(lm, cap)
    M = math.floor(math.exp(lm) * (1 + 1e-14))
    if M < 2:
        raise ValueError(f"u too small for this alpha and b: grid size {M} < 2")
    return UnitGrid(M)
