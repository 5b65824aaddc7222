"""Standard Brownian motion below linear and one-break piecewise-linear boundaries.

Closed form for a line, three lower-bound shapes (steep line, shallow line,
slope-then-flat), a quadrature value for the slope-then-flat boundary, and a
Monte Carlo skeleton oracle.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy import integrate

from . import kernels
from .constants import ConstantPolicy
from .mc import MCConfig, MCEstimate, run_batches
from .special import log_normal_cdf, normal_cdf

# Discrete monitoring at step h behaves like continuous monitoring of a
# boundary raised by EULER_SHIFT * sqrt(h), EULER_SHIFT = -zeta(1/2)/sqrt(2 pi).
EULER_SHIFT = 0.5825971579390106
MIN_MC_SAMPLES = 1000
STEPS_PER_HORIZON = 10_000
DEFAULT_BLOCK = 256


@dataclasses.dataclass(frozen=True)
class LineBoundary:
    """Boundary ``a + b s`` on ``[0, t]``."""

    a: float
    b: float
    t: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"line boundary needs a > 0, got a={self.a}")
        if not self.t > 0:
            raise ValueError(f"line boundary needs t > 0, got t={self.t}")


@dataclasses.dataclass(frozen=True)
class PiecewiseBoundary:
    """Boundary ``a + b min(s, t0)`` on ``[0, t]``: slope ``b <= 0`` then flat."""

    a: float
    b: float
    t0: float
    t: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"piecewise boundary needs a > 0, got a={self.a}")
        if not self.b <= 0:
            raise ValueError(f"piecewise boundary needs b <= 0, got b={self.b}")
        if not 0 < self.t0 < self.t:
            raise ValueError(f"piecewise boundary needs 0 < t0 < t, got t0={self.t0}, t={self.t}")

    def value(self, s):
        return self.a + self.b * np.minimum(s, self.t0)


def log_line_noncrossing(a: float, b: float, t: float) -> float:
    """log P(W_s <= a + b s for all s <= t)."""
    if not (a > 0 and t > 0):
        raise ValueError("need a > 0 and t > 0")
    st = math.sqrt(t)
    l1 = log_normal_cdf((a + b * t) / st)
    l2 = -2.0 * a * b + log_normal_cdf((b * t - a) / st)
    if l2 >= l1:
        # only reachable through rounding when the probability is ~0
        return -math.inf
    return l1 + math.log(-math.expm1(l2 - l1))


def line_noncrossing(a: float, b: float, t: float) -> float:
    return min(1.0, max(0.0, math.exp(log_line_noncrossing(a, b, t))))


def exact_line_noncrossing(boundary: LineBoundary) -> float:
    """P(W_s <= a + b s for all 0 <= s <= t), from the drifted reflection formula.

    ``Phi((a+bt)/sqrt t) - exp(-2ab) Phi((bt-a)/sqrt t)``, combined in log
    space so that a huge ``exp(-2ab)`` against a tiny ``Phi`` stays finite.
    """
    return line_noncrossing(boundary.a, boundary.b, boundary.t)


def _min1(x: float) -> float:
    return 1.0 if x >= 1.0 else x


def lemma1_shape(a: float, b: float, t: float) -> float:
    """log of ``min(1, a/|bt|) Phi((a+bt)/sqrt t)``."""
    return math.log(_min1(a / abs(b * t))) + log_normal_cdf((a + b * t) / math.sqrt(t))


def lemma2_shape(a: float, t: float) -> float:
    return math.log(_min1(a / math.sqrt(t)))


def lemma3_shape(a: float, b: float, t0: float, t: float) -> float:
    """log of ``min(1, a/|b t0|) Phi((a/2 + b t0)/sqrt t0) min(1, a/sqrt t)``.

    Degenerate inputs use their limits: ``b = 0`` makes the first factor 1,
    ``t0 = 0`` makes the Phi factor 1, ``t = 0`` makes the last factor 1.
    """
    first = 0.0 if b == 0 or t0 == 0 else math.log(_min1(a / abs(b * t0)))
    mid = 0.0 if t0 == 0 else log_normal_cdf((a / 2 + b * t0) / math.sqrt(t0))
    last = 0.0 if t == 0 else math.log(_min1(a / math.sqrt(t)))
    return first + mid + last


def lemma1_lower_bound(boundary: LineBoundary, constants: ConstantPolicy | None = None) -> float:
    """Steep-line bound ``c1 min(1, a/|bt|) Phi((a+bt)/sqrt t)``.

    Only applies when ``b < 0`` and ``|b| sqrt(t)`` reaches the policy's
    ``lemma1_threshold``.
    """
    constants = constants or ConstantPolicy.shape()
    a, b, t = boundary.a, boundary.b, boundary.t
    if not b < 0:
        raise ValueError("the steep-slope shape needs a negative slope")
    if abs(b) * math.sqrt(t) < constants.lemma1_threshold:
        raise ValueError(
            f"the steep-slope shape needs |b| sqrt(t) >= {constants.lemma1_threshold}, got {abs(b) * math.sqrt(t):.6g}"
        )
    return constants.lemma1 * math.exp(lemma1_shape(a, b, t))


def lemma2_lower_bound(boundary: LineBoundary, H: float, constants: ConstantPolicy | None = None) -> float:
    """Shallow-line bound ``c2(H) min(1, a/sqrt t)`` for ``b <= 0``, ``|b| sqrt(t) <= H``."""
    constants = constants or ConstantPolicy.shape()
    a, b, t = boundary.a, boundary.b, boundary.t
    if not H > 0:
        raise ValueError("H must be positive")
    if b > 0:
        raise ValueError("the shallow-slope shape needs b <= 0")
    if abs(b) * math.sqrt(t) > H:
        raise ValueError(f"the shallow-slope shape needs |b| sqrt(t) <= H={H}, got {abs(b) * math.sqrt(t):.6g}")
    if H > constants.lemma2_max_H:
        raise ValueError(f"the shallow-slope constant of this policy is only valid for H <= {constants.lemma2_max_H}")
    return constants.lemma2 * math.exp(lemma2_shape(a, t))


def lemma3_lower_bound(boundary: PiecewiseBoundary, constants: ConstantPolicy | None = None) -> float:
    constants = constants or ConstantPolicy.shape()
    return constants.lemma3 * math.exp(lemma3_shape(boundary.a, boundary.b, boundary.t0, boundary.t))


def log_piecewise_noncrossing_quad(a: float, b: float, t0: float, t: float) -> float:
    """log P(W_s <= a + b min(s, t0) for all s <= t) by one-dimensional quadrature.

    Conditions on ``W(t0) = c0 - y`` (``c0 = a + b t0``): the slope piece is
    survived with the bridge probability ``1 - exp(-2 a y / t0)`` and the
    flat piece with ``2 Phi(y / sqrt(t - t0)) - 1``.
    """
    if not (a > 0 and 0 < t0 <= t):
        raise ValueError("need a > 0 and 0 < t0 <= t")
    c0 = a + b * t0
    st0 = math.sqrt(t0)
    rest = t - t0
    peak = c0 if c0 > 0 else 0.0
    scale = -(c0 - peak) ** 2 / (2 * t0)

    def integrand(y):
        dens = math.exp(-((c0 - y) ** 2) / (2 * t0) - scale)
        bridge = -math.expm1(-2 * a * y / t0)
        flat = 1.0 if rest <= 0 else 2 * normal_cdf(y / math.sqrt(rest)) - 1
        return dens * bridge * flat

    widths = [st0, t0 / (2 * a)]
    if c0 < 0:
        widths.append(t0 / abs(c0))
    if rest > 0:
        widths.append(math.sqrt(rest))
    upper = peak + 40 * st0
    pts = sorted(p for p in {*widths, peak} if 0.0 < p < upper)
    val, _ = integrate.quad(integrand, 0.0, upper, points=pts or None, limit=400, epsabs=0.0, epsrel=1e-11)
    if val <= 0:
        return -math.inf
    return min(0.0, scale + math.log(val) - 0.5 * math.log(2 * math.pi * t0))


def piecewise_noncrossing_quad(boundary: PiecewiseBoundary) -> float:
    return math.exp(
        log_piecewise_noncrossing_quad(boundary.a, boundary.b, boundary.t0, boundary.t)
    )


def euler_bias_allowance(a: float, b: float, t: float, step: float) -> float:
    """Twice the first-order overshoot of the discrete skeleton over the exact line probability."""
    shifted = line_noncrossing(a + EULER_SHIFT * math.sqrt(step), b, t)
    return 2.0 * max(0.0, shifted - line_noncrossing(a, b, t))


def _resolve_step(t: float, cfg: MCConfig) -> float:
    step = cfg.step if cfg.step is not None else t / STEPS_PER_HORIZON
    if not step > 0:
        raise ValueError("step must be positive")
    if cfg.method == "euler" and step > t / STEPS_PER_HORIZON * (1 + 1e-12):
        raise ValueError(f"euler skeleton needs step <= t/{STEPS_PER_HORIZON}, got {step}")
    return step


def _phases(pieces, step):
    """Skeleton phases ``(c_start, slope, h, nsteps)`` with every break on the grid."""
    rows = []
    for c_start, slope, length in pieces:
        if length <= 0:
            continue
        n = max(1, math.ceil(length / step - 1e-9))
        rows.append((c_start, slope, length / n, n))
    return np.array(rows, dtype=float)


def _mc_skeleton(pieces, t: float, cfg: MCConfig, block: int) -> MCEstimate:
    if cfg.samples < MIN_MC_SAMPLES:
        raise ValueError(f"need at least {MIN_MC_SAMPLES} samples")
    step = _resolve_step(t, cfg)
    phases = _phases(pieces, step)

    if cfg.method == "bridge":
        sd = np.concatenate([np.full(int(n), math.sqrt(h)) for _, _, h, n in phases])
        thr = np.concatenate([c + s * h * np.arange(1, int(n) + 1) for c, s, h, n in phases])
        thr0 = phases[0, 0]

        def count(rng, m):
            return kernels.survival_count(sd, thr, m, rng, bridge=True, thr0=thr0)
    else:
        def count(rng, m):
            return kernels.skeleton_survival_count(phases, block, m, rng)

    return run_batches(count, cfg)


def mc_piecewise_noncrossing(boundary: PiecewiseBoundary, cfg: MCConfig, block: int = DEFAULT_BLOCK) -> MCEstimate:
    """Monte Carlo estimate of P(W_s <= a + b min(s, t0) for all s <= t).

    With ``cfg.method == "euler"`` the boundary is only checked on a grid of
    step at most ``cfg.step`` (default ``t / 1e4``) with ``t0`` on the grid.
    A discrete skeleton slips past the boundary more easily than the
    continuous path, so this estimate is biased *upwards*; compare lower
    bounds against ``ci_high``.  ``"bridge"`` removes that bias.
    """
    pieces = [
        (boundary.a, boundary.b, boundary.t0),
        (boundary.a + boundary.b * boundary.t0, 0.0, boundary.t - boundary.t0),
    ]
    return _mc_skeleton(pieces, boundary.t, cfg, block)


def mc_line_noncrossing(boundary: LineBoundary, cfg: MCConfig, block: int = DEFAULT_BLOCK) -> MCEstimate:
    """Same oracle as :func:`mc_piecewise_noncrossing` for a single line of any slope."""
    return _mc_skeleton([(boundary.a, boundary.b, boundary.t)], boundary.t, cfg, block)
