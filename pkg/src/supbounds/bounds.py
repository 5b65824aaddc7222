"""Lower bounds for P(max_i Z(t_i) > u) over a stationary Gaussian sequence.

Three evaluators share one lag convention: for a model sampled with
``spacing`` h, "r(m)" means ``model.r(m h)`` for ``m = 1 .. n-1``, and
``rho(m) = r(m) / (1 - r(m))``.

``theorem3_exact_bound``
    the fully explicit bound from conditioning on the last point and
    comparing with a random walk plus independent noise.  Needs a walk
    probability from :func:`walk_event_probability`.
``theorem2_bound``
    the same with thresholds from a height/slope/break boundary ``(C, K, N)``
    and the walk probability replaced by the slope-then-flat Brownian shape.
``theorem1_bound``
    the ``C = 1/u, K = 0, N = 1`` special case with its own prefactor.

All products of normal CDFs are sums of logs.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import kernels
from .bm import lemma3_shape
from .constants import ConstantPolicy
from .covariance import CorrelationModel, check_hypotheses, log_grid_size, prop2_grid
from .mc import MCConfig, MCEstimate, run_batches
from .special import log_normal_cdf, normal_cdf

# sum at most this many terms in the analytic small-alpha evaluator
ANALYTIC_TERM_CAP = 10_000_000


class DegenerateCorrelation(ValueError):
    """r(m) = 1 at some positive lag, so the conditioning step divides by zero."""


@dataclasses.dataclass(frozen=True)
class Thm1Params:
    pass


@dataclasses.dataclass(frozen=True)
class Thm2Params:
    C: float
    K: float
    N: int


@dataclasses.dataclass(frozen=True)
class Thm3Params:
    delta: tuple  # delta[m-1] is the threshold fraction at lag m


@dataclasses.dataclass(frozen=True)
class BoundSpec:
    model: CorrelationModel
    u: float
    n: int
    params: Thm1Params | Thm2Params | Thm3Params = Thm1Params()
    constants: ConstantPolicy = dataclasses.field(default_factory=ConstantPolicy.explicit)
    spacing: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.u) and self.u >= 1):
            raise ValueError(f"u must be a finite number >= 1, got {self.u}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        p = self.params
        if isinstance(p, Thm2Params):
            if not p.C > 0:
                raise ValueError("C must be positive")
            if not p.K >= 0:
                raise ValueError("K must be non-negative")
            if int(p.N) != p.N or not 1 <= p.N <= self.n - 1:
                raise ValueError(f"N must be an integer in [1, n-1], got {p.N}")
        elif isinstance(p, Thm3Params):
            if len(p.delta) != self.n - 1:
                raise ValueError(f"delta needs n-1 = {self.n - 1} entries, got {len(p.delta)}")
            if not all(math.isfinite(d) for d in p.delta):
                raise ValueError("delta entries must be finite")
        elif not isinstance(p, Thm1Params):
            raise TypeError("params must be Thm1Params, Thm2Params or Thm3Params")

    def replace(self, **kw) -> "BoundSpec":
        return dataclasses.replace(self, **kw)

    @property
    def lag_times(self) -> np.ndarray:
        return self.spacing * np.arange(1, self.n)

    def lag_values(self):
        """``(r, 1 - r, rho)`` at lags ``1 .. n-1``."""
        t = self.lag_times
        r = np.atleast_1d(self.model.r(t)).astype(float)
        omr = np.atleast_1d(self.model.one_minus_r(t)).astype(float)
        bad = np.nonzero(omr <= 0)[0]
        if bad.size:
            raise DegenerateCorrelation(f"r = 1 at lag {bad[0] + 1}; perfectly correlated points")
        return r, omr, r / omr

    def hypotheses(self):
        return check_hypotheses(self.model, self.u, self.spacing * np.arange(0, self.n))


@dataclasses.dataclass(frozen=True)
class WalkStructure:
    """Gaussian walk with ``cumulative[i-1] = rho(n - i)`` for ``i = 1 .. n-1``."""

    alphas_sq: np.ndarray
    cumulative: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.cumulative)


def build_walk(model: CorrelationModel, u: float, n: int, spacing: float = 1.0) -> WalkStructure:
    spec = BoundSpec(model, u, n, spacing=spacing)
    r, _, rho = spec.lag_values()
    if np.any(r < 0):
        raise ValueError("walk needs r >= 0 at every lag")
    cumulative = rho[::-1].copy()
    inc = np.diff(cumulative, prepend=0.0)
    # tolerate rounding-level negatives in equal consecutive values
    tol = 1e-14 * np.maximum(1.0, np.abs(cumulative))
    if np.any(inc < -tol):
        i = int(np.nonzero(inc < -tol)[0][0])
        raise ValueError(f"walk variance decreases at step {i + 1}; r must be nonincreasing")
    return WalkStructure(np.clip(inc, 0.0, None), cumulative)


def delta_from_params(C: float, K: float, N: int, rho) -> np.ndarray:
    """Threshold fractions ``C/u - (K/u) min(rho(m), rho(N))`` times ``u``; i.e. returns ``u * delta``.

    Divide by ``u`` for the fractions themselves (see :func:`delta_for_spec`).
    """
    rho = np.asarray(rho, dtype=float)
    return C - K * np.minimum(rho, rho[N - 1])


def delta_for_spec(spec: BoundSpec) -> np.ndarray:
    p = spec.params
    if not isinstance(p, Thm2Params):
        raise TypeError("delta_for_spec needs Thm2Params")
    _, _, rho = spec.lag_values()
    return delta_from_params(p.C, p.K, p.N, rho) / spec.u


@dataclasses.dataclass
class BoundResult:
    theorem: int
    value: float
    log_value: float
    log_prefactor: float
    log_walk: float
    log_phi_product: float
    hypotheses: dict
    constants: dict
    params: dict

    @property
    def hypotheses_ok(self) -> bool:
        return bool(self.hypotheses.get("passed", False))

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["hypotheses_ok"] = self.hypotheses_ok
        return d


def _result(theorem, spec, log_pre, log_walk, log_phi, params):
    total = log_pre + log_walk + log_phi
    return BoundResult(
        theorem=theorem,
        value=math.exp(total),
        log_value=total,
        log_prefactor=log_pre,
        log_walk=log_walk,
        log_phi_product=log_phi,
        hypotheses=spec.hypotheses().as_dict(),
        constants=spec.constants.as_dict(),
        params=params,
    )


def _log_gaussian_prefactor(n, u):
    return math.log(n) - u * u / 2.0 - math.log(u)


def _walk_value(walk_prob) -> float:
    p = walk_prob.mean if isinstance(walk_prob, MCEstimate) else float(walk_prob)
    if not 0.0 <= p <= 1.0:
        raise ValueError("walk probability must lie in [0, 1]")
    return p


def theorem3_log_phi_terms(spec: BoundSpec) -> np.ndarray:
    p = spec.params
    if not isinstance(p, Thm3Params):
        raise TypeError("the explicit walk bound needs Thm3Params")
    r, omr, _ = spec.lag_values()
    delta = np.asarray(p.delta, dtype=float)
    u = spec.u
    args = u * np.sqrt(omr) * (1.0 - delta - r / (u * u * omr))
    return np.asarray(log_normal_cdf(args), dtype=float)


def theorem3_exact_bound(spec: BoundSpec, walk_prob) -> BoundResult:
    """``n e^{-u^2/2}/(12u) * walk_prob * prod_m Phi(u sqrt(1-r(m)) (1 - delta(m) - r(m)/(u^2 (1-r(m)))))``.

    Holds for any real thresholds ``delta`` once ``r`` is nonnegative and
    nonincreasing over the lags and ``u >= 1``; no unspecified constants.
    ``walk_prob`` is a probability or an :class:`MCEstimate` (its mean is used).
    """
    hyp = spec.hypotheses()
    if not (hyp.monotone_nonincreasing and hyp.nonnegative):
        raise ValueError(f"the explicit walk bound needs r nonincreasing and nonnegative: {hyp.as_dict()}")
    p = _walk_value(walk_prob)
    log_walk = math.log(p) if p > 0 else -math.inf
    log_pre = _log_gaussian_prefactor(spec.n, spec.u) - math.log(12.0)
    log_phi = float(np.sum(theorem3_log_phi_terms(spec)))
    return _result(3, spec, log_pre, log_walk, log_phi, {"delta": list(spec.params.delta)})


def _correction(spec: BoundSpec, r, omr, unit_numerator: bool):
    u2 = spec.u * spec.u
    if spec.constants.exact_correction:
        return (1.0 if unit_numerator else r) / (u2 * omr)
    return spec.constants.big_oh_constant / (u2 * omr)


def theorem2_log_phi_terms(spec: BoundSpec) -> np.ndarray:
    p = spec.params
    if not isinstance(p, Thm2Params):
        raise TypeError("the height/slope/break bound needs Thm2Params")
    r, omr, rho = spec.lag_values()
    u = spec.u
    slope = (p.K / u) * np.minimum(rho, rho[p.N - 1])
    args = u * np.sqrt(omr) * (1.0 - p.C / u + slope - _correction(spec, r, omr, False))
    return np.asarray(log_normal_cdf(args), dtype=float)


def theorem2_bound(spec: BoundSpec) -> BoundResult:
    """Height/slope/break bound with the policy's constants.

    ``prefactor * n e^{-u^2/2}/u * c3 * min(1, C/(K rho_N)) Phi((C/2 - K rho_N)/sqrt(rho_N))
    * min(1, C/sqrt(rho_1)) * prod_m Phi(...)``.  Inside each ``Phi`` the
    unspecified correction is ``-big_oh/(u^2 (1-r))``, or the exact
    ``-r/(u^2 (1-r))`` when the policy asks for it.  ``rho_N = 0`` and
    ``K = 0`` fall back to the limit value 1 of the affected factors.
    """
    p = spec.params
    if not isinstance(p, Thm2Params):
        raise TypeError("the height/slope/break bound needs Thm2Params")
    _, _, rho = spec.lag_values()
    c = spec.constants
    log_pre = _log_gaussian_prefactor(spec.n, spec.u) + math.log(c.thm3_prefactor)
    log_walk = math.log(c.lemma3) + lemma3_shape(p.C, -p.K, float(rho[p.N - 1]), float(rho[0]))
    log_phi = float(np.sum(theorem2_log_phi_terms(spec)))
    return _result(2, spec, log_pre, log_walk, log_phi, dataclasses.asdict(p))


def theorem1_bound(spec: BoundSpec) -> BoundResult:
    """``prefactor * n e^{-u^2/2}/u * min(1, sqrt((1-r(1))/(u^2 r(1)))) * prod_m Phi(u sqrt(1-r(m)) (1 - correction))``.

    The exact correction here is ``1/(u^2 (1-r))``: the ``1/u^2`` from
    ``C = 1/u`` plus ``r/(u^2 (1-r))``.
    """
    r, omr, rho = spec.lag_values()
    c = spec.constants
    u = spec.u
    log_pre = _log_gaussian_prefactor(spec.n, u) + math.log(c.thm1_prefactor)
    rho1 = float(rho[0])
    log_walk = 0.0 if rho1 == 0 else math.log(min(1.0, 1.0 / (u * math.sqrt(rho1))))
    args = u * np.sqrt(omr) * (1.0 - _correction(spec, r, omr, True))
    log_phi = float(np.sum(log_normal_cdf(args)))
    return _result(1, spec, log_pre, log_walk, log_phi, {})


def theorem1_as_theorem2(spec: BoundSpec) -> BoundSpec:
    """The ``(C, K, N) = (1/u, 0, 1)`` instance of :func:`theorem2_bound` on the same sequence."""
    return spec.replace(params=Thm2Params(1.0 / spec.u, 0.0, 1))


def theorem3_from_theorem2(spec: BoundSpec) -> BoundSpec:
    """Spec for :func:`theorem3_exact_bound` whose thresholds are the ones induced by the ``(C, K, N)`` boundary."""
    return spec.replace(params=Thm3Params(tuple(float(d) for d in delta_for_spec(spec))))


def walk_event_probability(
    walk: WalkStructure,
    delta,
    u: float,
    method: str = "mc",
    cfg: MCConfig | None = None,
    constants: ConstantPolicy | None = None,
    boundary: Thm2Params | None = None,
):
    """Probability that the walk stays below ``delta(n-i) u`` at every step ``i``.

    ``method="mc"`` returns an :class:`MCEstimate` of the exact discrete
    probability (a one-step walk is computed exactly instead).
    ``method="bm"`` returns the slope-then-flat Brownian lower bound for the
    ``(C, K, N)`` given as ``boundary``; it is only valid when ``delta`` lies
    on or above that boundary's thresholds, which is checked.
    """
    delta = np.asarray(delta, dtype=float)
    steps = walk.steps
    if delta.size != steps:
        raise ValueError(f"delta needs {steps} entries, got {delta.size}")
    thr = delta[::-1] * u

    if method == "mc":
        cfg = cfg or MCConfig()
        sd = np.sqrt(walk.alphas_sq)
        if walk.cumulative[-1] <= 0:
            raise ValueError("mc walk probability needs positive total variance")
        if steps == 1:
            p = float(normal_cdf(thr[0] / sd[0]))
            return MCEstimate(p, p, p, cfg.samples, cfg.seed)
        return run_batches(lambda rng, m: kernels.survival_count(sd, thr, m, rng), cfg)

    if method == "bm":
        if boundary is None:
            raise ValueError("bm walk probability needs the (C, K, N) boundary")
        constants = constants or ConstantPolicy.shape()
        C, K, N = boundary.C, boundary.K, boundary.N
        if not (C > 0 and K >= 0 and 1 <= N <= steps):
            raise ValueError("invalid (C, K, N) for this walk")
        rho_by_lag = walk.cumulative[::-1]
        need = delta_from_params(C, K, N, rho_by_lag) / u
        if np.any(delta < need - 1e-12 * np.maximum(1.0, np.abs(need))):
            raise ValueError("delta lies below the (C, K, N) boundary; the Brownian bound would not apply")
        shape = lemma3_shape(C, -K, float(rho_by_lag[N - 1]), float(walk.cumulative[-1]))
        return constants.lemma3 * math.exp(shape)

    raise ValueError(f"unknown method {method!r}")


def prop2_params(alpha: float, u: float, kappa: float, Y: float, n: int | None = None) -> Thm2Params:
    """``C = u alpha``, ``K = kappa/(u alpha)``, ``N = floor(Y^(1/alpha))`` (clipped to ``[1, n-1]``)."""
    N = max(1, math.floor(Y ** (1.0 / alpha) * (1 + 1e-14)))
    if n is not None:
        N = min(N, n - 1)
    return Thm2Params(u * alpha, kappa / (u * alpha), N)


def shao_grid_spec(alpha: float, u: float, b: float, params=Thm1Params(), constants: ConstantPolicy | None = None) -> BoundSpec:
    """Spec for ``Z(i/M)``, ``i = 1..M``, with the Shao model and ``M`` from :func:`prop2_grid`."""
    grid = prop2_grid(alpha, u, b)
    return BoundSpec(
        CorrelationModel.shao(alpha), u, grid.M, params,
        constants or ConstantPolicy.explicit(), spacing=grid.spacing,
    )


def prop2_log_shape(alpha: float, u: float, b: float, kappa: float, Y: float) -> dict:
    """log of the small-alpha shape with every implied constant and O(alpha) set aside.

    ``M e^{-u^2/2}/u * alpha^{3/2} Phi(-kappa sqrt(b/(alpha Y)))
    * prod_{j <= M^{1/4}} Phi(sqrt(j^alpha/(b alpha)) (1 + kappa b min(1/j^alpha, 1/Y)))``.
    Works from ``log M`` so it also covers grids far too large to enumerate;
    the product is summed exactly up to ``ANALYTIC_TERM_CAP`` terms.
    """
    log_m = log_grid_size(alpha, u, b)
    if log_m < 50:
        log_m = math.log(max(1, math.floor(math.exp(log_m) * (1 + 1e-14))))
    terms = math.floor(math.exp(log_m / 4.0) * (1 + 1e-14))
    if terms > ANALYTIC_TERM_CAP:
        raise ValueError(f"product over {terms} terms exceeds the cap {ANALYTIC_TERM_CAP}")
    log_pre = log_m - u * u / 2.0 - math.log(u) + 1.5 * math.log(alpha)
    log_head = float(log_normal_cdf(-kappa * math.sqrt(b / (alpha * Y))))
    log_prod = 0.0
    for start in range(1, terms + 1, 1 << 20):
        j = np.arange(start, min(terms, start + (1 << 20) - 1) + 1, dtype=float)
        ja = j**alpha
        args = np.sqrt(ja / (b * alpha)) * (1.0 + kappa * b * np.minimum(1.0 / ja, 1.0 / Y))
        log_prod += float(np.sum(log_normal_cdf(args)))
    return {
        "log_M": log_m,
        "product_terms": terms,
        "log_prefactor": log_pre,
        "log_head": log_head,
        "log_product": log_prod,
        "log_value": log_pre + log_head + log_prod,
    }
