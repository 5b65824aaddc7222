"""Gaussian vectors on a grid, exceedance estimates, and numerical checks of the bound chain.

Every check returns a plain report (dataclass with ``as_dict``) carrying both
sides of each comparison, so callers and the CLI can print them.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .bounds import (
    BoundSpec,
    Thm1Params,
    Thm2Params,
    build_walk,
    delta_for_spec,
    theorem1_as_theorem2,
    theorem1_bound,
    theorem2_bound,
    theorem2_log_phi_terms,
    theorem3_exact_bound,
    theorem3_from_theorem2,
    theorem3_log_phi_terms,
    walk_event_probability,
)
from .constants import ConstantPolicy
from .covariance import CorrelationModel
from .mc import MCConfig, MCEstimate, batch_generators, batch_sizes, run_batches
from .special import normal_sf

JITTER_LADDER = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8)
FACTOR_TOL = 1e-8
MAX_POINTS = 5000
MIN_EXPECTED_HITS = 50
MATCH_TOL = 0.02
DELTA_LOG_TOL = 1e-10


class FactorizationError(RuntimeError):
    pass


def default_spacing(model: CorrelationModel, n: int) -> float:
    """``1/n`` for the Shao model (points ``i/n`` in ``[0, 1]``), 1 otherwise."""
    return 1.0 / n if model.kind == "shao" else 1.0


def lag_correlation(model: CorrelationModel, n: int, spacing: float) -> np.ndarray:
    """``r(m * spacing)`` for ``m = 0 .. n-1``."""
    return np.atleast_1d(model.r(spacing * np.arange(n))).astype(float)


def toeplitz_correlation(model: CorrelationModel, n: int, spacing: float) -> np.ndarray:
    r = lag_correlation(model, n, spacing)
    idx = np.arange(n)
    return r[np.abs(idx[:, None] - idx[None, :])]


def factorize(cov: np.ndarray, label: str = "covariance"):
    """Cholesky factor, adding the smallest diagonal jitter from :data:`JITTER_LADDER` that works."""
    eye = np.eye(cov.shape[0])
    for jitter in JITTER_LADDER:
        try:
            L = np.linalg.cholesky(cov + jitter * eye)
        except np.linalg.LinAlgError:
            continue
        if np.max(np.abs(L @ L.T - cov)) <= FACTOR_TOL:
            return L, jitter
    raise FactorizationError(f"{label}: Cholesky failed even with jitter {JITTER_LADDER[-1]:g}")


@dataclasses.dataclass(frozen=True, eq=False)
class GaussianEnsemble:
    covariance: np.ndarray
    factor: np.ndarray
    jitter_used: float

    @classmethod
    def from_matrix(cls, cov, label="covariance") -> "GaussianEnsemble":
        cov = np.array(cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T, atol=0, rtol=0):
            raise ValueError("covariance must be a symmetric square matrix")
        L, jitter = factorize(cov, label)
        return cls(cov, L, jitter)

    @classmethod
    def from_model(cls, model: CorrelationModel, n: int, spacing: float) -> "GaussianEnsemble":
        if n > MAX_POINTS:
            raise ValueError(f"at most {MAX_POINTS} points, got {n}")
        return cls.from_matrix(toeplitz_correlation(model, n, spacing), f"model {model.describe()}")

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        return rng.standard_normal((m, self.dim)) @ self.factor.T

    def orthant_probability(self, thresholds, cfg: MCConfig) -> MCEstimate:
        """P(X_j <= thresholds[j] for all j)."""
        thr = np.asarray(thresholds, dtype=float)
        return run_batches(lambda rng, m: int(np.count_nonzero(np.all(self.sample(rng, m) <= thr, axis=1))), cfg)


def sample_max_exceedance(model: CorrelationModel, n: int, u: float, cfg: MCConfig, spacing: float | None = None) -> MCEstimate:
    """MC estimate of P(max_{i <= n} Z(i * spacing) > u).

    Raises if ``n`` exceeds :data:`MAX_POINTS` or if ``samples * (1 - Phi(u))``
    (a floor on the expected hit count) is below :data:`MIN_EXPECTED_HITS`.
    """
    spacing = default_spacing(model, n) if spacing is None else spacing
    if n > MAX_POINTS:
        raise ValueError(f"at most {MAX_POINTS} points, got {n}")
    if cfg.samples * normal_sf(u) < MIN_EXPECTED_HITS:
        raise ValueError(
            f"{cfg.samples} samples expect fewer than {MIN_EXPECTED_HITS} exceedances at u={u}; raise samples or lower u"
        )
    ens = GaussianEnsemble.from_model(model, n, spacing)
    return run_batches(lambda rng, m: int(np.count_nonzero(ens.sample(rng, m).max(axis=1) > u)), cfg)


def _second_moments(sample_fn, dim, cfg: MCConfig):
    """E[X X^T] over ``cfg.samples`` draws of a zero-mean vector, batch by batch."""
    acc = np.zeros((dim, dim))
    sizes = batch_sizes(cfg.samples, cfg.batch_size)
    for rng, m in zip(batch_generators(cfg.seed, len(sizes)), sizes):
        x = sample_fn(rng, m)
        acc += x.T @ x
    return acc / cfg.samples


def _conditioning_parts(model, n, spacing):
    r = lag_correlation(model, n, spacing)
    lags = n - np.arange(1, n)  # n - j for j = 1..n-1
    r_last = r[lags]
    # 1 - r^2 = (1 - r)(1 + r) keeps digits when r is close to 1
    scale = np.sqrt(np.atleast_1d(model.one_minus_r(spacing * lags)) * (1.0 + r_last))
    if np.any(scale <= 0):
        raise ValueError("r = 1 at a needed lag; conditioning is degenerate")
    return r, r_last, scale


@dataclasses.dataclass(frozen=True, eq=False)
class ConditionedView:
    v_correlations: np.ndarray


def conditioned_correlations(model: CorrelationModel, n: int, spacing: float | None = None) -> ConditionedView:
    """Correlations of ``V_j = (Z_j - r(n-j) Z_n) / sqrt(1 - r(n-j)^2)``, ``j = 1..n-1``."""
    spacing = default_spacing(model, n) if spacing is None else spacing
    r, r_last, scale = _conditioning_parts(model, n, spacing)
    j = np.arange(n - 1)
    base = r[np.abs(j[:, None] - j[None, :])]
    v = (base - np.outer(r_last, r_last)) / np.outer(scale, scale)
    np.fill_diagonal(v, 1.0)
    return ConditionedView(v)


def comparison_correlations(model: CorrelationModel, n: int, spacing: float | None = None) -> np.ndarray:
    """``r(n - min(j,k)) (1 - r(n - max(j,k))) / (s_j s_k)`` off the diagonal, 1 on it."""
    spacing = default_spacing(model, n) if spacing is None else spacing
    _, r_last, scale = _conditioning_parts(model, n, spacing)
    j = np.arange(n - 1)
    lo = np.minimum(j[:, None], j[None, :])
    hi = np.maximum(j[:, None], j[None, :])
    x = r_last[lo] * (1.0 - r_last[hi]) / np.outer(scale, scale)
    np.fill_diagonal(x, 1.0)
    return x


@dataclasses.dataclass
class ConditioningReport:
    n: int
    samples: int
    max_abs_v_deviation: float
    max_abs_vz_correlation: float
    passed: bool

    def as_dict(self):
        return dataclasses.asdict(self)


def conditioning_identity_check(model, n, cfg: MCConfig, spacing=None, tol=MATCH_TOL) -> ConditioningReport:
    """Sample Z, form the V_j empirically, compare with the analytic correlations and with E V_j Z_n = 0."""
    spacing = default_spacing(model, n) if spacing is None else spacing
    view = conditioned_correlations(model, n, spacing)
    _, r_last, scale = _conditioning_parts(model, n, spacing)
    ens = GaussianEnsemble.from_model(model, n, spacing)

    def draw(rng, m):
        z = ens.sample(rng, m)
        v = (z[:, :-1] - z[:, -1:] * r_last) / scale
        return np.hstack([v, z[:, -1:]])

    mom = _second_moments(draw, n, cfg)
    d = np.sqrt(np.diag(mom))
    corr = mom / np.outer(d, d)
    dev = float(np.max(np.abs(corr[:-1, :-1] - view.v_correlations)))
    vz = float(np.max(np.abs(corr[:-1, -1])))
    return ConditioningReport(n, cfg.samples, dev, vz, dev <= tol and vz <= tol)


def stationarity_check(model, n, cfg: MCConfig, spacing=None, tol=MATCH_TOL) -> dict:
    """Empirical E Z_j Z_k against ``r(|j-k|)``, worst entry."""
    spacing = default_spacing(model, n) if spacing is None else spacing
    ens = GaussianEnsemble.from_model(model, n, spacing)
    mom = _second_moments(ens.sample, n, cfg)
    dev = float(np.max(np.abs(mom - toeplitz_correlation(model, n, spacing))))
    return {"n": n, "samples": cfg.samples, "max_abs_deviation": dev, "passed": dev <= tol}


@dataclasses.dataclass
class ComparisonReport:
    entrywise_holds: bool
    min_entry_gap: float
    thresholds: list
    lhs: MCEstimate
    rhs: MCEstimate
    ordering_holds: bool

    @property
    def passed(self):
        return self.entrywise_holds and self.ordering_holds

    def as_dict(self):
        d = dataclasses.asdict(self)
        d["passed"] = self.passed
        return d


def _derived_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence((seed, stream)).generate_state(1)[0])


def slepian_comparison_check(model, n, u, cfg: MCConfig, spacing=None, thresholds=None) -> ComparisonReport:
    """Check E V_j V_k >= E X_j X_k entrywise and P(V <= c) >= P(X <= c) by simulation.

    Default thresholds are ``(u - r(n-j)(u + 1/u)) / sqrt(1 - r(n-j)^2)``,
    the worst case of the conditioning step.  The ordering only fails when
    the V-orthant interval lies wholly below the X-orthant interval.
    """
    spacing = default_spacing(model, n) if spacing is None else spacing
    v = conditioned_correlations(model, n, spacing).v_correlations
    x = comparison_correlations(model, n, spacing)
    off = ~np.eye(n - 1, dtype=bool)
    gap = float(np.min((v - x)[off])) if n > 2 else 0.0
    if thresholds is None:
        _, r_last, scale = _conditioning_parts(model, n, spacing)
        thresholds = (u - r_last * (u + 1.0 / u)) / scale
    thresholds = np.asarray(thresholds, dtype=float)
    lhs = GaussianEnsemble.from_matrix(v, "V correlations").orthant_probability(thresholds, cfg)
    rhs = GaussianEnsemble.from_matrix(x, "comparison correlations").orthant_probability(
        thresholds, cfg.replace(seed=_derived_seed(cfg.seed, 1))
    )
    return ComparisonReport(gap >= -1e-12, gap, thresholds.tolist(), lhs, rhs, not lhs.ci_high < rhs.ci_low)


@dataclasses.dataclass
class WalkIdentityReport:
    steps: int
    samples: int
    max_abs_deviation: float
    max_normalized_deviation: float
    passed: bool

    def as_dict(self):
        return dataclasses.asdict(self)


def walk_identity_check(walk, cfg: MCConfig, tol=MATCH_TOL) -> WalkIdentityReport:
    """Empirical covariance of the partial sums against ``min(cumulative_i, cumulative_k)``.

    Deviations are divided by ``sqrt(var_i var_k)`` before comparing with
    ``tol``; large walk variances would otherwise make an absolute
    tolerance meaningless.
    """
    sd = np.sqrt(walk.alphas_sq)
    k = walk.steps
    mom = _second_moments(lambda rng, m: np.cumsum(rng.standard_normal((m, k)) * sd, axis=1), k, cfg)
    cum = walk.cumulative
    target = np.minimum(cum[:, None], cum[None, :])
    diff = np.abs(mom - target)
    norm = np.sqrt(np.outer(cum, cum))
    scaled = np.where(norm > 0, diff / np.where(norm > 0, norm, 1.0), diff)
    worst = float(np.max(scaled))
    return WalkIdentityReport(k, cfg.samples, float(np.max(diff)), worst, worst <= tol)


@dataclasses.dataclass
class Inequality:
    name: str
    lhs: float
    rhs: float
    holds: bool


@dataclasses.dataclass
class ChainReport:
    model: dict
    u: float
    n: int
    spacing: float
    params: dict
    constants_mode: str
    seed: int
    samples: int
    hypotheses: dict
    exceedance: MCEstimate
    walk_mc: MCEstimate
    walk_bm: float
    theorem3_mc: float
    theorem3_mc_upper: float
    theorem3_bm: float
    theorem2: float
    theorem1: float
    delta_log_gap: float
    inequalities: list

    @property
    def passed(self) -> bool:
        return all(i.holds for i in self.inequalities)

    def as_dict(self):
        d = dataclasses.asdict(self)
        d["passed"] = self.passed
        return d


def verify_chain(
    model: CorrelationModel,
    u: float,
    n: int,
    cfg: MCConfig,
    spacing: float | None = None,
    params: Thm2Params | None = None,
    constants: ConstantPolicy | None = None,
) -> ChainReport:
    """Evaluate every bound on one instance and test it against simulation.

    ``params`` defaults to the ``(1/u, 0, 1)`` boundary.  The walk
    probability is estimated with ``cfg``; the exceedance probability uses
    an independent stream.  Checked:

    * the explicit walk bound (walk probability at its upper CI edge) <= exceedance upper CI
    * the same bound with the Brownian walk probability <= with the MC walk upper CI
    * theorems 1 and 2 <= exceedance upper CI
    * the height/slope/break and explicit walk normal-CDF products agree in log space
    """
    spacing = default_spacing(model, n) if spacing is None else spacing
    constants = constants or ConstantPolicy.explicit()
    base = BoundSpec(model, u, n, Thm1Params(), constants, spacing)
    s2 = base.replace(params=params) if params is not None else theorem1_as_theorem2(base)
    s3 = theorem3_from_theorem2(s2)
    delta = delta_for_spec(s2)
    walk = build_walk(model, u, n, spacing)

    walk_mc = walk_event_probability(walk, delta, u, "mc", cfg)
    walk_bm = walk_event_probability(walk, delta, u, "bm", constants=constants, boundary=s2.params)
    exceed = sample_max_exceedance(model, n, u, cfg.replace(seed=_derived_seed(cfg.seed, 2)), spacing)

    t3 = theorem3_exact_bound(s3, walk_mc.mean).value
    t3_up = theorem3_exact_bound(s3, walk_mc.ci_high).value
    t3_bm = theorem3_exact_bound(s3, walk_bm).value
    t2 = theorem2_bound(s2).value
    t1 = theorem1_bound(base).value
    gap = abs(float(np.sum(theorem2_log_phi_terms(s2.replace(constants=ConstantPolicy.explicit()))))
              - float(np.sum(theorem3_log_phi_terms(s3))))

    ineq = [
        Inequality("theorem3_le_exceedance", t3_up, exceed.ci_high, t3_up <= exceed.ci_high),
        Inequality("walk_bm_le_walk_mc", t3_bm, t3_up, t3_bm <= t3_up),
        Inequality("theorem2_le_exceedance", t2, exceed.ci_high, t2 <= exceed.ci_high),
        Inequality("theorem1_le_exceedance", t1, exceed.ci_high, t1 <= exceed.ci_high),
        Inequality("delta_consistency", gap, DELTA_LOG_TOL, gap <= DELTA_LOG_TOL),
    ]
    return ChainReport(
        model=model.describe(), u=u, n=n, spacing=spacing, params=dataclasses.asdict(s2.params),
        constants_mode=constants.mode, seed=cfg.seed, samples=cfg.samples,
        hypotheses=base.hypotheses().as_dict(), exceedance=exceed, walk_mc=walk_mc, walk_bm=walk_bm,
        theorem3_mc=t3, theorem3_mc_upper=t3_up, theorem3_bm=t3_bm, theorem2=t2, theorem1=t1,
        delta_log_gap=gap, inequalities=ineq,
    )
