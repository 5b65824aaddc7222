"""Command-line entry point: ``supbounds <command> <action> [flags]``.

Exit status is 0 on success, 1 when a precondition fails or a checked
inequality does not hold, 2 on a usage error.  ``--config FILE`` reads
``key=value`` lines (keys are flag names without dashes); flags given on
the command line win.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import __version__
from .bm import (
    LineBoundary,
    PiecewiseBoundary,
    exact_line_noncrossing,
    lemma1_lower_bound,
    lemma2_lower_bound,
    lemma3_lower_bound,
    mc_line_noncrossing,
    mc_piecewise_noncrossing,
)
from .bounds import (
    BoundSpec,
    Thm1Params,
    Thm2Params,
    Thm3Params,
    build_walk,
    delta_for_spec,
    prop2_params,
    theorem1_bound,
    theorem2_bound,
    theorem3_exact_bound,
    walk_event_probability,
)
from .constants import ConstantPolicy
from .covariance import CorrelationModel, check_hypotheses, prop2_grid
from .gaussian_mc import default_spacing, sample_max_exceedance, verify_chain
from .mc import MCConfig
from .pickands import curve_csv, emit_halpha_curve, optimize


class ContractError(Exception):
    """A precondition or a checked inequality failed; exit status 1."""


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _emit(args, payload: dict):
    text = json.dumps(payload, indent=2, default=_jsonable) + "\n"
    _write(args, text)


def _write(args, text: str):
    if getattr(args, "output", None):
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _provenance(args, randomized: bool) -> dict:
    prov = {"constants_mode": getattr(args, "constants", None), "version": __version__}
    if randomized:
        prov["seed"] = args.seed
        prov["samples"] = args.samples
        print(f"seed: {args.seed}", file=sys.stderr)
    else:
        prov["seed"] = None
        prov["samples"] = None
    return prov


def _mc_cfg(args) -> MCConfig:
    return MCConfig(samples=args.samples, seed=args.seed, step=getattr(args, "step", None),
                    workers=args.workers, method=getattr(args, "method", "euler"))


def _model(args) -> CorrelationModel:
    if args.model == "shao":
        if args.alpha is None:
            raise ContractError("--alpha is required for the shao model")
        return CorrelationModel.shao(args.alpha)
    if args.model == "exponential":
        return CorrelationModel.exponential(args.rate)
    if not args.table:
        raise ContractError("--table is required for the table model")
    return CorrelationModel.from_csv(args.table)


def _grid(args, model):
    """``(n, spacing)`` from ``--grid-b`` (Shao grid of size M) or ``--n``/``--spacing``."""
    if getattr(args, "grid_b", None) is not None:
        if model.kind != "shao":
            raise ContractError("--grid-b only applies to the shao model")
        g = prop2_grid(model.alpha, args.u, args.grid_b)
        return g.M, g.spacing
    if args.n is None:
        raise ContractError("--n (or --grid-b) is required")
    return args.n, args.spacing if args.spacing is not None else default_spacing(model, args.n)


def _thm2_params(args, model, n):
    if args.prop2:
        if model.kind != "shao":
            raise ContractError("--prop2 only applies to the shao model")
        res = optimize()
        return prop2_params(model.alpha, args.u, res.kappa_star, res.Y_chosen, n)
    if args.C is None:
        return None
    return Thm2Params(args.C, args.K, args.N)


# -- bm ---------------------------------------------------------------------

def cmd_bm(args):
    constants = ConstantPolicy.from_name(args.constants)
    if args.action == "mc":
        if args.t0 is not None:
            est = mc_piecewise_noncrossing(PiecewiseBoundary(args.a, args.b, args.t0, args.t), _mc_cfg(args))
        else:
            est = mc_line_noncrossing(LineBoundary(args.a, args.b, args.t), _mc_cfg(args))
        out = est.as_dict()
        out["method"] = args.method
        return {"result": out, "provenance": _provenance(args, True)}
    if args.action == "exact":
        value = exact_line_noncrossing(LineBoundary(args.a, args.b, args.t))
    elif args.action == "lemma1":
        value = lemma1_lower_bound(LineBoundary(args.a, args.b, args.t), constants)
    elif args.action == "lemma2":
        value = lemma2_lower_bound(LineBoundary(args.a, args.b, args.t), args.H, constants)
    else:
        if args.t0 is None:
            raise ContractError("--t0 is required for lemma3")
        value = lemma3_lower_bound(PiecewiseBoundary(args.a, args.b, args.t0, args.t), constants)
    return {"result": {"value": value}, "provenance": _provenance(args, False)}


# -- cov --------------------------------------------------------------------

def cmd_cov(args):
    model = _model(args)
    n, spacing = _grid(args, model)
    report = check_hypotheses(model, args.u, spacing * np.arange(0, n))
    out = {"model": model.describe(), "u": args.u, "n": n, "spacing": spacing, "report": report.as_dict()}
    return {"result": out, "provenance": _provenance(args, False)}


# -- bound ------------------------------------------------------------------

def _read_delta(path):
    vals = []
    with open(path) as fh:
        for line in fh:
            for tok in line.replace(",", " ").split():
                try:
                    vals.append(float(tok))
                except ValueError:
                    continue
    return tuple(vals)


def cmd_bound(args):
    model = _model(args)
    n, spacing = _grid(args, model)
    constants = ConstantPolicy.from_name(args.constants)
    base = BoundSpec(model, args.u, n, Thm1Params(), constants, spacing)
    randomized = False
    extra = {}
    if args.theorem == 1:
        res = theorem1_bound(base)
    elif args.theorem == 2:
        params = _thm2_params(args, model, n)
        if params is None:
            raise ContractError("--theorem 2 needs --C --K --N or --prop2")
        res = theorem2_bound(base.replace(params=params))
    else:
        params = _thm2_params(args, model, n)
        if args.delta_file:
            delta = _read_delta(args.delta_file)
        elif params is not None:
            delta = tuple(float(d) for d in delta_for_spec(base.replace(params=params)))
        else:
            raise ContractError("--theorem 3 needs --delta-file, --C --K --N or --prop2")
        spec = base.replace(params=Thm3Params(delta))
        walk = build_walk(model, args.u, n, spacing)
        if args.walk == "mc":
            randomized = True
            wp = walk_event_probability(walk, delta, args.u, "mc", _mc_cfg(args))
            extra["walk_probability"] = wp.as_dict()
        else:
            if params is None:
                raise ContractError("--walk bm needs --C --K --N or --prop2")
            wp = walk_event_probability(walk, delta, args.u, "bm", constants=constants, boundary=params)
            extra["walk_probability"] = wp
        res = theorem3_exact_bound(spec, wp)
    out = res.as_dict()
    out.update(extra)
    out.update({"model": model.describe(), "u": args.u, "n": n, "spacing": spacing})
    return {"result": out, "provenance": _provenance(args, randomized)}


# -- gp / verify ------------------------------------------------------------

def cmd_gp(args):
    model = _model(args)
    n, spacing = _grid(args, model)
    est = sample_max_exceedance(model, n, args.u, _mc_cfg(args), spacing)
    out = {"model": model.describe(), "u": args.u, "n": n, "spacing": spacing, "exceedance": est.as_dict()}
    return {"result": out, "provenance": _provenance(args, True)}


def cmd_verify(args):
    model = _model(args)
    n, spacing = _grid(args, model)
    params = _thm2_params(args, model, n)
    if params is None and model.kind == "shao" and not args.baseline:
        res = optimize()
        params = prop2_params(model.alpha, args.u, res.kappa_star, res.Y_chosen, n)
    report = verify_chain(model, args.u, n, _mc_cfg(args), spacing, params, ConstantPolicy.from_name(args.constants))
    payload = {"result": report.as_dict(), "provenance": _provenance(args, True)}
    if not report.passed:
        failed = [i.name for i in report.inequalities if not i.holds]
        payload["failed"] = failed
        _emit(args, payload)
        raise ContractError(f"inequalities failed: {', '.join(failed)}")
    return payload


# -- optimize / curve -------------------------------------------------------

def cmd_optimize(args):
    res = optimize()
    return {"result": res.as_dict(), "provenance": _provenance(args, False)}


def cmd_curve(args):
    if args.points < 1:
        raise ContractError("--points must be at least 1")
    if not 0 < args.alpha_min <= args.alpha_max <= 2:
        raise ContractError("need 0 < alpha-min <= alpha-max <= 2")
    grid = np.linspace(args.alpha_min, args.alpha_max, args.points)
    rows = emit_halpha_curve(grid, args.c)
    if args.format == "json":
        return {"result": {"c": args.c, "c_is_rigorous": False, "rows": rows},
                "provenance": _provenance(args, False)}
    _write(args, curve_csv(rows))
    return None


# -- parser -----------------------------------------------------------------

def _add_mc(p, samples=100_000):
    p.add_argument("--samples", type=int, default=samples)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)


def _add_model(p):
    p.add_argument("--model", choices=["shao", "exponential", "table"], required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--table", help="CSV with columns lag,r")
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--spacing", type=float)
    p.add_argument("--grid-b", type=float, help="use the Shao grid i/M with M = floor((b u^2 alpha/2)^(1/alpha))")


def _add_common(p, constants=True):
    p.add_argument("--output", help="write here instead of stdout")
    p.add_argument("--config", help="key=value file; command-line flags win")
    if constants:
        p.add_argument("--constants", choices=["shape", "explicit", "calibrated"], default="explicit")


def _add_params(p):
    p.add_argument("--C", type=float)
    p.add_argument("--K", type=float, default=0.0)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--prop2", action="store_true", help="use the optimised (C, K, N) for the Shao grid")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="supbounds", description="Lower bounds for Gaussian maxima and their checks.")
    parser.add_argument("--version", action="version", version=__version__)
    cmds = parser.add_subparsers(dest="command", required=True)

    bm = cmds.add_parser("bm", help="Brownian motion below a line or slope-then-flat boundary")
    bm.add_argument("action", choices=["exact", "lemma1", "lemma2", "lemma3", "mc"])
    bm.add_argument("--a", type=float, required=True)
    bm.add_argument("--b", type=float, default=0.0)
    bm.add_argument("--t0", type=float)
    bm.add_argument("--t", type=float, required=True)
    bm.add_argument("--H", type=float, default=3.0)
    bm.add_argument("--step", type=float)
    bm.add_argument("--method", choices=["euler", "bridge"], default="euler")
    _add_mc(bm)
    _add_common(bm)
    bm.set_defaults(func=cmd_bm)

    cov = cmds.add_parser("cov", help="correlation hypotheses")
    cov.add_argument("action", choices=["check"])
    _add_model(cov)
    _add_common(cov, constants=False)
    cov.set_defaults(func=cmd_cov)

    bound = cmds.add_parser("bound", help="evaluate a lower bound")
    bound.add_argument("action", choices=["eval"])
    bound.add_argument("--theorem", type=int, choices=[1, 2, 3], required=True)
    bound.add_argument("--delta-file")
    bound.add_argument("--walk", choices=["mc", "bm"], default="mc")
    _add_model(bound)
    _add_params(bound)
    _add_mc(bound)
    _add_common(bound)
    bound.set_defaults(func=cmd_bound)

    gp = cmds.add_parser("gp", help="simulate the Gaussian vector")
    gp.add_argument("action", choices=["simulate"])
    _add_model(gp)
    _add_mc(gp, samples=1_000_000)
    _add_common(gp, constants=False)
    gp.set_defaults(func=cmd_gp)

    ver = cmds.add_parser("verify", help="test the bounds against simulation")
    ver.add_argument("action", choices=["chain"])
    ver.add_argument("--baseline", action="store_true", help="use (1/u, 0, 1) even for the Shao model")
    _add_model(ver)
    _add_params(ver)
    _add_mc(ver, samples=1_000_000)
    _add_common(ver)
    ver.set_defaults(func=cmd_verify)

    opt = cmds.add_parser("optimize", help="slope/break parameter search")
    opt.add_argument("action", choices=["pickands"])
    opt.add_argument("--report", choices=["json"], default="json")
    _add_common(opt, constants=False)
    opt.set_defaults(func=cmd_optimize)

    curve = cmds.add_parser("curve", help="emit lower-bound curves")
    curve.add_argument("action", choices=["halpha"])
    curve.add_argument("--alpha-min", type=float, default=0.05)
    curve.add_argument("--alpha-max", type=float, default=2.0)
    curve.add_argument("--points", type=int, default=40)
    curve.add_argument("--c", type=float, default=1.0)
    curve.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_common(curve, constants=False)
    curve.set_defaults(func=cmd_curve)
    return parser


def config_tokens(path) -> list[str]:
    """``key=value`` lines as flag tokens; ``#`` starts a comment, ``key=true`` becomes a bare flag."""
    tokens = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ContractError(f"config line without '=': {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "yes"):
                tokens.append(flag)
            elif value.lower() in ("false", "no"):
                continue
            else:
                tokens += [flag, value]
    return tokens


def _with_config(argv: list[str]) -> list[str]:
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return argv
    # command and action first, then config values, then flags (later tokens win)
    return rest[:2] + config_tokens(known.config) + rest[2:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _with_config(argv)
    except (OSError, ContractError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1
    args = parser.parse_args(argv)
    try:
        payload = args.func(args)
    except (ContractError, ValueError, ArithmeticError) as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}), file=sys.stderr)
        return 1
    if payload is not None:
        payload = {"command": f"{args.command} {args.action}", **payload}
        _emit(args, payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
