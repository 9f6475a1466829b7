"""Command-line interface.

Subcommands read JSON documents (``-`` for stdin) and write JSON to stdout
or ``--out``; ``cartography`` writes a CSV grid plus a sidecar JSON of the
region and curve equations.  Every JSON output carries the tool version and
the resolved run configuration.  Failures print a JSON diagnostic on stderr
and exit with status 1; usage errors exit with status 2.
"""
import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import _linalg as la
from . import expressivity as ex
from . import inference as inf
from . import model as md
from . import realization as rl
from . import serialization as ser
from . import stochastic as sr
from .errors import StochRealError

DEFAULT_LAGS = 40


@dataclass(frozen=True)
class RunConfig:
    seed: int
    tol_psd: float
    tol_rank: float
    window: tuple = None
    lags: int = None
    grid: int = None
    r0: float = None
    out: str = None

    def __post_init__(self):
        if not (self.tol_psd > 0 and self.tol_rank > 0):
            raise ValueError("tolerances must be positive")
        if self.window is not None and self.lags is not None:
            p, q = self.window
            if self.lags < p + q - 1:
                raise ValueError(f"--lags {self.lags} is too small for window {p},{q}")

    def to_dict(self):
        d = asdict(self)
        d["tolerances"] = {"psd": d.pop("tol_psd"), "rank": d.pop("tol_rank")}
        return d


def _window(text):
    try:
        p, q = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected p,q, got {text!r}") from None
    if p < 1 or q < 1:
        raise argparse.ArgumentTypeError("window sizes must be positive")
    return p, q


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _default_seed():
    env = os.environ.get("STOCHREAL_SEED")
    return int(env) if env not in (None, "") else 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: $STOCHREAL_SEED or 0)")
    common.add_argument("--tol-psd", type=float, default=la.PSD_TOL)
    common.add_argument("--tol-rank", type=float, default=la.RANK_TOL)
    common.add_argument("--lags", type=_positive_int, default=None, metavar="K")
    common.add_argument("--window", type=_window, default=None, metavar="p,q")
    common.add_argument("--out", default=None, metavar="PATH")

    parser = argparse.ArgumentParser(prog="stochreal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate trajectories")
    p.add_argument("params", help="GumParameters JSON")
    p.add_argument("--family", default=None, help="override the document's family")
    p.add_argument("-T", "--length", type=int, default=1000, dest="T")
    p.add_argument("--count", type=_positive_int, default=1)
    p.add_argument("--latents", action="store_true", help="also emit latent states")

    p = sub.add_parser("covariance", parents=[common], help="analytic covariance series")
    p.add_argument("params", help="GumParameters JSON")
    p.add_argument("--monte-carlo", type=_positive_int, default=None, metavar="M",
                   help="also estimate from M simulated trajectories")
    p.add_argument("-T", "--length", type=int, default=5000, dest="T")

    p = sub.add_parser("realize", parents=[common], help="Ho-Kalman minimal realization")
    p.add_argument("series", help="CovarianceSeries JSON")

    p = sub.add_parser("feasibility", parents=[common], help="admissible state covariances")
    p.add_argument("triplet", help="triplet JSON with an r0 key")

    p = sub.add_parser("classify", parents=[common], help="family realizability report")
    p.add_argument("series", help="CovarianceSeries JSON")

    p = sub.add_parser("cartography", parents=[common], help="scalar (F, HN) cartography")
    p.add_argument("--grid", type=int, default=101, metavar="M")
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument("--curves", default=None, metavar="PATH",
                   help="sidecar JSON (default: <out stem>.curves.json)")

    p = sub.add_parser("validate", parents=[common], help="Kalman-filter validation run")
    p.add_argument("params", help="GumParameters JSON")
    p.add_argument("--family", default=None)
    p.add_argument("-T", "--length", type=int, default=1000, dest="T")
    return parser


def _read_json(path):
    if path == "-":
        return json.load(sys.stdin)
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _envelope(config, command, body):
    return {"tool": "stochreal", "version": __version__, "command": command,
            "config": config.to_dict(), **body}


def _truncate(series, K):
    if K is None:
        return series
    if K > series.K:
        raise ValueError(f"--lags {K} exceeds the {series.K} lags in the input")
    return md.CovarianceSeries(series.r0, series.lags[:K])


def _family(args, doc_family):
    return md.ModelFamily(args.family.upper()) if args.family else doc_family


def cmd_simulate(args, config):
    params, fam = ser.params_from_dict(_read_json(args.params))
    fam = _family(args, fam)
    trajs = md.simulate_many(params, fam, args.T, args.count, config.seed)
    body = {"family": fam, "T": args.T, "count": args.count,
            "observations": [t.observations for t in trajs]}
    if args.latents:
        body["latents"] = [t.latents for t in trajs]
    return body


def cmd_covariance(args, config):
    params, fam = ser.params_from_dict(_read_json(args.params))
    K = config.lags
    diag = md.stationarity_diagnostics(params, config.tol_psd)
    stationarity = {**asdict(diag), "stationary": diag.stationary,
                    "asymptotically_stationary": diag.asymptotically_stationary}
    body = {"family": fam, "series": md.analytic_covariance(params, K),
            "stationarity": stationarity}
    if args.monte_carlo:
        trajs = md.simulate_many(params, fam, args.T, args.monte_carlo, config.seed)
        emp, se = md.empirical_covariance(trajs, K)
        body["empirical"] = {"series": emp, "standard_errors": se,
                             "trajectories": args.monte_carlo, "T": args.T}
    return body


def cmd_realize(args, config):
    series = _truncate(ser.series_from_dict(_read_json(args.series)), config.lags)
    p, q = config.window if config.window else (None, None)
    res = rl.realize(series, p, q, config.tol_rank)
    return {"triplet": res.triplet, "r0": series.r0,
            "diagnostics": {"order": res.triplet.n, "window": res.window,
                            "singular_values": res.singular_values,
                            "reconstruction_error": res.reconstruction_error}}


def cmd_feasibility(args, config):
    doc = _read_json(args.triplet)
    triplet = ser.triplet_from_dict(doc)
    r0 = float(doc["r0"])
    summary = sr.summarize_solution_set(triplet, r0, tol=config.tol_psd)
    return {"triplet": triplet, "r0": r0, "summary": ser.summary_to_dict(summary)}


def cmd_classify(args, config):
    series = _truncate(ser.series_from_dict(_read_json(args.series)), config.lags)
    report = ex.classify(series, config.tol_rank, config.tol_psd, config.window)
    return {"series": series, "report": ser.report_to_dict(report)}


def cmd_cartography(args, config):
    grid = ex.scalar_cartography(config.r0, config.grid, config.grid,
                                 K=config.lags,
                                 tol_rank=config.tol_rank, tol_psd=config.tol_psd)
    out = Path(config.out)
    curves_path = Path(args.curves) if args.curves else out.with_name(out.stem + ".curves.json")
    out.write_text(ser.cartography_csv(grid), encoding="utf-8")
    curves = _envelope(config, "cartography", {"curves": grid.curves()})
    curves_path.write_text(ser.dumps(curves), encoding="utf-8")
    off = int((~grid.boundary).sum())
    return {"csv": str(out), "curves": str(curves_path), "cells": grid.F_axis.size ** 2,
            "boundary_cells": int(grid.boundary.sum()), "off_boundary_cells": off,
            "mismatches": [{"i_F": i, "j_HN": j, "families": f} for i, j, f in grid.mismatches],
            "agreement": (off - len(grid.mismatches)) / off if off else 1.0}


def cmd_validate(args, config):
    params, fam = ser.params_from_dict(_read_json(args.params))
    fam = _family(args, fam)
    rep = inf.validate(params, fam, args.T, config.seed)
    body = asdict(rep)
    body["ok"] = rep.ok
    return {"family": fam, "validation": body}


COMMANDS = {
    "simulate": cmd_simulate, "covariance": cmd_covariance, "realize": cmd_realize,
    "feasibility": cmd_feasibility, "classify": cmd_classify,
    "cartography": cmd_cartography, "validate": cmd_validate,
}


def _error(code, message):
    doc = {"tool": "stochreal", "version": __version__, "error": code, "message": message}
    sys.stderr.write(json.dumps(doc) + "\n")
    return 1


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        seed = args.seed if args.seed is not None else _default_seed()
        out = args.out
        if args.command == "cartography" and out is None:
            out = "cartography.csv"
        lags = args.lags
        if lags is None:
            lags = {"covariance": DEFAULT_LAGS,
                    "cartography": ex.CARTOGRAPHY_LAGS}.get(args.command)
        config = RunConfig(seed, args.tol_psd, args.tol_rank, args.window, lags,
                           getattr(args, "grid", None), getattr(args, "r0", None), out)
        if args.command == "cartography" and config.grid < 3:
            raise ValueError("--grid must be at least 3")
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"stochreal: error: {exc}\n")
        return 2
    try:
        body = COMMANDS[args.command](args, config)
        text = ser.dumps(_envelope(config, args.command, body))
        _emit(text, None if args.command == "cartography" else config.out)
    except StochRealError as exc:
        return _error(exc.code, str(exc))
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError,
            np.linalg.LinAlgError) as exc:
        return _error(type(exc).__name__, str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
