"""JSON and CSV encodings of the package's value types.

Matrices are row-major nested lists.  Floats go through ``repr`` (the
shortest string that round-trips) in JSON and ``'.17g'`` in CSV; NaN and
infinities become ``null``.
"""
import csv
import io
import json

import numpy as np

from .model import CovarianceSeries, GumParameters, ModelFamily, solve_stationary_eta
from .realization import RealizationTriplet


def jsonable(obj):
    """Recursively convert numpy values and value types to JSON-ready objects."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, ModelFamily):
        return obj.value
    if isinstance(obj, GumParameters):
        return params_to_dict(obj)
    if isinstance(obj, CovarianceSeries):
        return series_to_dict(obj)
    if isinstance(obj, RealizationTriplet):
        return triplet_to_dict(obj)
    return obj


def dumps(obj):
    return json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n"


def params_to_dict(params, family=None):
    out = {"n": params.n, "a": params.a, "b": params.b, "c": params.c,
           "alpha": params.alpha, "beta": params.beta, "eta": params.eta}
    if family is not None:
        out["family"] = ModelFamily(family).value
    return jsonable(out)


def _matrix(value, rows, cols):
    return np.asarray(value, dtype=float).reshape(rows, cols)


def params_from_dict(doc):
    """Parameters and family from a JSON document; a missing ``eta`` is solved for."""
    n = int(doc["n"])
    a = _matrix(doc["a"], n, n)
    b = _matrix(doc["b"], 1, n)
    c = _matrix(doc.get("c", np.zeros(n)), n, 1)
    alpha = _matrix(doc.get("alpha", np.zeros((n, n))), n, n)
    beta = float(doc["beta"])
    if doc.get("eta") is None:
        eta = solve_stationary_eta(a, b, c, alpha, beta)
    else:
        eta = _matrix(doc["eta"], n, n)
    family = ModelFamily(doc.get("family", "GUM"))
    return GumParameters(a, b, c, alpha, beta, eta), family


def series_to_dict(series):
    return {"r0": float(series.r0), "lags": jsonable(series.lags)}


def series_from_dict(doc):
    return CovarianceSeries(float(doc["r0"]), np.asarray(doc.get("lags", []), dtype=float))


def triplet_to_dict(triplet):
    return jsonable({"n": triplet.n, "H": triplet.H, "F": triplet.F, "N": triplet.N})


def triplet_from_dict(doc):
    n = int(doc["n"])
    return RealizationTriplet(_matrix(doc["H"], 1, n), _matrix(doc["F"], n, n),
                              _matrix(doc["N"], n, 1))


def verdict_to_dict(verdict):
    return jsonable({"realizable": verdict.realizable, "reason": verdict.reason,
                     "certificate": verdict.certificate, "witness": verdict.witness})


def report_to_dict(report):
    return jsonable({
        "factorizable": report.factorizable,
        "order": report.order,
        "is_covariance": report.is_covariance,
        "families": {"GUM": verdict_to_dict(report.gum), "HMC": verdict_to_dict(report.hmc),
                     "DGUM": verdict_to_dict(report.dgum), "RNN": verdict_to_dict(report.rnn)},
        "triplet": report.triplet,
        "diagnostics": report.diagnostics,
    })


def summary_to_dict(summary):
    return jsonable({"feasible": summary.feasible, "P_min": summary.P_min,
                     "P_max": summary.P_max, "scalar_interval": summary.scalar_interval,
                     "strict": summary.strict, "diagnostics": summary.diagnostics})


def _csv_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


CARTOGRAPHY_COLUMNS = (
    "F", "HN", "covariance", "hmc", "dgum", "rnn_curve1_dist", "rnn_curve2_dist",
    "gum", "rnn", "rnn_band", "boundary", "pipeline_covariance", "pipeline_hmc",
    "pipeline_dgum", "pipeline_rnn", "agree",
)


def cartography_csv(grid):
    """One row per cell, F-major, with closed-form and pipeline labels."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CARTOGRAPHY_COLUMNS)
    cl, pl = grid.closed, grid.pipeline
    bad = {(i, j) for i, j, _ in grid.mismatches}
    for i, f in enumerate(grid.F_axis):
        for j, hn in enumerate(grid.HN_axis):
            row = (f, hn, cl["covariance"][i, j], cl["hmc"][i, j], cl["dgum"][i, j],
                   cl["rnn_curve1_dist"][i, j], cl["rnn_curve2_dist"][i, j], cl["gum"][i, j],
                   cl["rnn"][i, j], cl["rnn_band"][i, j], grid.boundary[i, j],
                   pl["covariance"][i, j], pl["hmc"][i, j], pl["dgum"][i, j], pl["rnn"][i, j],
                   (i, j) not in bad)
            writer.writerow([_csv_value(v) for v in row])
    return buf.getvalue()
