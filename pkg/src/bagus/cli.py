"""Command-line entry point: ``bagus {estimate,simulate,roc,forecast}``.

Parameters resolve as built-in defaults, then a ``key = value`` config
file (``--config``) or a previous ``run-manifest.json``
(``--from-manifest``), then explicit flags. ``BAGUS_SEED`` supplies the
seed when nothing else does. Every run writes ``run-manifest.json`` into
``--out``.

Exit codes: 0 success, 2 usage or input errors, 3 numerical failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .dataset import Dataset, format_row, load_dataset, save_dataset, save_matrix
from .em import fit
from .errors import BagusError, InvalidDataError
from .linalg import sample_covariance
from .metrics import ForecastTask, aafe, evaluate, forecast, training_mean
from .penalty import Hyperparameters
from .selection import (bic, default_grid, graph_from_precision, roc_sweep,
                        threshold_graph, tune)
from .simulate import SimulationSpec, replicate, simulate

SCHEMA = "bagus/v1"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("bagus")

_HYPER_KEYS = ("v0", "v1", "eta", "tau", "B", "constraint", "inner_tol", "outer_tol",
               "max_inner", "max_outer")

DEFAULTS = {
    "common": {"seed": None, "jobs": 1, "format": "json"},
    "estimate": {"data": None, "tune": False, "threshold": 0.5, "center": None,
                 "eta": 0.5, "constraint": "spectral"},
    "simulate": {"model": "star", "p": 50, "n": 100, "reps": 50, "save_data": False,
                 "threshold": 0.5, "sigma2": 3.0},
    "roc": {"model": "star", "p": 50, "n": 100, "grid_point": None, "points": 100,
            "pmat": None, "sigma2": 3.0},
    "forecast": {"train": None, "test": None, "split": None, "tune": False,
                 "eta": 0.5, "constraint": "spectral"},
}

_TYPES = {
    "seed": int, "jobs": int, "p": int, "n": int, "reps": int, "points": int,
    "grid_point": int, "split": int, "max_inner": int, "max_outer": int,
    "threshold": float, "sigma2": float, "v0": float, "v1": float, "eta": float,
    "tau": float, "B": float, "inner_tol": float, "outer_tol": float,
}


class UsageError(Exception):
    pass


def _parse_bool(value):
    if isinstance(value, bool) or value is None:
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {value!r}")


def _coerce(key, value):
    if value is None:
        return None
    if key in ("tune", "save_data", "center"):
        return _parse_bool(value)
    typ = _TYPES.get(key)
    if typ is None:
        return value
    try:
        return typ(value)
    except (TypeError, ValueError):
        raise UsageError(f"bad value for {key}: {value!r}") from None


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _add_common(sp):
    sp.add_argument("--out", required=False, help="output directory")
    sp.add_argument("--seed", type=int, help="PRNG seed (default: $BAGUS_SEED or 0)")
    sp.add_argument("--jobs", type=int, help="parallel fits across grid points/replications")
    sp.add_argument("--format", choices=("json", "csv"), help="summary format")
    sp.add_argument("--config", help="key = value file with defaults")
    sp.add_argument("--from-manifest", dest="from_manifest",
                    help="re-run with the parameters recorded in a run-manifest.json")
    sp.add_argument("-v", "--verbose", action="store_true")


def _add_hyper(sp):
    g = sp.add_argument_group("hyperparameters")
    g.add_argument("--v0", type=float, help="spike scale")
    g.add_argument("--v1", type=float, help="slab scale")
    g.add_argument("--eta", type=float, help="prior slab weight")
    g.add_argument("--tau", type=float, help="diagonal rate (default: v0)")
    g.add_argument("--B", type=float, help="spectral bound (default: 0.99*sqrt(2 n v0))")
    g.add_argument("--constraint", choices=("spectral", "maxelem"))
    g.add_argument("--inner-tol", dest="inner_tol", type=float)
    g.add_argument("--outer-tol", dest="outer_tol", type=float)
    g.add_argument("--max-inner", dest="max_inner", type=int)
    g.add_argument("--max-outer", dest="max_outer", type=int)
    g.add_argument("--tune", action="store_const", const=True,
                   help="select hyperparameters by BIC over the default grid")


def build_parser():
    parser = argparse.ArgumentParser(prog="bagus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("estimate", help="fit a precision matrix to a data file")
    sp.add_argument("data", nargs="?", help="dataset CSV (with or without header)")
    sp.add_argument("--threshold", type=float, help="edge threshold on inclusion probabilities")
    sp.add_argument("--center", dest="center", action="store_const", const=True)
    sp.add_argument("--no-center", dest="center", action="store_const", const=False)
    _add_hyper(sp)
    _add_common(sp)

    sp = sub.add_parser("simulate", help="replicated benchmark on a synthetic model")
    sp.add_argument("--model", choices=("star", "ar2", "circle", "random", "random_graph"))
    sp.add_argument("--p", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--sigma2", type=float)
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--save-data", dest="save_data", action="store_const", const=True)
    _add_common(sp)

    sp = sub.add_parser("roc", help="ROC curves over the tuning grid")
    sp.add_argument("--model", choices=("star", "ar2", "circle", "random", "random_graph"))
    sp.add_argument("--p", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--sigma2", type=float)
    sp.add_argument("--grid-point", dest="grid_point", type=int,
                    help="only this grid index (default: all, best reported)")
    sp.add_argument("--points", type=int, help="maximum thresholds per curve")
    sp.add_argument("--pmat", help=argparse.SUPPRESS)
    _add_common(sp)

    sp = sub.add_parser("forecast", help="conditional-mean forecasts of later coordinates")
    sp.add_argument("train", nargs="?")
    sp.add_argument("test", nargs="?")
    sp.add_argument("--split", type=int, help="number of observed leading coordinates k")
    _add_hyper(sp)
    _add_common(sp)
    return parser


def resolve(args, environ=None):
    """Merge defaults, config/manifest and flags into one parameter dict."""
    environ = os.environ if environ is None else environ
    cmd = args.command
    params = dict(DEFAULTS["common"])
    params.update(DEFAULTS[cmd])
    layer = {}
    if args.from_manifest:
        with open(args.from_manifest, encoding="utf-8") as fh:
            man = json.load(fh)
        if man.get("command") != cmd:
            raise UsageError(f"manifest is for {man.get('command')!r}, not {cmd!r}")
        layer.update(man.get("params", {}))
    if args.config:
        layer.update(read_config(args.config))
    for key, value in layer.items():
        if key in ("out",):
            continue
        params[key] = _coerce(key, value)
    for key, value in vars(args).items():
        if key in ("command", "config", "from_manifest", "verbose", "out"):
            continue
        if value is not None:
            params[key] = value
    if params.get("seed") is None:
        env = environ.get("BAGUS_SEED")
        params["seed"] = int(env) if env not in (None, "") else 0
    out = args.out or layer.get("out")
    if not out:
        raise UsageError("--out DIR is required")
    return params, out


def _hyper_from(params):
    kw = {k: params[k] for k in _HYPER_KEYS if params.get(k) is not None}
    if "v0" not in kw or "v1" not in kw:
        raise UsageError("give both --v0 and --v1, or --tune")
    try:
        return Hyperparameters(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _grid_from(params, n, p):
    over = {k: params[k] for k in ("inner_tol", "outer_tol", "max_inner", "max_outer",
                                   "constraint") if params.get(k) is not None}
    return default_grid(n, p, **over)


def _dump(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _fit_or_tune(data, params, center):
    """Return (fit_result, s, tune_info)."""
    s = sample_covariance(data, center=center)
    n = data.n
    if params.get("tune") or params.get("v0") is None:
        rep = tune(data, _grid_from(params, n, data.p), jobs=params["jobs"], center=center)
        info = {"best_index": rep.best_index, "scores": rep.scores,
                "edge_counts": rep.edge_counts,
                "grid": [h.to_dict() for h in rep.grid]}
        return rep.best_fit, s, info
    return fit(s, n, _hyper_from(params)), s, None


def _fit_summary(res, s, n, tune_info=None):
    out = {
        "schema": SCHEMA,
        "converged": res.converged,
        "sweeps": res.sweeps,
        "final_objective": res.final_objective,
        "objective_trace": list(res.objective_trace),
        "kkt_residual": res.kkt_residual,
        "bic": bic(res, s, n),
        "nonconvex": res.nonconvex,
        "reverts": res.reverts,
        "stalled": res.stalled,
        "hyper": res.hyper.to_dict(),
    }
    if tune_info is not None:
        out["tune"] = tune_info
    return _clean(out)


def cmd_estimate(params, out):
    if not params.get("data"):
        raise UsageError("estimate needs a data file")
    data = load_dataset(params["data"])
    center = params.get("center")
    res, s, info = _fit_or_tune(data, params, center)
    save_matrix(os.path.join(out, "theta.csv"), res.theta_hat)
    save_matrix(os.path.join(out, "pmat.csv"), res.pmat)
    graph = threshold_graph(res.pmat, params["threshold"])
    _dump(os.path.join(out, "graph.json"),
          {"schema": SCHEMA, "p": graph.p, "threshold": params["threshold"],
           "edges": [list(e) for e in graph.sorted_edges()]})
    _dump(os.path.join(out, "fit.json"), _fit_summary(res, s, data.n, info))
    return EXIT_OK


def cmd_simulate(params, out):
    spec = SimulationSpec(params["model"], params["p"], params["n"], params["seed"],
                          params["sigma2"])
    datadir = os.path.join(out, "data")
    if params["save_data"]:
        os.makedirs(datadir, exist_ok=True)

    def runner(data, i):
        if params["save_data"]:
            save_dataset(os.path.join(datadir, f"rep_{i:03d}.csv"), data)
        rep = tune(data, _grid_from(params, data.n, data.p))
        res = rep.best_fit
        m = evaluate(res.theta_hat, data.truth, threshold_graph(res.pmat, params["threshold"]),
                     graph_from_precision(data.truth))
        return {"fnorm": m.fnorm, "max_norm": m.max_norm, "spectral_err": m.spectral_err,
                "sensitivity": m.sensitivity, "specificity": m.specificity, "mcc": m.mcc}

    report = replicate(spec, params["reps"], runner, jobs=params["jobs"])
    body = {"schema": SCHEMA, "model": spec.model, "p": spec.p, "n": spec.n,
            "seed": spec.seed, **report.to_dict(), "errors": report.errors}
    _dump(os.path.join(out, "benchmark.json"), _clean(body))
    if params["format"] == "csv":
        with open(os.path.join(out, "benchmark.csv"), "w", encoding="ascii",
                  newline="\n") as fh:
            fh.write("metric,mean,sd\n")
            for k in sorted(report.mean):
                fh.write(f"{k},{format(report.mean[k], '.17g')},{format(report.sd[k], '.17g')}\n")
    return EXIT_OK if report.failures < report.reps else EXIT_NUMERIC


def cmd_roc(params, out):
    spec = SimulationSpec(params["model"], params["p"], params["n"], params["seed"],
                          params["sigma2"])
    data = simulate(spec)
    truth = graph_from_precision(data.truth)
    curves = {}
    if params.get("pmat"):
        from .dataset import load_matrix
        curves[0] = roc_sweep(load_matrix(params["pmat"]), truth, params["points"])
    else:
        grid = _grid_from(params, data.n, data.p)
        idx = range(len(grid)) if params.get("grid_point") is None else [params["grid_point"]]
        s = sample_covariance(data)
        for i in idx:
            if not 0 <= i < len(grid):
                raise UsageError(f"grid point {i} out of range 0..{len(grid) - 1}")
            curves[i] = roc_sweep(fit(s, data.n, grid[i]).pmat, truth, params["points"])
    best = max(curves, key=lambda i: (curves[i][1], -i))
    with open(os.path.join(out, "roc.csv"), "w", encoding="ascii", newline="\n") as fh:
        fh.write("# fpr,tpr\n")
        for pt in curves[best][0]:
            fh.write(format_row(pt) + "\n")
    with open(os.path.join(out, "roc_all.csv"), "w", encoding="ascii", newline="\n") as fh:
        fh.write("# grid_index,fpr,tpr\n")
        for i in sorted(curves):
            for pt in curves[i][0]:
                fh.write(f"{i}," + format_row(pt) + "\n")
    _dump(os.path.join(out, "roc.json"), _clean(
        {"schema": SCHEMA, "auc": curves[best][1], "best_index": best,
         "aucs": {str(i): curves[i][1] for i in sorted(curves)}}))
    return EXIT_OK


def cmd_forecast(params, out):
    if not params.get("train") or not params.get("test"):
        raise UsageError("forecast needs train and test files")
    train = load_dataset(params["train"])
    test = load_dataset(params["test"])
    if train.p != test.p:
        raise InvalidDataError(f"train has {train.p} columns, test has {test.p}")
    k = params.get("split")
    if k is None or not 1 <= k < train.p:
        raise UsageError(f"--split must satisfy 1 <= k < p={train.p}")
    # mean estimated separately, so the covariance is always centered here
    res, s, info = _fit_or_tune(Dataset(rows=train.rows), params, True)
    task = ForecastTask(mu=training_mean(train.rows), theta=res.theta_hat, split=k)
    pred = forecast(task, test.rows[:, :k])
    actual = test.rows[:, k:]
    err = aafe(pred, actual)
    base = aafe(np.broadcast_to(task.mu[k:], actual.shape), actual)
    save_matrix(os.path.join(out, "predictions.csv"), pred)
    save_matrix(os.path.join(out, "aafe.csv"), err[np.newaxis, :])
    summary = _fit_summary(res, s, train.n, info)
    summary.update({"split": k, "aafe_mean": float(err.mean()),
                    "marginal_aafe_mean": float(base.mean())})
    _dump(os.path.join(out, "fit.json"), _clean(summary))
    return EXIT_OK


COMMANDS = {"estimate": cmd_estimate, "simulate": cmd_simulate, "roc": cmd_roc,
            "forecast": cmd_forecast}


def main(argv=None, environ=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        params, out = resolve(args, environ)
        os.makedirs(out, exist_ok=True)
        code = COMMANDS[args.command](params, out)
        _dump(os.path.join(out, "run-manifest.json"), _clean(
            {"schema": SCHEMA, "command": args.command, "params": params,
             "seed": params["seed"], "version": __version__,
             "generator": "numpy.PCG64"}))
        return code
    except InvalidDataError as exc:
        print(f"bagus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BagusError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"bagus: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, OSError, ValueError, IndexError) as exc:
        print(f"bagus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

if __name__ == "__main__":
    sys.exit(main())
