"""Command-line front end: CSV in, JSON report on stdout, tidy CSV out.

Calibration files carry a header row with columns ``y`` and ``f_hat``
(additional ``f_hat:<label>`` columns for multi-model commands). Every
stochastic subcommand takes ``--seed`` (default 0) and embeds it in the
report, so identical invocations produce byte-identical output. Exit
codes: 0 success, 2 input problems, 3 numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys

import numpy as np

from . import __version__
from .errors import ModelUnsuitableError, NonConvergenceError, TuningFailureError
from .intervals import empirical_coverage, prediction_intervals, reliability_curve
from .lcd import Link, NullKind, committee_predict, lcd, mic, mic_probabilities, rank_models, raw_model_loss
from .lifted import CalibrationSet, consistency_test, fit_lifted_linear
from .mcmc import McmcConfig, chain_diagnostics, predictive_interval_mcmc, sample_posterior
from .outliers import detect_outliers, select_lambda
from .stats import Seed
from .synth import SynthConfig, baseline_predict, gen_dataset

DEFAULT_LEVELS = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,0.95"

EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _read_csv(path: str) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file, header row is mandatory")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return list(reader.fieldnames), rows


def _float_column(rows: list[dict], name: str, path: str) -> np.ndarray:
    out = np.empty(len(rows))
    for i, row in enumerate(rows):
        raw = row.get(name)
        if raw is None or raw == "":
            raise ValueError(f"{path}: row {i + 2}, column {name!r} is missing")
        try:
            out[i] = float(raw)
        except ValueError:
            raise ValueError(f"{path}: row {i + 2}, column {name!r}: cannot parse {raw!r}") from None
    return out


def _require_columns(header: list[str], names: list[str], path: str) -> None:
    missing = [n for n in names if n not in header]
    if missing:
        raise ValueError(f"{path}: missing required column(s) {missing}; header has {header}")


def _load_calibration(path: str) -> CalibrationSet:
    header, rows = _read_csv(path)
    _require_columns(header, ["y", "f_hat"], path)
    return CalibrationSet(_float_column(rows, "y", path), _float_column(rows, "f_hat", path))


def _load_models(path: str) -> tuple[np.ndarray, list[tuple[str, np.ndarray]]]:
    header, rows = _read_csv(path)
    _require_columns(header, ["y"], path)
    y = _float_column(rows, "y", path)
    models = []
    for col in header:
        if col == "f_hat":
            models.append((col, _float_column(rows, col, path)))
        elif col.startswith("f_hat:"):
            models.append((col.split(":", 1)[1], _float_column(rows, col, path)))
    if not models:
        raise ValueError(f"{path}: need an f_hat or f_hat:<label> column")
    return y, models


def _write_csv(path_or_stdout, header: list[str], rows) -> None:
    if path_or_stdout is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(path_or_stdout, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _report(command: str, inputs: dict, parameters: dict, results: dict) -> dict:
    return {
        "command": command,
        "inputs": {p: _digest(p) for p in inputs.values() if p},
        "parameters": parameters,
        "results": results,
        "version": __version__,
    }


def _emit(report: dict) -> None:
    print(json.dumps(report, sort_keys=True, indent=2))


def _parse_levels(text: str) -> list[float]:
    try:
        levels = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValueError(f"cannot parse levels list {text!r}") from None
    if not levels:
        raise ValueError("levels list is empty")
    return levels


def _interval_rows(ivs, f0s):
    return [[_fmt(f0), _fmt(iv.center), _fmt(iv.lower), _fmt(iv.upper), _fmt(iv.level)] for f0, iv in zip(f0s, ivs)]


def cmd_calibrate(args) -> dict:
    calib = _load_calibration(args.data)
    fit = fit_lifted_linear(calib)
    test = consistency_test(fit, args.alpha, Seed(args.seed))
    results = {
        "beta0": fit.beta0_hat,
        "beta1": fit.beta1_hat,
        "r_star": fit.r_star,
        "r_squared": fit.r_star**2,
        "sigma_u": fit.sigma_u_hat,
        "n_calb": fit.n_calb,
        "consistency": {
            "statistic": test.statistic if math.isfinite(test.statistic) else "inf",
            "threshold": test.threshold,
            "alpha": test.alpha,
            "reject": test.reject,
        },
    }
    return _report("calibrate", {"data": args.data}, {"alpha": args.alpha, "seed": args.seed}, results)


def cmd_interval(args) -> dict:
    calib = _load_calibration(args.data)
    header, rows = _read_csv(args.test)
    _require_columns(header, ["f_hat"], args.test)
    f0s = _float_column(rows, "f_hat", args.test)
    fit = fit_lifted_linear(calib)
    ivs = prediction_intervals(fit, f0s, args.alpha)
    results: dict = {"n_test": len(ivs), "level": 1.0 - args.alpha}
    if "y" in header:
        results["empirical_coverage"] = empirical_coverage(ivs, _float_column(rows, "y", args.test))
    if args.out:
        _write_csv(args.out, ["f_hat", "center", "lower", "upper", "level"], _interval_rows(ivs, f0s))
        results["outputs"] = {args.out: _digest(args.out)}
    else:
        results["intervals"] = [
            {"f_hat": float(f0), "center": iv.center, "lower": iv.lower, "upper": iv.upper}
            for f0, iv in zip(f0s, ivs)
        ]
    return _report("interval", {"data": args.data, "test": args.test}, {"alpha": args.alpha}, results)


def _lcd_report_dict(rep) -> dict:
    out = {
        "model": rep.model_id,
        "lcd": rep.lcd,
        "model_loss": None if math.isnan(rep.model_loss) else rep.model_loss,
        "null_loss": None if math.isnan(rep.null_loss) else rep.null_loss,
    }
    if rep.lift is not None:
        out["lift"] = {
            "beta0": rep.lift.beta0,
            "beta1": rep.lift.beta1,
            "converged": rep.lift.converged,
            "iterations": rep.lift.iterations,
        }
    if rep.error is not None:
        out["error"] = rep.error
    return out


def _null_kind(args) -> NullKind | None:
    if args.null is None:
        return None
    return NullKind.UNIFORM_BINARY if args.null == "uniform" else NullKind.INTERCEPT_MLE


def cmd_lcd(args) -> dict:
    calib = _load_calibration(args.data)
    rep = lcd(calib, link=Link(args.link), null_kind=_null_kind(args))
    return _report("lcd", {"data": args.data}, {"link": args.link, "null": args.null}, _lcd_report_dict(rep))


def cmd_rank(args) -> dict:
    y, models = _load_models(args.data)
    calib = CalibrationSet(y, np.zeros_like(y))  # responses carrier; each model supplies its own predictions
    reports = rank_models(calib, models, link=Link(args.link), null_kind=_null_kind(args))
    results = {"ranking": [_lcd_report_dict(r) for r in reports]}
    return _report("rank", {"data": args.data}, {"link": args.link, "null": args.null}, results)


def cmd_mic(args) -> dict:
    y, models = _load_models(args.data)
    complexity = {}
    if args.complexity:
        for part in args.complexity.split(","):
            label, _, value = part.partition("=")
            if not _:
                raise ValueError(f"bad --complexity entry {part!r}, expected label=value")
            complexity[label.strip()] = float(value)
    link = Link(args.link)
    scores = []
    for label, preds in models:
        loss = raw_model_loss(CalibrationSet(y, preds), link)
        scores.append(mic(loss, complexity.get(label, 0.0), model_id=label))
    weights = mic_probabilities(scores)
    committee = committee_predict(np.vstack([preds for _, preds in models]), weights)
    results = {
        "scores": [
            {"model": s.model_id, "loss": s.loss, "complexity": s.complexity, "mic": s.mic, "probability": float(w)}
            for s, w in zip(scores, weights)
        ],
    }
    if args.out:
        _write_csv(args.out, ["committee"], [[_fmt(v)] for v in committee])
        results["outputs"] = {args.out: _digest(args.out)}
    else:
        results["committee"] = [float(v) for v in committee]
    return _report(
        "mic", {"data": args.data}, {"link": args.link, "complexity": args.complexity or ""}, results
    )


def cmd_outliers(args) -> dict:
    calib = _load_calibration(args.data)
    if args.lam is not None:
        sol = detect_outliers(calib, args.lam)
        lam = args.lam
    else:
        lam, sol = select_lambda(calib, grid_size=args.grid, seed=Seed(args.seed))
    results = {
        "lambda": lam,
        "beta0": sol.beta0,
        "beta1": sol.beta1,
        "iterations": sol.iterations,
        "objective": sol.objective,
        "outlier_indices": [int(i) for i in sol.outlier_indices],
        "n_outliers": int(sol.outlier_indices.size),
    }
    if args.out:
        _write_csv(args.out, ["index", "gamma", "flagged"], [
            [str(i), _fmt(g), str(int(g != 0.0))] for i, g in enumerate(sol.gamma)
        ])
        results["outputs"] = {args.out: _digest(args.out)}
    return _report(
        "outliers",
        {"data": args.data},
        {"lambda": args.lam, "grid": args.grid, "seed": args.seed},
        results,
    )


def cmd_mcmc_interval(args) -> dict:
    calib = _load_calibration(args.data)
    if args.f0 is not None:
        f0s = np.asarray(args.f0, dtype=float)
        test_path = None
    elif args.test is not None:
        header, rows = _read_csv(args.test)
        _require_columns(header, ["f_hat"], args.test)
        f0s = _float_column(rows, "f_hat", args.test)
        test_path = args.test
    else:
        raise ValueError("mcmc-interval needs --f0 values or a --test file")

    config = McmcConfig(
        m_samples=args.samples, burn_in=args.burn_in, seed=Seed(args.seed), n_chains=args.chains
    )
    chain = sample_posterior(calib, args.family, config)
    ivs = [predictive_interval_mcmc(chain, f0, args.alpha, Seed(args.seed + 1)) for f0 in f0s]
    rate, ess = chain_diagnostics(chain)
    results: dict = {
        "acceptance_rate": rate,
        "ess": [float(e) for e in ess],
        "m_samples": len(chain),
        "level": 1.0 - args.alpha,
    }
    if args.out:
        _write_csv(args.out, ["f_hat", "center", "lower", "upper", "level"], _interval_rows(ivs, f0s))
        results["outputs"] = {args.out: _digest(args.out)}
    else:
        results["intervals"] = [
            {"f_hat": float(f0), "center": iv.center, "lower": iv.lower, "upper": iv.upper}
            for f0, iv in zip(f0s, ivs)
        ]
    inputs = {"data": args.data}
    if test_path:
        inputs["test"] = test_path
    params = {
        "family": args.family,
        "samples": args.samples,
        "burn_in": args.burn_in,
        "chains": args.chains,
        "alpha": args.alpha,
        "seed": args.seed,
    }
    return _report("mcmc-interval", inputs, params, results)


def cmd_coverage(args) -> dict:
    calib = _load_calibration(args.data)
    test = _load_calibration(args.test)
    levels = _parse_levels(args.levels)
    fit = fit_lifted_linear(calib)
    curve = reliability_curve(fit, test, levels)
    results: dict = {
        "levels": [float(v) for v in curve.levels],
        "empirical": [float(v) for v in curve.empirical],
        "max_deviation": curve.max_deviation(),
    }
    if args.out:
        _write_csv(
            args.out,
            ["level", "empirical"],
            [[_fmt(lv), _fmt(em)] for lv, em in zip(curve.levels, curve.empirical)],
        )
        results["outputs"] = {args.out: _digest(args.out)}
    return _report("coverage", {"data": args.data, "test": args.test}, {"levels": args.levels}, results)


def cmd_simulate(args) -> dict | None:
    if getattr(args, "sim_cmd", None) == "predict-baseline":
        return cmd_predict_baseline(args)
    config = SynthConfig(n=args.n, seed=Seed(args.seed), sigma_eps=args.sigma_eps)
    data = gen_dataset(config)
    header = [f"x{j}" for j in range(1, 11)] + ["y", "truth"]
    rows = [
        [_fmt(v) for v in data.predictors[i]] + [_fmt(data.responses[i]), _fmt(data.truth[i])]
        for i in range(config.n)
    ]
    _write_csv(args.out, header, rows)
    if args.out is None:
        return None  # the CSV itself went to stdout
    results = {"n": args.n, "outputs": {args.out: _digest(args.out)}}
    return _report("simulate", {}, {"n": args.n, "seed": args.seed, "sigma_eps": args.sigma_eps}, results)


def cmd_predict_baseline(args) -> dict:
    header, rows = _read_csv(args.data)
    xcols = [f"x{j}" for j in range(1, 11)]
    _require_columns(header, xcols + ["y"], args.data)
    x = np.column_stack([_float_column(rows, c, args.data) for c in xcols])
    y = _float_column(rows, "y", args.data)
    n = len(rows)
    n_train = int(round(args.train_frac * n))
    if n_train < 1 or n_train >= n:
        raise ValueError(f"train fraction {args.train_frac} leaves no usable split for n={n}")
    perm = Seed(args.seed).generator(stream=3).permutation(n)
    train_idx, rest_idx = perm[:n_train], np.sort(perm[n_train:])
    preds = baseline_predict(args.kind, (x[train_idx], y[train_idx]), x[rest_idx], k=args.k)
    out_header = header + ["f_hat"]
    out_rows = [list(rows[i].values()) + [_fmt(p)] for i, p in zip(rest_idx, preds)]
    _write_csv(args.out, out_header, out_rows)
    results = {"n_train": n_train, "n_out": int(rest_idx.size)}
    if args.out:
        results["outputs"] = {args.out: _digest(args.out)}
    return _report(
        "simulate predict-baseline",
        {"data": args.data},
        {"kind": args.kind, "k": args.k, "train_frac": args.train_frac, "seed": args.seed},
        results,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liftcal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, alpha=True, seed=True, out=True):
        if alpha:
            p.add_argument("--alpha", type=float, default=0.05)
        if seed:
            p.add_argument("--seed", type=int, default=0)
        if out:
            p.add_argument("--out", default=None)

    p = sub.add_parser("calibrate", help="lifted fit + consistency test")
    p.add_argument("--data", required=True)
    add_common(p, out=False)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("interval", help="batch prediction intervals for a test CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--test", required=True)
    add_common(p, seed=False)
    p.set_defaults(func=cmd_interval)

    p = sub.add_parser("lcd", help="loss-ratio score of one model")
    p.add_argument("--data", required=True)
    p.add_argument("--link", choices=[l.value for l in Link], default="identity")
    p.add_argument("--null", choices=["uniform", "intercept"], default=None)
    p.set_defaults(func=cmd_lcd)

    p = sub.add_parser("rank", help="rank model prediction columns by score")
    p.add_argument("--data", required=True)
    p.add_argument("--link", choices=[l.value for l in Link], default="identity")
    p.add_argument("--null", choices=["uniform", "intercept"], default=None)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("mic", help="loss-plus-complexity scores, probabilities, committee")
    p.add_argument("--data", required=True)
    p.add_argument("--link", choices=[l.value for l in Link], default="identity")
    p.add_argument("--complexity", default=None, help="comma list label=value")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_mic)

    p = sub.add_parser("outliers", help="penalised outlier detection")
    p.add_argument("--data", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--grid", type=int, default=50)
    add_common(p, alpha=False)
    p.set_defaults(func=cmd_outliers)

    p = sub.add_parser("mcmc-interval", help="posterior-sampled intervals")
    p.add_argument("--data", required=True)
    p.add_argument("--test", default=None)
    p.add_argument("--f0", type=float, nargs="+", default=None)
    p.add_argument("--family", choices=["gaussian", "gumbel"], default="gaussian")
    p.add_argument("--samples", type=int, default=20_000)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=5_000)
    p.add_argument("--chains", type=int, default=4)
    add_common(p)
    p.set_defaults(func=cmd_mcmc_interval)

    p = sub.add_parser("coverage", help="reliability-curve data")
    p.add_argument("--data", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--levels", default=DEFAULT_LEVELS)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("simulate", help="synthetic benchmark data")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--sigma-eps", dest="sigma_eps", type=float, default=0.1)
    add_common(p, alpha=False)
    sim_sub = p.add_subparsers(dest="sim_cmd")
    pb = sim_sub.add_parser("predict-baseline", help="append a baseline f_hat column")
    pb.add_argument("--data", required=True)
    pb.add_argument("--kind", choices=["mean", "ols", "knn"], default="knn")
    pb.add_argument("--k", type=int, default=5)
    pb.add_argument("--train-frac", dest="train_frac", type=float, default=0.7)
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--out", default=None)
    pb.set_defaults(func=cmd_predict_baseline)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except (NonConvergenceError, TuningFailureError, ModelUnsuitableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if report is not None:
        _emit(report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
