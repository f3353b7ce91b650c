"""Command-line front end: ``ci``, ``fit``, ``simulate``, ``ccp``, ``compare``, ``plan``.

Every flag has a key of the same name (dashes as underscores) in the JSON
document given by ``--config``; flags override the config. Exit codes:
0 success, 2 usage/config error, 3 data error, 4 numerical error.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tables
from .bootstrap import BOOTSTRAP_METHODS
from .ccp import DEFAULT_PERMUTATIONS, fit_ccp, paired_sign_flip_test, unpaired_permutation_test
from .coverage import DEFAULT_TRIALS, POLICIES, REDUCED_TRIALS, estimate_coverage, required_trials
from .distfit import Pmf, TrueModel, fit_class_conditional, fit_kde, fit_pmf, load_model, save_model
from .distfit.truth import TRUTH_DRAWS
from .errors import CiWorkbenchError, ConfigError, UnpairedKeys
from .intervals import CiSpec
from .methods import ALL_METHODS, compute_interval, is_compatible, parse_statistic
from .metrics import LogitTable, MetricEvaluator
from .rng import seed_from_env
from .stats_core import IQM, IQR, MEAN, MEDIAN, SD

UNIVARIATE_TRUTHS = (MEAN, MEDIAN, SD, IQR, IQM)
CLASSIFICATION_TRUTHS = (
    "accuracy", "balanced_accuracy", "mcc",
    "f1:micro", "f1:macro", "auc:micro", "auc:macro",
    "average_precision:micro", "average_precision:macro",
)
PLAN_PROPORTIONS = (0.5, 0.8, 0.9, 0.95, 0.99)


@dataclass
class RunConfig:
    """Merged command inputs; ``None`` means "not given"."""

    command: str | None = None
    input: str | None = None
    inputs: list = field(default_factory=list)
    models: list = field(default_factory=list)
    bounds: list | None = None
    stat: list | None = None
    method: list | None = None
    n: list | None = None
    trials: int | None = None
    reduced: bool | None = None
    resamples: int | None = None
    alpha: float | None = None
    seed: int | None = None
    out: str | None = None
    policy: str | None = None
    jobs: int | None = None
    kind: str | None = None
    sigma: float | None = None
    fallback: bool | None = None
    truth_draws: int | None = None
    mode: str | None = None
    permutations: int | None = None
    method_a: str | None = None
    method_b: str | None = None
    p: list | None = None
    epsilon: float | None = None
    conservative: bool | None = None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {unknown}")
        return cls(**doc)

    def override(self, args: argparse.Namespace) -> "RunConfig":
        updates = {}
        for f in dataclasses.fields(self):
            v = getattr(args, f.name, None)
            if v is not None and v != []:
                updates[f.name] = v
        return dataclasses.replace(self, **updates)

    @property
    def spec(self) -> CiSpec:
        alpha = 0.05 if self.alpha is None else float(self.alpha)
        if not 0.0 < alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
        return CiSpec.from_alpha(alpha)

    def resolved_seed(self, required: bool = False) -> int:
        seed = seed_from_env(self.seed)
        if seed is None:
            if required:
                raise ConfigError("a seed is required (--seed, config 'seed' or CIWB_SEED)")
            return 0
        return seed

    def resolved_bounds(self):
        if self.bounds is None:
            return None
        if len(self.bounds) != 2:
            raise ConfigError("bounds needs exactly two values")
        a, b = (float(v) if v is not None else math.inf * s for v, s in zip(self.bounds, (-1, 1)))
        if not a < b:
            raise ConfigError(f"bounds must satisfy lower < upper, got {a}, {b}")
        return (a, b)

    def check_files(self, paths) -> None:
        for p in paths:
            if not Path(p).is_file():
                raise ConfigError(f"file {p} does not exist")

    def n_grid(self) -> list[int]:
        if not self.n:
            raise ConfigError("an n grid is required")
        grid = [int(v) for v in self.n]
        if any(v < 1 for v in grid):
            raise ConfigError("sample sizes must be positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"n grid must be strictly increasing, got {grid}")
        return grid


def _parse_stat(text: str, logits: bool):
    try:
        return parse_statistic(text, logits)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _check_method(method: str) -> str:
    if method not in ALL_METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {', '.join(ALL_METHODS)}")
    return method


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8"), True


def _emit_csv(cfg: RunConfig, header, rows) -> None:
    fh, close = _open_out(cfg.out)
    try:
        tables.write_csv(fh, header, rows)
    finally:
        if close:
            fh.close()


# ---------------------------------------------------------------- commands


def cmd_ci(cfg: RunConfig) -> int:
    cfg.check_files([cfg.input])
    spec = cfg.spec
    data = tables.read_input(cfg.input, cfg.resolved_bounds())
    logits = isinstance(data, LogitTable)
    stats = cfg.stat or (["accuracy"] if logits else ["mean"])
    methods = [_check_method(m) for m in (cfg.method or ["percentile"])]
    seed = cfg.resolved_seed()
    resamples = 9999 if cfg.resamples is None else int(cfg.resamples)
    lines = []
    for text in stats:
        stat = _parse_stat(text, logits)
        for method in methods:
            iv, _ = compute_interval(
                data, stat, method, spec,
                resamples=resamples, seed=seed, sigma=cfg.sigma, fallback=bool(cfg.fallback),
            )
            lines.append(json.dumps({
                "method": method,
                "statistic": stat.name,
                "level": spec.level,
                "n": len(data),
                "estimate": iv.estimate,
                "lower": iv.lower,
                "upper": iv.upper,
                "flags": sorted(iv.flags),
                "seed": seed,
                "resamples": resamples if method in BOOTSTRAP_METHODS else None,
            }))
    fh, close = _open_out(cfg.out)
    try:
        fh.write("\n".join(lines) + "\n")
    finally:
        if close:
            fh.close()
    return 0


def _default_model_path(input_path: str) -> Path:
    p = Path(input_path)
    return p.with_name(p.stem + ".model.json")


def _fit_report(model: TrueModel, kind: str, n: int) -> dict:
    gen = model.generator
    report: dict = {"kind": kind, "n": n}
    if kind == "kde":
        report.update(
            integral=gen.integral(0),
            atom_mass=gen.atom_mass,
            mean=gen.mean(),
            sd=math.sqrt(gen.variance()),
            numeric_mean=gen.integral(1),
            numeric_sd=math.sqrt(max(gen.integral(2) - gen.integral(1) ** 2, 0.0)),
            pilot_bandwidth=gen.pilot_bandwidth,
        )
    elif kind == "pmf":
        report.update(
            integral=float(np.sum(gen.probabilities)),
            mean=gen.mean(),
            sd=math.sqrt(gen.variance()),
            support_size=int(gen.support.size),
        )
    else:
        report.update(
            class_probs=gen.class_probs.tolist(),
            class_flags={str(k): v for k, v in sorted(gen.flags.items())},
        )
    report["true_values"] = {k: tv.to_dict() for k, tv in sorted(model.true_values.items())}
    return report


def cmd_fit(cfg: RunConfig) -> int:
    cfg.check_files([cfg.input])
    kind = cfg.kind or "kde"
    if kind not in ("kde", "pmf", "class_conditional"):
        raise ConfigError(f"unknown model kind {kind!r}")
    bounds = cfg.resolved_bounds()
    try:
        data = tables.read_input(cfg.input, bounds)
        if kind == "class_conditional":
            if not isinstance(data, LogitTable):
                raise ConfigError("class_conditional needs a logits CSV")
            model = TrueModel(fit_class_conditional(data))
            stats = [MetricEvaluator.parse(s) for s in (cfg.stat or CLASSIFICATION_TRUTHS)]
            draws = TRUTH_DRAWS if cfg.truth_draws is None else int(cfg.truth_draws)
            for stat in stats:
                model.add_truth(stat, draws=draws)
        else:
            if isinstance(data, LogitTable):
                raise ConfigError(f"{kind} needs a metric-values CSV")
            gen = fit_kde(data, bounds) if kind == "kde" else fit_pmf(data)
            model = TrueModel(gen, bounds=bounds)
            stats = [_parse_stat(s, False) for s in cfg.stat] if cfg.stat else UNIVARIATE_TRUTHS
            for stat in stats:
                model.add_truth(stat)
    except CiWorkbenchError as exc:
        if not str(exc).startswith(str(cfg.input)):
            exc.args = (f"{cfg.input}: {exc}",)
        raise
    out = Path(cfg.out) if cfg.out else _default_model_path(cfg.input)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    report = _fit_report(model, kind, len(data))
    report["model_path"] = str(out)
    report_path = out.with_name(out.name.removesuffix(".json") + ".report.json")
    report_path.write_text(json.dumps(report, indent=1) + "\n", encoding="utf-8")
    print(json.dumps(report))
    return 0


def _model_name(path: str) -> str:
    name = Path(path).name
    for suffix in (".json", ".model"):
        name = name.removesuffix(suffix)
    return name


def _cell_key(model_digest: str, stat: str, method: str, n: int, trials: int, resamples: int,
              alpha: float, seed: int, policy: str) -> str:
    payload = json.dumps([model_digest, stat, method, n, trials, resamples, alpha, seed, policy])
    return hashlib.sha256(payload.encode()).hexdigest()


def _load_cells(path: Path) -> dict:
    cells = {}
    if path.exists():
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                cells[rec["key"]] = rec
    return cells


TIMING_COLUMNS = (
    "model", "statistic", "method", "aggregation", "n", "trials", "resamples",
    "seconds", "seconds_per_trial", "seconds_per_bootstrap",
)


def cmd_simulate(cfg: RunConfig) -> int:
    models = list(cfg.models or ([cfg.input] if cfg.input else []))
    if not models:
        raise ConfigError("simulate needs at least one model file")
    cfg.check_files(models)
    grid = cfg.n_grid()
    seed = cfg.resolved_seed(required=True)
    spec = cfg.spec
    methods = [_check_method(m) for m in (cfg.method or ["percentile"])]
    trials = int(cfg.trials) if cfg.trials is not None else (REDUCED_TRIALS if cfg.reduced else DEFAULT_TRIALS)
    resamples = 9999 if cfg.resamples is None else int(cfg.resamples)
    policy = cfg.policy or "count_as_miss"
    if policy not in POLICIES:
        raise ConfigError(f"unknown policy {policy!r}")
    jobs = 1 if cfg.jobs is None else int(cfg.jobs)
    out = Path(cfg.out or "out")
    out.mkdir(parents=True, exist_ok=True)

    # load everything and check truths before spending any compute
    plan = []
    for path in models:
        try:
            model = load_model(path)
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: not a valid model file ({exc})") from None
        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        texts = cfg.stat or (["accuracy"] if model.is_classification else ["mean"])
        stats = [_parse_stat(t, model.is_classification) for t in texts]
        binary = None
        if isinstance(model.generator, Pmf):
            binary = bool(np.all(np.isin(model.generator.support, (0.0, 1.0))))
        elif not model.is_classification:
            binary = False
        todo = []
        for stat in stats:
            model.truth(stat)
            for method in methods:
                if is_compatible(stat, method, binary):
                    todo.append((stat, method))
                else:
                    print(f"note: skipping {method} for {stat.name} on {path} (not applicable)", file=sys.stderr)
        plan.append((_model_name(path), model, digest, todo))
    if not any(p[3] for p in plan):
        raise ConfigError("no applicable (statistic, method) combination")

    cells_path = out / "cells.jsonl"
    cells = _load_cells(cells_path)
    rows, timing = [], []
    ran = skipped = 0
    with open(cells_path, "a", encoding="utf-8") as log:
        for name, model, digest, cells_todo in plan:
            for stat, method in cells_todo:
                for n in grid:
                    key = _cell_key(digest, stat.name, method, n, trials, resamples, spec.alpha, seed, policy)
                    if key in cells:
                        skipped += 1
                        rec = cells[key]
                    else:
                        t0 = time.perf_counter()
                        res = estimate_coverage(
                            model, stat, method, n, trials, spec, seed,
                            resamples=resamples, policy=policy, jobs=jobs,
                        )
                        seconds = time.perf_counter() - t0
                        row = {
                            "model": name, "statistic": res.statistic, "method": method,
                            "aggregation": res.aggregation, "n": n, "trials": trials,
                            "alpha": spec.alpha, "coverage": res.coverage,
                            "coverage_se": res.coverage_se, "mean_width": res.mean_width,
                            "median_width": res.median_width,
                            "degenerate_count": res.degenerate_count, "seed": seed,
                        }
                        per_boot = seconds / (trials * resamples) if method in BOOTSTRAP_METHODS else None
                        rec = {
                            "key": key, "row": row,
                            "timing": {"seconds": seconds, "seconds_per_trial": seconds / trials,
                                       "seconds_per_bootstrap": per_boot, "resamples": resamples},
                        }
                        log.write(json.dumps(rec) + "\n")
                        log.flush()
                        cells[key] = rec
                        ran += 1
                    rows.append(rec["row"])
                    t = rec["timing"]
                    timing.append({**{c: rec["row"][c] for c in ("model", "statistic", "method", "aggregation", "n", "trials")},
                                   "resamples": t["resamples"] if method in BOOTSTRAP_METHODS else "",
                                   "seconds": t["seconds"], "seconds_per_trial": t["seconds_per_trial"],
                                   "seconds_per_bootstrap": "" if t["seconds_per_bootstrap"] is None else t["seconds_per_bootstrap"]})

    tables.write_coverage(out / "coverage.csv", rows)
    timing.sort(key=lambda r: (r["model"], r["statistic"], r["aggregation"], r["method"], r["n"]))
    tables.write_csv(out / "timing.csv", TIMING_COLUMNS, [[r[c] for c in TIMING_COLUMNS] for r in timing])
    total = sum(r["seconds"] for r in timing)
    print(json.dumps({"cells": len(rows), "ran": ran, "skipped": skipped,
                      "total_seconds": total, "coverage_csv": str(out / "coverage.csv")}))
    return 0


def _filter_rows(rows, stats=None, methods=None):
    if stats:
        rows = [r for r in rows if r["statistic"] in stats or f"{r['statistic']}:{r['aggregation']}" in stats]
    if methods:
        rows = [r for r in rows if r["method"] in methods]
    return rows


def _ccp_by_instance(rows) -> dict:
    """``(statistic, aggregation, method) -> {model: CcpFit}``."""
    points = defaultdict(list)
    alphas = {}
    for r in rows:
        key = (r["statistic"], r["aggregation"], r["method"], r["model"])
        points[key].append((r["n"], r["coverage"]))
        alphas.setdefault(key, set()).add(r["alpha"])
    out: dict = defaultdict(dict)
    for key, pts in points.items():
        if len(alphas[key]) != 1:
            raise ConfigError(f"mixed alpha values for {key}")
        fit = fit_ccp(sorted(pts), nominal=1.0 - alphas[key].pop())
        out[key[:3]][key[3]] = fit
    return out


def cmd_ccp(cfg: RunConfig) -> int:
    paths = cfg.inputs or ([cfg.input] if cfg.input else [])
    if not paths:
        raise ConfigError("ccp needs a coverage CSV")
    cfg.check_files(paths)
    rows = [r for p in paths for r in tables.read_coverage(p)]
    rows = _filter_rows(rows, cfg.stat, cfg.method)
    fits = _ccp_by_instance(rows)
    out_rows = []
    for (stat, agg, method), by_model in sorted(fits.items()):
        for model, fit in sorted(by_model.items()):
            out_rows.append([model, stat, agg, method, round(1.0 - fit.nominal, 15), fit.pace, fit.relative_error, len(fit.points)])
    _emit_csv(cfg, ("model", "statistic", "aggregation", "method", "alpha", "pace", "relative_error", "points"), out_rows)
    return 0


def cmd_compare(cfg: RunConfig) -> int:
    if len(cfg.inputs) != 2:
        raise ConfigError("compare needs exactly two coverage CSVs")
    cfg.check_files(cfg.inputs)
    mode = cfg.mode or "paired"
    if mode not in ("paired", "unpaired"):
        raise ConfigError(f"unknown mode {mode!r}")
    permutations = DEFAULT_PERMUTATIONS if cfg.permutations is None else int(cfg.permutations)
    seed = cfg.resolved_seed()
    sides = []
    for path, only in zip(cfg.inputs, (cfg.method_a, cfg.method_b)):
        rows = _filter_rows(tables.read_coverage(path), cfg.stat, [only] if only else cfg.method)
        fits = _ccp_by_instance(rows)
        if only:
            fits = {(s, a, None): v for (s, a, _), v in fits.items()}
        sides.append(fits)
    a_fits, b_fits = sides
    label = f"{cfg.method_a}|{cfg.method_b}" if cfg.method_a or cfg.method_b else None
    if mode == "paired" and set(a_fits) != set(b_fits):
        raise UnpairedKeys(f"instance groups differ: {sorted(set(a_fits) ^ set(b_fits), key=str)}")
    out_rows = []
    for key in sorted(set(a_fits) & set(b_fits), key=str):
        stat, agg, method = key
        fa, fb = a_fits[key], b_fits[key]
        if mode == "paired":
            if set(fa) != set(fb):
                raise UnpairedKeys(f"{stat}/{agg}/{method}: model sets differ: {sorted(set(fa) ^ set(fb))}")
            models = sorted(fa)
            diffs = [fa[m].pace - fb[m].pace for m in models]
            res = paired_sign_flip_test(diffs, permutations, seed)
        else:
            res = unpaired_permutation_test([f.pace for f in fa.values()], [f.pace for f in fb.values()],
                                            permutations, seed)
        out_rows.append([stat, agg, method or label, mode, len(fa), len(fb), res.statistic_obs, res.p_value, permutations])
    _emit_csv(cfg, ("statistic", "aggregation", "method", "mode", "instances_a", "instances_b",
                    "statistic_obs", "p_value", "permutations"), out_rows)
    return 0


def cmd_plan(cfg: RunConfig) -> int:
    spec = cfg.spec
    eps = 0.01 if cfg.epsilon is None else float(cfg.epsilon)
    ps = [float(v) for v in (cfg.p or PLAN_PROPORTIONS)]
    rows = []
    for p in ps:
        try:
            t = required_trials(p, eps, spec, conservative=bool(cfg.conservative))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        rows.append([p, p * (1.0 - p), eps, spec.alpha, t])
    _emit_csv(cfg, ("p", "variance", "epsilon", "alpha", "trials"), rows)
    return 0


COMMANDS = {
    "ci": cmd_ci,
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "ccp": cmd_ccp,
    "compare": cmd_compare,
    "plan": cmd_plan,
}


# ---------------------------------------------------------------- parser


def _bound(text: str):
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--alpha", type=float, help="miscoverage level (default 0.05)")
    g.add_argument("--seed", type=int, help="master seed (falls back to CIWB_SEED)")
    g.add_argument("--resamples", type=int, help="bootstrap resamples B (default 9999)")
    g.add_argument("--out", help="output file or directory")
    g.add_argument("--config", help="JSON config document; flags override it")
    g.add_argument("--jobs", type=int, help="worker processes for coverage trials")

    parser = argparse.ArgumentParser(prog="ci-workbench", description="Confidence intervals and their coverage.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ci", parents=[common], help="interval for a metric-values or logits CSV")
    p.add_argument("input", nargs="?")
    p.add_argument("--stat", action="append", help="statistic, repeatable (mean, median, sd, iqr, iqm, f1:macro, ...)")
    p.add_argument("--method", action="append", help="interval method, repeatable")
    p.add_argument("--bounds", nargs=2, type=_bound, metavar=("LO", "HI"))
    p.add_argument("--sigma", type=float, help="known SD for the z interval")
    p.add_argument("--fallback", action="store_true", default=None, help="percentile fallback for degenerate BCa")

    p = sub.add_parser("fit", parents=[common], help="fit a true model to a CSV")
    p.add_argument("input", nargs="?")
    p.add_argument("--kind", choices=("kde", "pmf", "class_conditional"))
    p.add_argument("--bounds", nargs=2, type=_bound, metavar=("LO", "HI"))
    p.add_argument("--stat", action="append", help="statistics whose true values to store")
    p.add_argument("--truth-draws", type=int, help="Monte-Carlo draws for classification truths")

    p = sub.add_parser("simulate", parents=[common], help="coverage sweep over models, methods and n")
    p.add_argument("models", nargs="*")
    p.add_argument("--stat", action="append")
    p.add_argument("--method", action="append")
    p.add_argument("--n", type=int, nargs="+", help="strictly increasing sample sizes")
    p.add_argument("--trials", type=int)
    p.add_argument("--reduced", action="store_true", default=None, help=f"use {REDUCED_TRIALS} trials")
    p.add_argument("--policy", choices=POLICIES)

    p = sub.add_parser("ccp", parents=[common], help="coverage convergence pace per instance")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--stat", action="append")
    p.add_argument("--method", action="append")

    p = sub.add_parser("compare", parents=[common], help="permutation test on paces from two coverage CSVs")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--mode", choices=("paired", "unpaired"))
    p.add_argument("--permutations", type=int)
    p.add_argument("--stat", action="append")
    p.add_argument("--method", action="append")
    p.add_argument("--method-a", help="restrict the first CSV to this method")
    p.add_argument("--method-b", help="restrict the second CSV to this method")

    p = sub.add_parser("plan", parents=[common], help="Monte-Carlo trials needed per target coverage")
    p.add_argument("--p", type=float, nargs="+")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--conservative", action="store_true", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        cfg = cfg.override(args)
        cfg.command = args.command
        return COMMANDS[args.command](cfg)
    except CiWorkbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
