"""Experiment harness: config files, fit and selection sweeps over seeds,
trace emission, and figure rendering.

Reports are JSON documents embedding the full configuration, so any run
can be reproduced bit-for-bit from its own report.  Traces are CSV, one
row per training iteration, rendered to PNG alongside.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from . import figures
from .data import (
    Dataset,
    SynthSpec,
    augment_irrelevant,
    gen_eval_grid,
    generate,
    load_csv,
    save_csv,
    split,
)
from .errors import GsamulError, InvalidInputError
from .metrics import EvalReport, ase_component, ase_link, rsse
from .model import least_squares_loss, objective_outer, save_model
from .optimizer import HyperParams, TrainConfig, TrainTrace, train
from .selection import SelectionReport, select_variables, stability_threshold

REPORT_FORMAT = "gsamul-report"
REPORT_VERSION = 1

LAMBDA_GRID_FULL = tuple(10.0**k for k in range(-3, 4))
SPLINE_ORDER_GRID_FULL = tuple(range(3, 11))
HIDDEN_GRID_FULL = tuple(range(5, 51, 2))


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; maps 1:1 onto the config-file keys."""

    task: str
    n: int = 500
    p: int = 2
    seeds: tuple[int, ...] = (0,)
    noise_sd: float = math.sqrt(0.1)
    lambda_grid: tuple[float, ...] = (1e-2,)
    spline_order_grid: tuple[int, ...] = (6,)
    hidden_grid: tuple[int, ...] = (25,)
    iters: int = 400
    batch_size: int = 32
    schedule_c: float = 1.0
    smoothness: float = 1.0
    partitions: int = 10
    identity_link: bool = False
    group_floor: float = 1e-8
    out_dir: str = "runs/out"
    csv_path: str | None = None
    target_column: str | None = None
    n_irrelevant: int = 0
    irrelevant_lo: float = -0.5
    irrelevant_hi: float = 0.5
    n_val: int | None = None
    n_test: int | None = None
    threshold_override: float | None = None
    save_figures: bool = True

    def __post_init__(self):
        if self.task not in ("synth-a", "synth-b", "csv"):
            raise InvalidInputError(f"unknown task {self.task!r}")
        if not self.seeds:
            raise InvalidInputError("seed list must be non-empty")
        for name in ("lambda_grid", "spline_order_grid", "hidden_grid"):
            if not getattr(self, name):
                raise InvalidInputError(f"{name} must be non-empty")
        if self.task == "csv" and (self.csv_path is None or self.target_column is None):
            raise InvalidInputError("csv task needs csv_path and target_column")
        for m in self.spline_order_grid:
            if m < 2:
                raise InvalidInputError(f"spline order must be >= 2, got {m}")


_BOOL_STRINGS = {"true": True, "false": False, "1": True, "0": False}


def _parse_value(name: str, text: str, ftype) -> object:
    text = text.strip()
    if text.lower() in ("none", ""):
        return None
    if ftype is bool:
        if text.lower() not in _BOOL_STRINGS:
            raise InvalidInputError(f"config key {name}: expected true/false, got {text!r}")
        return _BOOL_STRINGS[text.lower()]
    if ftype is int:
        return int(text)
    if ftype is float:
        return float(text)
    if ftype is str:
        return text
    raise InvalidInputError(f"config key {name}: unsupported type")


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse a flat ``key = value`` text file into an ExperimentConfig.

    Blank lines and ``#`` comments are ignored; list-valued keys take
    comma-separated entries; unknown keys are an error.
    """
    spec = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    elem_types = {
        "seeds": int,
        "lambda_grid": float,
        "spline_order_grid": int,
        "hidden_grid": int,
    }
    scalar_types = {
        "task": str, "n": int, "p": int, "noise_sd": float, "iters": int,
        "batch_size": int, "schedule_c": float, "smoothness": float,
        "partitions": int, "identity_link": bool, "group_floor": float,
        "out_dir": str, "csv_path": str, "target_column": str,
        "n_irrelevant": int, "irrelevant_lo": float, "irrelevant_hi": float,
        "n_val": int, "n_test": int, "threshold_override": float,
        "save_figures": bool,
    }
    values: dict[str, object] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{lineno}: expected 'key = value'")
        key, text = (part.strip() for part in line.split("=", 1))
        if key not in spec:
            raise InvalidInputError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in elem_types:
            items = [t for t in text.split(",") if t.strip()]
            values[key] = tuple(_parse_value(key, t, elem_types[key]) for t in items)
        else:
            values[key] = _parse_value(key, text, scalar_types[key])
    if "task" not in values:
        raise InvalidInputError(f"{path}: missing required key 'task'")
    return ExperimentConfig(**values)


def config_to_dict(config: ExperimentConfig) -> dict:
    out = dataclasses.asdict(config)
    for key, val in out.items():
        if isinstance(val, tuple):
            out[key] = list(val)
    return out


@dataclass(eq=False)
class RunReport:
    """Per-seed results plus aggregates for one harness invocation."""

    kind: str
    config: dict
    per_seed: list[dict] = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "kind": self.kind,
            "variant": "identity-link" if self.config.get("identity_link") else "gsamul",
            "config": self.config,
            "per_seed": self.per_seed,
            "aggregate": self.aggregate,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def emit_trace(trace: TrainTrace, path: str | Path) -> Path:
    """Write a trace as CSV: t, both objectives, squared gradient norm,
    then one column per coefficient group norm."""
    path = Path(path)
    p = trace.group_norms.shape[1]
    header = ["t", "inner_objective", "outer_objective", "grad_norm_sq"]
    header += [f"group_norm_{j + 1}" for j in range(p)]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(len(trace)):
            row = [
                int(trace.t[k]),
                repr(float(trace.inner_objective[k])),
                repr(float(trace.outer_objective[k])),
                repr(float(trace.grad_norm_sq[k])),
            ]
            row += [repr(float(v)) for v in trace.group_norms[k]]
            writer.writerow(row)
    return path


def read_trace(path: str | Path) -> TrainTrace:
    """Inverse of emit_trace; recovers values at full precision."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = ["t", "inner_objective", "outer_objective", "grad_norm_sq"]
        if header[: len(expected)] != expected:
            raise InvalidInputError(f"{path} is not a trace CSV")
        rows = [[float(c) for c in rec] for rec in reader if rec]
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        raise InvalidInputError(f"{path} has no trace rows")
    return TrainTrace(
        t=arr[:, 0].astype(int),
        inner_objective=arr[:, 1],
        outer_objective=arr[:, 2],
        grad_norm_sq=arr[:, 3],
        group_norms=arr[:, 4:],
    )


def _seed_stream(seed: int) -> dict[str, int]:
    """Derived sub-seeds for the independent random choices of one run."""
    base = np.random.default_rng(seed)
    names = ("train", "val", "test", "fit", "selection")
    return {name: int(s) for name, s in zip(names, base.integers(2**31, size=5))}


def _prepare_data(
    config: ExperimentConfig, seed: int
) -> tuple[Dataset, Dataset, Dataset]:
    sub = _seed_stream(seed)
    if config.task in ("synth-a", "synth-b"):
        example = config.task[-1]
        spec = SynthSpec(
            example=example, n=config.n, p=config.p,
            noise_sd=config.noise_sd, seed=sub["train"],
        )
        train_ds = generate(spec)
        n_val = config.n_val or config.n
        n_test = config.n_test or config.n
        val_ds = gen_eval_grid(dataclasses.replace(spec, seed=sub["val"]), n_val)
        test_ds = gen_eval_grid(dataclasses.replace(spec, seed=sub["test"]), n_test)
        return train_ds, val_ds, test_ds
    ds = load_csv(config.csv_path, config.target_column)
    ds = augment_irrelevant(
        ds, config.n_irrelevant, config.irrelevant_lo, config.irrelevant_hi,
        seed=sub["train"],
    )
    return split(ds, (0.4, 0.4, 0.2), seed=sub["val"])


def _train_config(config: ExperimentConfig, lam: float, seed: int) -> TrainConfig:
    return TrainConfig(
        lam=lam,
        iters=config.iters,
        batch_size=config.batch_size,
        schedule_c=config.schedule_c,
        smoothness=config.smoothness,
        seed=seed,
        identity_link=config.identity_link,
        group_floor=config.group_floor,
    )


def _grid_search(
    config: ExperimentConfig,
    train_ds: Dataset,
    val_ds: Dataset,
    fit_seed: int,
):
    """Train every grid point; return the winner by validation objective.

    Ties go to larger lambda, then fewer basis functions, then fewer
    hidden nodes."""
    loss = least_squares_loss()
    results = []
    for lam, order, hidden in product(
        config.lambda_grid, config.spline_order_grid, config.hidden_grid
    ):
        hyper = HyperParams(degree=3, d=order + 2, hidden=hidden)
        model, trace = train(
            train_ds, val_ds, _train_config(config, lam, fit_seed), hyper
        )
        val_obj = objective_outer(model, val_ds, loss)
        results.append((val_obj, lam, hyper, model, trace))
    best = min(results, key=lambda r: (r[0], -r[1], r[2].d, r[2].hidden))
    return best  # (val_obj, lam, hyper, model, trace)


def _evaluate(model, test_ds: Dataset) -> EvalReport:
    pred = model.predict_batch(test_ds.X)
    if test_ds.truth_components is not None:
        est = model.component_values(test_ds.X)
        ase_c = np.asarray(
            [
                ase_component(test_ds.truth_components[:, j], est[:, j])
                for j in range(test_ds.p)
            ]
        )
        link_err = ase_link(test_ds.truth_link, pred)
    else:
        ase_c = np.full(test_ds.p, np.nan)
        link_err = float("nan")
    return EvalReport(
        ase_components=ase_c,
        ase_link=link_err,
        rsse=rsse(test_ds.y, pred),
        n_eval=test_ds.n,
    )


def _mean_std(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    return {"mean": float(arr.mean()), "std": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0}


def _aggregate(per_seed: list[dict], keys: list[str]) -> dict:
    ok = [rec for rec in per_seed if rec.get("error") is None]
    out: dict = {"seeds_ok": len(ok), "seeds_failed": len(per_seed) - len(ok)}
    for key in keys:
        vals = [rec["metrics"][key] for rec in ok if rec["metrics"].get(key) is not None]
        vals = [v for v in vals if v is not None and np.isfinite(v)]
        if vals:
            out[key] = _mean_std(vals)
    return out


def run_fit(config: ExperimentConfig) -> RunReport:
    """Per-seed: generate/load data, grid-search by validation objective,
    evaluate the winner on the test part, emit trace CSV and figures."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = RunReport(kind="fit", config=config_to_dict(config))
    for seed in config.seeds:
        started = time.perf_counter()
        rec: dict = {"seed": seed, "metrics": {}, "error": None}
        try:
            train_ds, val_ds, test_ds = _prepare_data(config, seed)
            sub = _seed_stream(seed)
            val_obj, lam, hyper, model, trace = _grid_search(
                config, train_ds, val_ds, sub["fit"]
            )
            ev = _evaluate(model, test_ds)
            rec["hyper"] = {"lambda": lam, "d": hyper.d, "hidden": hyper.hidden}
            rec["val_objective"] = val_obj
            rec["metrics"] = {
                "ase_link": None if math.isnan(ev.ase_link) else ev.ase_link,
                "rsse": ev.rsse,
                "ase_components": [
                    None if math.isnan(v) else float(v) for v in ev.ase_components
                ],
            }
            trace_path = emit_trace(trace, out_dir / f"trace_seed{seed}.csv")
            rec["trace_csv"] = str(trace_path)
            save_model(model, out_dir / f"model_seed{seed}.json")
            if config.save_figures:
                figures.save_trace_figure(trace, out_dir / f"trace_seed{seed}.png")
                figures.save_fit_figure(model, test_ds, out_dir / f"fit_seed{seed}.png")
        except GsamulError as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
        rec["wall_time_s"] = time.perf_counter() - started
        report.per_seed.append(rec)
    report.aggregate = _aggregate(report.per_seed, ["ase_link", "rsse"])
    report.save(out_dir / "report.json")
    return report


def run_select(config: ExperimentConfig) -> RunReport:
    """Per-seed stability selection on the training part, then a final
    refit on the full training set; reports Size/TP/FP against stored
    ground truth when available."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = RunReport(kind="select", config=config_to_dict(config))
    for seed in config.seeds:
        started = time.perf_counter()
        rec: dict = {"seed": seed, "metrics": {}, "error": None}
        try:
            train_ds, val_ds, test_ds = _prepare_data(config, seed)
            sub = _seed_stream(seed)
            grid_size = (
                len(config.lambda_grid)
                * len(config.spline_order_grid)
                * len(config.hidden_grid)
            )
            if grid_size > 1:
                _, lam, hyper, model, trace = _grid_search(
                    config, train_ds, val_ds, sub["fit"]
                )
            else:
                lam = config.lambda_grid[0]
                hyper = HyperParams(
                    degree=3,
                    d=config.spline_order_grid[0] + 2,
                    hidden=config.hidden_grid[0],
                )
                model, trace = train(
                    train_ds, val_ds, _train_config(config, lam, sub["fit"]), hyper
                )
            tc = _train_config(config, lam, sub["fit"])
            if config.threshold_override is not None:
                v_n, curve = config.threshold_override, []
            else:
                sel_rng = np.random.default_rng(sub["selection"])
                v_n, curve = stability_threshold(
                    train_ds, tc, hyper, config.partitions, sel_rng
                )
            active = select_variables(model.alpha, v_n)
            sel = SelectionReport(
                group_norms=model.alpha.group_norms(),
                threshold=v_n,
                kappa_curve=curve,
                active_set=active,
                partitions=config.partitions,
            )
            ev = _evaluate(model, test_ds)
            rec["hyper"] = {"lambda": lam, "d": hyper.d, "hidden": hyper.hidden}
            rec["selection"] = {
                "threshold": v_n,
                "active_set": active,
                "active_names": [train_ds.feature_names[j - 1] for j in active],
                "group_norms": [float(v) for v in sel.group_norms],
                "kappa_curve": [[v, k] for v, k in curve],
            }
            rec["metrics"] = {
                "size": float(len(active)),
                "ase_link": None if math.isnan(ev.ase_link) else ev.ase_link,
                "rsse": ev.rsse,
            }
            if train_ds.informative is not None:
                truth = set(train_ds.informative)
                rec["metrics"]["tp"] = float(len(truth & set(active)))
                rec["metrics"]["fp"] = float(len(set(active) - truth))
            trace_path = emit_trace(trace, out_dir / f"trace_seed{seed}.csv")
            rec["trace_csv"] = str(trace_path)
            if config.save_figures:
                figures.save_trace_figure(trace, out_dir / f"trace_seed{seed}.png")
                figures.save_selection_figure(sel, out_dir / f"selection_seed{seed}.png")
        except GsamulError as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
        rec["wall_time_s"] = time.perf_counter() - started
        report.per_seed.append(rec)
    report.aggregate = _aggregate(
        report.per_seed, ["size", "tp", "fp", "ase_link", "rsse"]
    )
    report.save(out_dir / "report.json")
    return report


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        example=args.example, n=args.n, p=args.p,
        noise_sd=args.noise_sd, seed=args.seed,
    )
    ds = generate(spec)
    save_csv(ds, args.out)
    print(f"wrote {args.out} ({ds.n} rows, {ds.p} features) and {args.out}.truth.json")
    return 0


def _run_and_summarize(config: ExperimentConfig, runner) -> int:
    report = runner(config)
    ok = report.aggregate.get("seeds_ok", 0)
    failed = report.aggregate.get("seeds_failed", 0)
    print(f"{report.kind}: {ok} seed(s) ok, {failed} failed -> {config.out_dir}/report.json")
    for key, stats in report.aggregate.items():
        if isinstance(stats, dict):
            print(f"  {key}: mean={stats['mean']:.6g} std={stats['std']:.3g}")
    for rec in report.per_seed:
        if rec.get("error"):
            print(f"  seed {rec['seed']}: {rec['error']}", file=sys.stderr)
    return 0 if ok > 0 else 1


def _cmd_trace(args) -> int:
    run_dir = Path(args.run)
    paths = sorted(run_dir.glob("trace_*.csv"))
    if not paths:
        print(f"no trace_*.csv files under {run_dir}", file=sys.stderr)
        return 1
    for path in paths:
        trace = read_trace(path)
        png = path.with_suffix(".png")
        figures.save_trace_figure(trace, png)
        print(f"rendered {png}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="gsamul",
        description="Sparse additive regression with a learned link network",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    p_synth.add_argument("--example", choices=("a", "b"), required=True)
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--p", type=int, required=True)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--noise-sd", type=float, default=math.sqrt(0.1))
    p_synth.add_argument("--out", required=True)

    p_fit = sub.add_parser("fit", help="grid-search, train, and evaluate per seed")
    p_fit.add_argument("--config", required=True)

    p_sel = sub.add_parser("select", help="stability-based variable selection per seed")
    p_sel.add_argument("--config", required=True)

    p_trace = sub.add_parser("trace", help="render figures for emitted trace CSVs")
    p_trace.add_argument("--run", required=True, help="run directory with trace_*.csv")

    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "fit":
            return _run_and_summarize(load_config(args.config), run_fit)
        if args.command == "select":
            return _run_and_summarize(load_config(args.config), run_select)
        if args.command == "trace":
            return _cmd_trace(args)
    except GsamulError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
