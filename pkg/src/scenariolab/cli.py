"""Command-line driver: simulate campaigns, cross-validate, sweep and rank variables.

Every command takes an explicit ``--seed`` and writes its artifacts together
with a ``<stem>.manifest.json`` listing sha256 checksums.  Files are staged in
memory and moved into place only after everything has been produced, so a
failing command leaves no partial output.  Usage errors exit with status 2.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import DatasetFormatError, dumps_dataset, load_dataset, make_folds
from .evaluation import (CLASSIFIER_KINDS, DEFAULT_GRIDS, MODES, ClassifierSpec, cross_validate,
                         report_csv, sweep, sweep_csv)
from .sensors import SENSOR_NAMES
from .sim import ConfigError, load_sim_config, simulate_campaign
from .svg import bar_chart, line_plot

IMPORTANCE_KINDS = ("forest", "samme", "logreg")


class UsageError(Exception):
    """Bad input detected after argument parsing; reported with exit status 2."""


def parse_value(text: str):
    text = text.strip()
    if text.lower() == "none":
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_assignment(text: str) -> tuple[str, list]:
    key, sep, values = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise UsageError(f"expected key=value[,value...], got {text!r}")
    items = [parse_value(v) for v in values.split(",") if v.strip()]
    if not items:
        raise UsageError(f"no values given for {key!r}")
    return key, items


def make_spec(kind: str, params: dict) -> ClassifierSpec:
    if kind not in CLASSIFIER_KINDS:
        raise UsageError(f"invalid classifier {kind!r}; valid kinds: {', '.join(CLASSIFIER_KINDS)}")
    try:
        return ClassifierSpec(kind, params)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _params(assignments) -> dict:
    params = {}
    for text in assignments or ():
        key, values = parse_assignment(text)
        if len(values) != 1:
            raise UsageError(f"--param {key} takes a single value")
        params[key] = values[0]
    return params


def _load(path):
    try:
        return load_dataset(path)
    except FileNotFoundError:
        raise UsageError(f"dataset not found: {path}") from None
    except DatasetFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


# --- artifact staging ------------------------------------------------------------

def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Artifacts:
    """Outputs held in memory until ``commit`` writes them all plus the manifest."""

    def __init__(self, command: str, seed: int, out: Path):
        self.command, self.seed, self.out = command, seed, Path(out)
        self.files: dict[Path, bytes] = {}
        self.inputs: dict[str, str] = {}
        self.config_digest: str | None = None

    def sibling(self, suffix: str) -> Path:
        return self.out.with_name(self.out.stem + suffix)

    def add(self, path: Path, content: str | bytes):
        self.files[Path(path)] = content.encode() if isinstance(content, str) else content

    def add_input(self, path):
        self.inputs[str(path)] = _sha256(Path(path).read_bytes())

    def manifest(self) -> dict:
        return {
            "command": self.command,
            "seed": self.seed,
            "config_digest": self.config_digest,
            "inputs": self.inputs,
            "outputs": {str(p): _sha256(b) for p, b in self.files.items()},
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "version": __version__,
        }

    def commit(self) -> Path:
        manifest_path = self.sibling(".manifest.json")
        staged = dict(self.files)
        staged[manifest_path] = (json.dumps(self.manifest(), indent=2) + "\n").encode()
        temps = []
        try:
            for path, data in staged.items():
                path.parent.mkdir(parents=True, exist_ok=True)
                fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                temps.append((tmp, path))
            for tmp, path in temps:
                os.replace(tmp, path)
        finally:
            for tmp, _ in temps:
                if os.path.exists(tmp):
                    os.unlink(tmp)
        # exit status 0 only if everything on disk matches what was checksummed
        for path, data in staged.items():
            if path.read_bytes() != data:
                raise OSError(f"artifact {path} did not round-trip")
        return manifest_path


# --- commands --------------------------------------------------------------------

def cmd_simulate(args) -> int:
    try:
        config = load_sim_config(args.config)
    except ConfigError as exc:
        raise UsageError(f"bad config key {exc.key!r}: {exc}") from None
    except FileNotFoundError:
        raise UsageError(f"config not found: {args.config}") from None
    art = Artifacts("simulate", args.seed, args.out)
    if args.config:
        art.add_input(args.config)
    dataset = simulate_campaign(args.seed, config)
    art.config_digest = dataset.config_digest
    art.add(args.out, dumps_dataset(dataset))
    art.commit()
    n_obs = sum(e.n_observations for e in dataset)
    print(f"simulated {len(dataset)} experiments ({n_obs} observations) -> {args.out}")
    return 0


def _folds(dataset, k: int, seed: int):
    try:
        return make_folds(dataset, k, np.random.default_rng(seed))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_crossval(args) -> int:
    spec = make_spec(args.classifier, _params(args.param))
    dataset = _load(args.data)
    art = Artifacts("crossval", args.seed, args.out)
    art.add_input(args.data)
    art.config_digest = dataset.config_digest
    plan = _folds(dataset, args.folds, args.seed)
    cv = cross_validate(dataset, spec, plan, args.mode, args.seed, keep_models=False)
    report = cv.report
    art.add(args.out, report_csv([report]))
    art.add(art.sibling("_folds.csv"), plan.to_csv())
    art.commit()
    line = f"{spec.kind} {args.mode}: observation error {report.obs_error}, experiment error {report.exp_error}"
    if args.mode == "2class":
        m = report.binary["experiment"]
        mcc = "undefined" if m["mcc"] is None else str(m["mcc"])
        line += f", experiment accuracy {m['accuracy']}, MCC {mcc}"
    print(line)
    return 0


def _is_numeric(values) -> bool:
    return all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values)


def sweep_plots(rows, axes, title: str) -> dict[str, str]:
    """Observation and experiment error plots; the last axis is x, the first (if two) picks the line."""
    x_axis = axes[-1]
    line_axis = axes[0] if len(axes) > 1 else None
    xs = [r.params[x_axis] for r in rows]
    numeric = _is_numeric(xs)
    log_x = numeric and min(xs) > 0 and max(xs) / min(xs) >= 100
    plots = {}
    for level in ("observation", "experiment"):
        series: dict[str, tuple[list, list]] = {}
        for r in rows:
            name = f"{line_axis}={r.params[line_axis]}" if line_axis else title
            x = r.params[x_axis] if numeric else sorted(set(map(str, xs))).index(str(r.params[x_axis]))
            err = r.obs_error if level == "observation" else r.exp_error
            sx, sy = series.setdefault(name, ([], []))
            sx.append(x)
            sy.append(err.mean)
        plots[level] = line_plot(series, title=f"{title}: {level} error", xlabel=x_axis,
                                 ylabel=f"mean {level} error", log_x=log_x)
    return plots


def cmd_sweep(args) -> int:
    if args.default_grid:
        if args.grid or args.classifier not in DEFAULT_GRIDS:
            raise UsageError(f"--default-grid exists for {', '.join(DEFAULT_GRIDS)} and excludes --grid")
        grid = DEFAULT_GRIDS[args.classifier]
    else:
        if not args.grid:
            raise UsageError("empty grid: give at least one --grid key=v1,v2")
        grid = dict(parse_assignment(g) for g in args.grid)
        if len(grid) != len(args.grid):
            raise UsageError("each grid key may appear once")
    if len(grid) > 2:
        raise UsageError("at most two grid axes (lines, x-axis)")
    spec = make_spec(args.classifier, _params(args.param))
    for point in ({k: v[0] for k, v in grid.items()}, {k: v[-1] for k, v in grid.items()}):
        make_spec(spec.kind, {**spec.params, **point})
    dataset = _load(args.data)
    art = Artifacts("sweep", args.seed, args.out)
    art.add_input(args.data)
    art.config_digest = dataset.config_digest
    plan = _folds(dataset, args.folds, args.seed)
    rows = sweep(dataset, spec, grid, plan, args.mode, args.seed)
    art.add(args.out, sweep_csv(rows))
    for level, svg in sweep_plots(rows, list(grid), spec.kind).items():
        art.add(art.sibling(f"_{level}.svg"), svg)
    art.commit()
    best = min(rows, key=lambda r: r.obs_error.mean)
    print(f"{len(rows)} grid points; lowest observation error {best.obs_error} at {best.params}")
    return 0


def cmd_importance(args) -> int:
    if args.classifier not in IMPORTANCE_KINDS:
        raise UsageError(f"{args.classifier!r} has no importances; choose one of {', '.join(IMPORTANCE_KINDS)}")
    spec = make_spec(args.classifier, _params(args.param))
    dataset = _load(args.data)
    art = Artifacts("importance", args.seed, args.out)
    art.add_input(args.data)
    art.config_digest = dataset.config_digest
    plan = _folds(dataset, args.folds, args.seed)
    imp = cross_validate(dataset, spec, plan, args.mode, args.seed, keep_models=False).report.importance
    art.add(args.out, imp.to_csv())
    if imp.values.ndim == 1:
        groups = {spec.kind: imp.values}
        ylabel = "importance"
    else:
        groups = {f"scenario {c}": imp.values[k] for k, c in enumerate(imp.classes)}
        ylabel = "mean |coefficient|"
    art.add(art.sibling(".svg"), bar_chart(list(SENSOR_NAMES), groups,
                                           title=f"{spec.kind} variable importance", ylabel=ylabel))
    art.commit()
    top = np.argsort(-np.atleast_2d(imp.values).mean(axis=0))[:3]
    print(f"top variables: {', '.join(SENSOR_NAMES[j] for j in top)}")
    return 0


# --- argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scenariolab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a 150-experiment campaign")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--config", type=Path, default=None, help="simulator config (key = value lines)")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_simulate)

    def common(p, classifier_choices=None):
        p.add_argument("--data", type=Path, required=True)
        p.add_argument("--classifier", required=True, help=f"one of {', '.join(CLASSIFIER_KINDS)}")
        p.add_argument("--mode", choices=MODES, default="3class")
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--param", action="append", metavar="KEY=VALUE", help="hyperparameter override")
        p.add_argument("--folds", type=int, default=10, help="number of folds (default 10)")

    p = sub.add_parser("crossval", help="cross-validate one classifier")
    common(p)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("sweep", help="cross-validate over a hyperparameter grid")
    common(p)
    p.add_argument("--grid", action="append", metavar="KEY=V1,V2",
                   help="grid axis; the first of two axes selects the line, the last is the x-axis")
    p.add_argument("--default-grid", action="store_true", help="use the built-in grid for the classifier")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("importance", help="variable importance across folds")
    common(p)
    p.set_defaults(func=cmd_importance)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
