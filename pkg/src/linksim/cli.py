"""Command-line front end.

Loads a scenario file or a named preset, sweeps the transmit power and
writes a CSV of outage probabilities. Exit status is 0 on success, 1 for
invalid input and 2 for numerical or I/O failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from . import __version__, tables
from .errors import LinksimError, NumericalError
from .outage import DEFAULT_TRIALS, OutageCurve, crossing_power, suggest_power_grid, sweep
from .scenario import (
    ScenarioConfig,
    apply_overrides,
    load_scenario,
    preset_tables,
    scenario_from_layers,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CSV_FORMAT = "linksim-outage-csv/1"
COLUMNS = ("power_dBW", "curve_id", "analytic_op", "mc_op", "mc_ci_halfwidth", "n_trials")

EXIT_OK, EXIT_INVALID, EXIT_FAILURE = 0, 1, 2


class UsageError(ValueError):
    """Bad command-line input."""


@dataclass(frozen=True)
class RunRequest:
    source: str
    curves: dict[str, ScenarioConfig]
    mode: str
    power_grid: np.ndarray
    n_trials: int
    seed: int
    out: str

    def __post_init__(self):
        if len(self.power_grid) == 0:
            raise UsageError("power grid is empty")
        if self.mode not in ("analytic", "mc", "both"):
            raise UsageError(f"unknown mode {self.mode!r}")


def parse_power(text: str) -> np.ndarray:
    """``start:stop:step`` in dBW, stop inclusive."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--power expects start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--power expects numbers, got {text!r}") from None
    if step <= 0 or stop < start:
        raise UsageError("--power needs step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def parse_trials(text: str) -> int:
    """Accept ``1000000`` or ``1e6``."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value.is_integer() or value < 1:
        raise argparse.ArgumentTypeError(f"trial count must be a positive integer, got {text!r}")
    return int(value)


def parse_override(text: str) -> tuple[str, object]:
    """``key=value`` with the value read as a TOML scalar, or as a bare string."""
    if "=" not in text:
        raise UsageError(f"override must look like key=value, got {text!r}")
    key, raw = (s.strip() for s in text.split("=", 1))
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="linksim",
        description="Outage probability of HAPS-assisted hybrid RF/FSO satellite downlinks.",
    )
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", metavar="PATH", help="scenario file (flat TOML)")
    src.add_argument("--preset", metavar="NAME",
                     help="table5-default or a figure preset (see --list-presets)")
    p.add_argument("--mode", choices=("analytic", "mc", "both"), default="analytic")
    p.add_argument("--power", metavar="START:STOP:STEP",
                   help="transmit power grid in dBW, stop inclusive; write --power=-100:-90:5 "
                        "for negative starts (default: chosen from the analytic curves)")
    p.add_argument("-n", "--trials", type=parse_trials, default=DEFAULT_TRIALS,
                   help="Monte Carlo trials per point (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", default="-", help="CSV path, '-' for stdout")
    p.add_argument("--figure", metavar="PATH", help="also render the curves to an image file")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="scenario key override, applied to every curve (repeatable)")
    p.add_argument("--fog", help="shorthand for --override fog=NAME")
    p.add_argument("--cloud", help="shorthand for --override cloud=NAME")
    p.add_argument("--rain", help="shorthand for --override rain_rate_mm_per_h=VALUE")
    p.add_argument("--target-op", type=float, default=1e-6,
                   help="OP level for the crossing-power summary (default: %(default)g)")
    p.add_argument("--points", type=int, default=20,
                   help="grid size when --power is not given (default: %(default)s)")
    p.add_argument("--list-presets", action="store_true", help="print table rows and presets, then exit")
    p.add_argument("--version", action="version", version=f"linksim {__version__}")
    return p


def _overrides(args) -> dict[str, object]:
    out = dict(parse_override(o) for o in args.override)
    if args.fog is not None:
        out["fog"] = args.fog
    if args.cloud is not None:
        out["cloud"] = args.cloud
    if args.rain is not None:
        out["rain_rate_mm_per_h"] = parse_override(f"r={args.rain}")[1]
    return out


def resolve_curves(args) -> tuple[str, dict[str, ScenarioConfig]]:
    """Scenario per curve id, with command-line overrides applied last."""
    overrides = _overrides(args)
    if args.scenario:
        path = Path(args.scenario)
        cfg = load_scenario(path.read_text())
        if overrides:
            cfg = apply_overrides(cfg, overrides)
        return str(path), {path.stem: cfg}
    name = args.preset or "table5-default"
    if name == "table5-default":
        return name, {"default": scenario_from_layers({"preset": name}, overrides)}
    if name not in tables.FIGURE_PRESETS:
        scenario_from_layers({"preset": name})  # raises with the list of known names
    curves = {cid: scenario_from_layers({"preset": name}, extra, overrides)
              for cid, extra in tables.FIGURE_PRESETS[name]["curves"].items()}
    return name, curves


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit_csv(curves: Sequence[OutageCurve], sink: IO[str], meta: dict[str, object]) -> None:
    """Header lines ``# key = value`` then one row per curve and power."""
    grids = {tuple(c.powers) for c in curves}
    if len(grids) > 1:
        raise ValueError("curves must share a power grid")
    sink.write(f"# format = {CSV_FORMAT}\n")
    for key, value in meta.items():
        sink.write(f"# {key} = {value}\n")
    for c in curves:
        sink.write(f"# digest.{c.curve_id} = {c.scenario_digest}\n")
    starved = [f"{c.curve_id}@{p.tx_power_dBW!r}" for c in curves for p in c.points if p.mc_starved]
    if starved:
        sink.write(f"# mc_starved = {' '.join(starved)}\n")
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(COLUMNS)
    for c in curves:
        for p in c.points:
            w.writerow([_fmt(p.tx_power_dBW), c.curve_id, _fmt(p.analytic_op), _fmt(p.mc_op),
                        _fmt(p.mc_halfwidth), _fmt(p.n_trials)])


def _summary(curves: Sequence[OutageCurve], scenarios: dict[str, ScenarioConfig],
             target: float, err: IO[str]) -> None:
    for c in curves:
        line = f"{c.curve_id}: "
        a = c.analytic
        if np.isfinite(a).any():
            line += f"min analytic OP {np.nanmin(a):.3e}"
            try:
                line += f", OP={target:g} at {crossing_power(scenarios[c.curve_id], target):.2f} dBW"
            except NumericalError:
                line += f", OP={target:g} not bracketed"
        else:
            mc = [p.mc_op for p in c.points]
            line += f"min MC OP {min(mc):.3e}"
        n_starved = sum(p.mc_starved for p in c.points)
        if n_starved:
            line += f"; {n_starved} point(s) MC-starved (OP below 10/n, not trusted)"
        print(line, file=err)


def run(argv: Sequence[str] | None = None, *, stdout: IO[str] | None = None,
        stderr: IO[str] | None = None) -> int:
    out_stream = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID

    if args.list_presets:
        json.dump(preset_tables(), out_stream, indent=2, ensure_ascii=False)
        out_stream.write("\n")
        return EXIT_OK

    try:
        source, scenarios = resolve_curves(args)
        if args.power:
            grid = parse_power(args.power)
        else:
            grid = suggest_power_grid(list(scenarios.values()), args.points)
        req = RunRequest(source, scenarios, args.mode, grid, args.trials, args.seed, args.out)
        curves = [sweep(cfg, req.power_grid, mode=req.mode, n_trials=req.n_trials, seed=req.seed,
                        curve_id=cid) for cid, cfg in req.curves.items()]
    except NumericalError as exc:
        print(f"linksim: numerical failure: {exc}", file=err)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"linksim: {exc}", file=err)
        return EXIT_FAILURE
    except (LinksimError, ValueError) as exc:
        print(f"linksim: invalid input: {exc}", file=err)
        return EXIT_INVALID

    meta = {"version": __version__, "source": req.source, "mode": req.mode}
    if req.mode != "analytic":
        meta.update(seed=req.seed, n_trials=req.n_trials)
    try:
        if req.out == "-":
            emit_csv(curves, out_stream, meta)
        else:
            with open(req.out, "w", newline="") as fh:
                emit_csv(curves, fh, meta)
        if args.figure:
            from .plotting import plot_outage_curves
            plot_outage_curves(curves, args.figure, title=req.source)
    except OSError as exc:
        print(f"linksim: cannot write output: {exc}", file=err)
        return EXIT_FAILURE

    _summary(curves, req.curves, args.target_op, err)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
