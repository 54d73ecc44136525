"""Command-line front end: ``pevkit {pev,analyze,curves,bound} --config FILE``.

Exit codes: 0 success, 2 configuration error, 3 every sweep row infeasible,
4 numeric failure (degenerate design).
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

from .config import Config, ConfigError, load_config
from .decision import DeltaPosterior, pev, probit_pev
from .oracle import mc_pev
from .power import curve_data, retest
from .regression import DegenerateDesignError, RegressionScenario, delta_distribution_reg
from .simple import delta_distribution, delta_distribution_pi
from .solvers import FocalParameter, bound_pev, sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4

PROB_DIGITS = 4
EFFECT_DIGITS = 2
CURVE_DIGITS = 12
MC_DRAWS = 1_000_000


class UsageError(Exception):
    """A flag combination the configuration cannot honour."""


class _Formatter:
    def __init__(self, precision: int | None):
        self.precision = precision

    def prob(self, x: float) -> str:
        return f"{x:.{self._digits(PROB_DIGITS)}f}"

    def effect(self, x: float) -> str:
        return f"{x:.{self._digits(EFFECT_DIGITS)}f}"

    def focal(self, kind: str, x) -> str:
        if kind == "n_un":
            return str(int(x))
        return self.prob(x)

    def curve(self, x: float) -> str:
        return f"{x:.{self.precision or CURVE_DIGITS}g}"

    def _digits(self, default: int) -> int:
        return default if self.precision is None else self.precision


def _parse_n_list(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--n-un: expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 0 for v in values):
        raise UsageError("--n-un: expected one or more nonnegative integers")
    return values


def _regression_n(cfg: Config, args) -> list[int]:
    values = _parse_n_list(args.n_un)
    if values is None:
        return [cfg.scenario.unobserved.n]
    return values


def _distribution(cfg: Config, n_un: int | None = None) -> DeltaPosterior:
    scn = cfg.scenario
    if isinstance(scn, RegressionScenario):
        return delta_distribution_reg(scn, n_un)
    if scn is None:
        return delta_distribution(*cfg.arms)
    return delta_distribution_pi(scn)


def _emit(text: str, out: str | None, stdout) -> None:
    if out is None:
        stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def cmd_pev(cfg: Config, args, stdout) -> int:
    fmt = _Formatter(args.precision)
    if cfg.estimator == "regression":
        n_values = _regression_n(cfg, args)
        if len(n_values) != 1:
            raise UsageError("--n-un: the pev command takes a single value")
        n_un = n_values[0]
    else:
        if args.n_un is not None:
            raise UsageError("--n-un applies only to the regression estimator")
        n_un = None
    dist = _distribution(cfg, n_un)
    rule = cfg.rule
    value = pev(dist, rule)
    t_ratio = dist.mean / dist.sd
    lines = []
    if n_un is not None:
        lines.append(f"n_un: {n_un}")
    lines += [
        f"PEV: {fmt.prob(value)}",
        f"delta_id: {fmt.effect(dist.mean)}",
        f"se_id: {fmt.effect(dist.sd)}",
        f"delta_sharp: {fmt.effect(rule.threshold(dist.sd))}",
        f"T: {fmt.prob(t_ratio)}",
    ]
    record = {"pev": value, "delta_id": dist.mean, "se_id": dist.sd,
              "delta_sharp": rule.threshold(dist.sd), "t_ratio": t_ratio}
    if rule.is_statistical:
        power = retest(dist, rule).power
        lines.append(f"power: {fmt.prob(power)}")
        record["power"] = power
    else:
        lines.append("power: n/a (fixed threshold)")
        record["power"] = None
    if args.seed is not None:
        mc = mc_pev(dist, rule, draws=MC_DRAWS, seed=args.seed)
        lines.append(f"mc_pev: {fmt.prob(mc)} ({MC_DRAWS} draws, seed {args.seed})")
        record["mc_pev"] = mc
    if n_un is not None:
        record["n_un"] = n_un
    stdout.write("\n".join(lines) + "\n")
    if args.out:
        Path(args.out).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def _require_focal(cfg: Config) -> FocalParameter:
    if cfg.focal is None:
        raise ConfigError("focal", "missing required field for this command")
    if cfg.scenario is None:
        raise ConfigError("unobserved", "sweeps and bounds need the control_mean/alpha/pi_r form")
    return cfg.focal


def cmd_analyze(cfg: Config, args, stdout) -> int:
    focal = _require_focal(cfg)
    fmt = _Formatter(args.precision)
    # surface a degenerate design before sweeping
    if isinstance(cfg.scenario, RegressionScenario):
        probit_pev(delta_distribution_reg(cfg.scenario, 0), cfg.rule)
    rows = sweep(cfg.pev_grid, focal, cfg.scenario, cfg.rule)
    with_aux = focal.kind == "alpha"
    header = ["pev", "threshold"] + (["ybar_t_un", "effect_un"] if with_aux else []) + ["delta_id"]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    notes = []
    for row in rows:
        cells = [fmt.prob(row.pev_target)]
        if row.feasible:
            cells.append(fmt.focal(focal.kind, row.threshold))
            if with_aux:
                cells += [fmt.effect(row.ybar_t_un), fmt.effect(row.effect_un)]
            cells.append(fmt.effect(row.delta_id))
        else:
            cells.append(row.status)
            cells += [""] * (len(header) - 2)
        buf.write(",".join(cells) + "\n")
        notes += [f"# pev={fmt.prob(row.pev_target)}: {note}" for note in row.notes]
    for line in notes:
        buf.write(line + "\n")
    _emit(buf.getvalue(), args.out, stdout)
    if rows and not any(r.feasible for r in rows):
        return EXIT_NUMERIC if all(r.status == "error" for r in rows) else EXIT_INFEASIBLE
    return EXIT_OK


def cmd_curves(cfg: Config, args, stdout) -> int:
    fmt = _Formatter(args.precision)
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    if not args.span > 0:
        raise UsageError("--span must be positive")
    if cfg.estimator == "regression":
        blocks = [(f"n_un={n}", _distribution(cfg, n)) for n in _regression_n(cfg, args)]
    else:
        if args.n_un is not None:
            raise UsageError("--n-un applies only to the regression estimator")
        blocks = [("simple", _distribution(cfg))]
    buf = io.StringIO()
    buf.write("x,null_density,ideal_density,scenario_id\n")
    for sid, (label, dist) in enumerate(blocks):
        data = curve_data(0.0, dist, cfg.rule, args.points, args.span)
        buf.write(f"# scenario_id={sid} {label} delta_sharp={fmt.curve(data.delta_sharp)} "
                  f"pev={fmt.curve(data.pev)} direction={data.direction.value}\n")
        for x, a, b in zip(data.x, data.null_density, data.ideal_density):
            buf.write(f"{fmt.curve(x)},{fmt.curve(a)},{fmt.curve(b)},{sid}\n")
    _emit(buf.getvalue(), args.out, stdout)
    return EXIT_OK


def cmd_bound(cfg: Config, args, stdout) -> int:
    focal = _require_focal(cfg)
    fmt = _Formatter(args.precision)
    if args.lo is None or args.hi is None:
        raise UsageError("bound needs both --lo and --hi")
    if not args.lo < args.hi:
        raise UsageError(f"--lo must be below --hi, got [{args.lo}, {args.hi}]")
    if focal.kind == "pi_r" and not (0.0 < args.lo and args.hi <= 1.0):
        raise UsageError("pi_r bounds must lie in (0, 1]")
    if focal.kind == "n_un" and (args.lo < 0 or args.lo != int(args.lo) or args.hi != int(args.hi)):
        raise UsageError("n_un bounds must be nonnegative integers")
    result = bound_pev((args.lo, args.hi), focal, cfg.scenario, cfg.rule)
    lines = []
    if not result.monotone:
        lines.append("warning: PEV is not monotone over the interval; reporting the envelope of a dense grid")
    lines.append(f"PEV interval: [{fmt.prob(result.pev[0])}, {fmt.prob(result.pev[1])}]")
    lines.append(f"delta_id interval: [{fmt.effect(result.delta_id[0])}, {fmt.effect(result.delta_id[1])}]")
    _emit("\n".join(lines) + "\n", args.out, stdout)
    return EXIT_OK


COMMANDS = {"pev": cmd_pev, "analyze": cmd_analyze, "curves": cmd_curves, "bound": cmd_bound}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pevkit", description="External-validity robustness of causal inferences.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="scenario JSON document")
    parser.add_argument("--out", help="write the table or record here instead of stdout")
    parser.add_argument("--points", type=int, default=2048, help="grid points per curve block")
    parser.add_argument("--span", type=float, default=6.0, help="grid half-width in standard deviations")
    parser.add_argument("--n-un", dest="n_un", help="comma-separated unobserved sizes (regression)")
    parser.add_argument("--lo", type=float, help="lower end of the focal interval")
    parser.add_argument("--hi", type=float, help="upper end of the focal interval")
    parser.add_argument("--precision", type=int, help="decimal places for every printed number")
    parser.add_argument("--seed", type=int, help="seed for the Monte-Carlo cross-check (pev)")
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.precision is not None and not 0 <= args.precision <= 17:
        print("error: --precision must lie in [0, 17]", file=stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args, stdout)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except DegenerateDesignError as exc:
        print(f"numeric error: {exc}", file=stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
