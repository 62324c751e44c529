"""Command-line front end.

Subcommands: rates, region, simulate, oracle, compare, sweep.  Every output
carries the run manifest (JSON key ``manifest`` or ``#`` comment lines in
CSV); floats are written with 9 significant digits so that re-running a
command reproduces the data rows byte for byte.

Exit codes: 0 success, 2 analytic no-solution, 3 invalid config, 4 usage
error, 5 oracle truncation failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__, analytic, oracle, sim
from .model import ConfigError, EqMode, SystemConfig, check, load_config

EXIT_OK = 0
EXIT_NO_SOLUTION = 2
EXIT_INVALID = 3
EXIT_USAGE = 4
EXIT_TRUNCATION = 5

REGION_COLUMNS = ("m", "lambda_p", "lambda_s_max", "rho_ps", "mu_p", "converged")
COMPARE_COLUMNS = ("quantity", "analytic_paper", "analytic_physical", "oracle",
                   "simulated", "sim_ci_halfwidth")
RATE_NAMES = ("mu_p", "lambda_ps", "mu_ps", "mu_s")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def _round(obj):
    """Round every float in a JSON-able structure to 9 significant digits."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.9g}") if math.isfinite(x) else None
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


@dataclass
class RunManifest:
    subcommand: str
    config_path: str
    config: SystemConfig
    output: str
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "config_path": self.config_path,
            "config": self.config.to_flat(),
            "output": self.output,
            "seed": self.seed,
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        }

    def header_lines(self) -> list[str]:
        return [f"# {k}: {v if isinstance(v, str) else json.dumps(v, sort_keys=True)}"
                for k, v in self.to_dict().items()]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH")
    common.add_argument("--out", default="-", metavar="PATH",
                        help="output file (default stdout)")
    common.add_argument("--mode", choices=[m.value for m in EqMode],
                        help="override the config's eq_mode")
    common.add_argument("--jobs", type=int, default=1,
                        help="worker threads for independent points/trials")

    p = _Parser(prog="cogrelay", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("rates", parents=[common], help="solve the operating point")

    r = sub.add_parser("region", parents=[common], help="trace region boundaries")
    r.add_argument("--m", type=_int_list, default=None, metavar="LIST")
    r.add_argument("--points", type=int, default=201)
    r.add_argument("--method", choices=["fixed", "closed"], default="fixed")

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo runs")
    s.add_argument("--slots", type=int, default=10 ** 6)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--dominant", type=_bool, default=True, metavar="BOOL")

    o = sub.add_parser("oracle", parents=[common], help="exact chain solution")
    o.add_argument("--kmax", type=int, default=oracle.DEFAULT_K_MAX)

    c = sub.add_parser("compare", parents=[common],
                       help="analytic vs oracle vs simulation table")
    c.add_argument("--slots", type=int, default=10 ** 6)
    c.add_argument("--seed", type=int, default=42)
    c.add_argument("--kmax", type=int, default=oracle.DEFAULT_K_MAX)

    w = sub.add_parser("sweep", parents=[common], help="sweep p_f or p_d")
    w.add_argument("--param", choices=["p_f", "p_d"], required=True)
    w.add_argument("--values", type=_float_list, default=[], metavar="LIST")
    return p


# ---------------------------------------------------------------------------
# commands; each returns (exit_code, text)


def cmd_rates(config: SystemConfig, manifest: RunManifest, args):
    try:
        sol = analytic.solve_fixed_point(config)
    except analytic.NonConvergenceError as exc:
        body = {"manifest": manifest.to_dict(), "error": str(exc),
                "rates": exc.solution.to_dict() if exc.solution else None}
        return EXIT_NO_SOLUTION, _dump(body)
    except analytic.AnalyticError as exc:
        body = {"manifest": manifest.to_dict(), "error": str(exc)}
        return EXIT_NO_SOLUTION, _dump(body)
    body = {"manifest": manifest.to_dict(), "rates": sol.to_dict()}
    return EXIT_OK, _dump(body)


def _map(fn, items, jobs):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def region_blocks(config: SystemConfig, m_list, n_points: int, method: str,
                  jobs: int = 1):
    """Boundaries for each capacity in ``m_list``.

    With the fixed-point method all blocks share one lambda_p grid spanning
    the largest lambda_p_max, so they can be compared row by row.
    """
    configs = [config.with_(m=m) for m in m_list]
    if method == analytic.PAPER_CLOSED_FORM:
        return [analytic.trace_region(c, n_points, method) for c in configs]
    lam_max = max(_map(analytic.max_primary_rate, configs, jobs))
    grid = np.linspace(0.0, lam_max * (1.0 - 1e-6), n_points)
    return _map(lambda c: analytic.trace_region(c, lambda_grid=grid), configs, jobs)


def cmd_region(config: SystemConfig, manifest: RunManifest, args):
    if args.points < 2:
        raise UsageError("--points must be >= 2")
    m_list = args.m or [config.m]
    if any(m < 1 for m in m_list):
        raise UsageError("--m entries must be >= 1")
    blocks = region_blocks(config, m_list, args.points, args.method, args.jobs)
    out = io.StringIO()
    for line in manifest.header_lines():
        out.write(line + "\n")
    out.write(f"# method: {args.method}\n")
    out.write(",".join(REGION_COLUMNS) + "\n")
    for b in blocks:
        for p in b.points:
            out.write(",".join(fmt(v) for v in (
                b.m, p.lambda_p, p.lambda_s_max, p.rho_ps, p.mu_p, p.converged)) + "\n")
    return EXIT_OK, out.getvalue()


def _pooled(results: list[sim.SimulationResult]) -> dict:
    slots = np.array([r.slots for r in results], dtype=np.float64)
    summary = {"trials": len(results), "slots": int(slots.sum())}
    for name in RATE_NAMES:
        vals = np.array([getattr(r, f"emp_{name}").value for r in results])
        mean = float(np.sum(vals * slots) / slots.sum())
        if len(results) > 1:
            from scipy import stats
            half = float(stats.t.ppf(0.975, len(results) - 1)
                         * np.std(vals, ddof=1) / math.sqrt(len(results)))
        else:
            half = getattr(results[0], f"emp_{name}").half_width
        summary[f"emp_{name}"] = {"value": mean, "ci_halfwidth": half}
    summary["collisions"] = int(sum(r.collisions for r in results))
    return summary


def run_trials(config, n_slots, seed, trials, dominant, jobs=1):
    seeds = list(range(seed, seed + trials))
    return _map(lambda s: sim.simulate(config, n_slots, s, dominant=dominant), seeds, jobs)


def cmd_simulate(config: SystemConfig, manifest: RunManifest, args):
    if args.slots < 1 or args.trials < 1:
        raise UsageError("--slots and --trials must be >= 1")
    results = run_trials(config, args.slots, args.seed, args.trials, args.dominant,
                         args.jobs)
    body = {
        "manifest": manifest.to_dict(),
        "results": [r.to_dict() for r in results],
        "summary": _pooled(results),
    }
    return EXIT_OK, _dump(body)


def cmd_oracle(config: SystemConfig, manifest: RunManifest, args):
    try:
        res = oracle.solve(config, k_max=args.kmax)
    except oracle.OracleError as exc:
        body = {"manifest": manifest.to_dict(), "error": str(exc)}
        return EXIT_TRUNCATION, _dump(body)
    return EXIT_OK, _dump({"manifest": manifest.to_dict(), "oracle": res.to_dict()})


def compare_table(config: SystemConfig, n_slots: int, seed: int,
                  k_max: int = oracle.DEFAULT_K_MAX) -> dict:
    """Rows keyed by rate name; columns as in ``COMPARE_COLUMNS``."""
    def analytic_rates(mode):
        try:
            sol = analytic.solve_fixed_point(config.with_mode(mode))
        except analytic.AnalyticError:
            return {k: math.nan for k in RATE_NAMES}
        return {k: getattr(sol, k) for k in RATE_NAMES}

    paper = analytic_rates(EqMode.PAPER)
    physical = analytic_rates(EqMode.PHYSICAL)
    exact = oracle.solve(config, k_max=k_max).rates()
    run = sim.simulate(config, n_slots, seed, dominant=True)
    table = {}
    for k in RATE_NAMES:
        est = getattr(run, f"emp_{k}")
        table[k] = {
            "analytic_paper": paper[k], "analytic_physical": physical[k],
            "oracle": exact[k], "simulated": est.value,
            "sim_ci_halfwidth": est.half_width,
        }
    return table


def cmd_compare(config: SystemConfig, manifest: RunManifest, args):
    try:
        table = compare_table(config, args.slots, args.seed, args.kmax)
    except oracle.OracleError as exc:
        return EXIT_TRUNCATION, "".join(
            line + "\n" for line in manifest.header_lines()) + f"# error: {exc}\n"
    out = io.StringIO()
    for line in manifest.header_lines():
        out.write(line + "\n")
    out.write(",".join(COMPARE_COLUMNS) + "\n")
    for k, row in table.items():
        out.write(",".join([k] + [fmt(row[c]) for c in COMPARE_COLUMNS[1:]]) + "\n")
    return EXIT_OK, out.getvalue()


def sweep_rows(config: SystemConfig, param: str, values, jobs: int = 1):
    def one(v):
        c = config.with_(**{param: v})
        check(c)
        lam_max = analytic.max_primary_rate(c)
        lam_s0 = analytic.solve_fixed_point(c.with_(lambda_p=0.0)).mu_s
        return v, lam_max, lam_s0
    return _map(one, values, jobs)


def cmd_sweep(config: SystemConfig, manifest: RunManifest, args):
    if not args.values:
        raise UsageError("--values must list at least one value")
    rows = sweep_rows(config, args.param, args.values, args.jobs)
    out = io.StringIO()
    for line in manifest.header_lines():
        out.write(line + "\n")
    out.write(f"{args.param},lambda_p_max,lambda_s_at_zero\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")
    return EXIT_OK, out.getvalue()


COMMANDS = {
    "rates": cmd_rates, "region": cmd_region, "simulate": cmd_simulate,
    "oracle": cmd_oracle, "compare": cmd_compare, "sweep": cmd_sweep,
}


def _dump(body) -> str:
    return json.dumps(_round(body), indent=2) + "\n"


def _emit(text: str, path: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.mode:
            config = config.with_mode(args.mode)
        check(config, allow_degenerate=args.command in ("simulate", "oracle"))
    except ConfigError as exc:
        for v in exc.violations:
            print(f"invalid config: {v}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError, TypeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.jobs < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE

    manifest = RunManifest(args.command, args.config, config, args.out,
                           getattr(args, "seed", None))
    try:
        code, text = COMMANDS[args.command](config, manifest, args)
    except UsageError as exc:
        print(f"cogrelay {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        for v in exc.violations:
            print(f"invalid config: {v}", file=sys.stderr)
        return EXIT_INVALID
    _emit(text, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
