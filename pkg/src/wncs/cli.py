"""Command-line entry point: ``run``, ``compare`` and ``curves``.

Exit status: 0 success, 1 I/O error, 2 configuration error, 3 every run diverged.
Errors are reported as one ``error: ...`` line on stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NoConvergence, NumericalOverflow, WncsError
from .infotheory import blahut_arimoto, ib_solve, rate_utility
from .infotheory.shannon import as_distribution
from .io import atomic_write, curve_csv, fmt, to_json, trace_csv
from .scenario import Policy, Scenario, load_scenario
from .simulator import episode_summary_dict, monte_carlo_compare, run_episode
from .synthesis import synthesize

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, status: int = EXIT_CONFIG):
        super().__init__(message)
        self.status = status


@dataclass
class RunConfig:
    scenario_path: Path
    policy_override: str | None = None
    horizon_override: int | None = None
    seed_override: int | None = None
    out_dir: Path = Path(".")


def _load(config: RunConfig) -> tuple[Scenario, list]:
    if not config.scenario_path.is_file():
        raise CliError("scenario not found")
    try:
        scenario = load_scenario(config.scenario_path)
        scenario = scenario.replace(policy=config.policy_override, horizon=config.horizon_override,
                                    seed=config.seed_override)
        synths = [synthesize(loop) for loop in scenario.loops]
    except OSError as exc:
        raise CliError(f"cannot read scenario: {exc.strerror}", EXIT_IO) from None
    except NoConvergence as exc:
        raise CliError(f"synthesis failed: {exc}") from None
    except WncsError as exc:
        raise CliError(f"invalid scenario: {exc}") from None
    return scenario, synths


def _prepare_out(out_dir: Path) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory: {exc.strerror}", EXIT_IO) from None


def _write(path: Path, text: str) -> None:
    try:
        atomic_write(path, text)
    except OSError as exc:
        raise CliError(f"cannot write {path.name}: {exc.strerror}", EXIT_IO) from None


def cmd_run(config: RunConfig) -> int:
    scenario, synths = _load(config)
    try:
        trace, summary = run_episode(scenario, synths)
    except NumericalOverflow as exc:
        raise CliError(f"run diverged: {exc}", EXIT_DIVERGED) from None
    except WncsError as exc:
        raise CliError(str(exc)) from None
    _prepare_out(config.out_dir)
    summary_text = to_json(episode_summary_dict(summary)) + "\n"
    _write(config.out_dir / "trace.csv", trace_csv(trace))
    _write(config.out_dir / "summary.json", summary_text)
    sys.stdout.write(summary_text)
    return EXIT_OK


def ranking_table(reports) -> str:
    ordered = sorted(reports, key=lambda r: (r.mean_cost is None, r.mean_cost or 0.0))
    header = f"{'rank':<5} {'policy':<12} {'mean_cost':>14} {'ci95_low':>14} {'ci95_high':>14} {'diverged':>8}"
    lines = [header]
    for rank, rep in enumerate(ordered, start=1):
        def cell(v):
            return f"{v:>14.6g}" if v is not None else f"{'-':>14}"
        lo, hi = rep.ci95 if rep.ci95 is not None else (None, None)
        lines.append(f"{rank:<5} {rep.policy.value:<12} {cell(rep.mean_cost)} {cell(lo)} {cell(hi)} "
                     f"{rep.diverged_runs:>8}")
    return "\n".join(lines) + "\n"


def cmd_compare(config: RunConfig, policies: list[str], runs: int) -> int:
    if runs < 2:
        raise CliError("--runs must be at least 2 for a confidence interval")
    try:
        parsed = [Policy.parse(p) for p in policies]
    except WncsError as exc:
        raise CliError(str(exc)) from None
    if not parsed:
        raise CliError("no policies given")
    scenario, synths = _load(config)
    try:
        reports = monte_carlo_compare(scenario, parsed, runs, synths)
    except WncsError as exc:
        raise CliError(str(exc)) from None
    if all(rep.diverged_runs == rep.runs for rep in reports):
        raise CliError("every run diverged", EXIT_DIVERGED)
    _prepare_out(config.out_dir)
    table = ranking_table(reports)
    _write(config.out_dir / "comparison.json", to_json([rep.to_dict() for rep in reports]) + "\n")
    _write(config.out_dir / "comparison.txt", table)
    sys.stdout.write(table)
    return EXIT_OK


def parse_betas(text: str) -> list[float]:
    """``start:stop:step`` (stop inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(s) for s in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            betas = [start + i * step for i in range(count)]
        else:
            betas = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise CliError(f"bad beta grid {text!r}") from None
    if not betas or any(b < 0 or not math.isfinite(b) for b in betas):
        raise CliError("betas must be finite and nonnegative")
    return betas


def _read_json(path: Path):
    if not path.is_file():
        raise CliError("input not found")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read input: {exc.strerror}", EXIT_IO) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"malformed input: {exc}") from None


def cmd_curves(kind: str, input_path: Path, betas: list[float], out_path: Path | None,
               t_size: int = 2, restarts: int = 10, seed: int = 0) -> int:
    doc = _read_json(input_path)
    rows = []
    try:
        if kind == "rd":
            if not isinstance(doc, dict) or "p_x" not in doc or not ({"distortion", "utility"} & doc.keys()):
                raise CliError("rd input needs keys 'p_x' and 'distortion' (or 'utility')")
            for beta in betas:
                if "distortion" in doc:
                    pt = blahut_arimoto(doc["p_x"], doc["distortion"], beta)
                else:
                    pt = rate_utility(doc["p_x"], doc["utility"], beta)
                rows.append((beta, pt.rate, pt.distortion))
        else:
            joint = doc["joint"] if isinstance(doc, dict) and "joint" in doc else doc
            joint = as_distribution(joint, ndim=2, name="joint")
            for beta in betas:
                res = ib_solve(joint, t_size, beta, restarts=restarts, rng=np.random.default_rng(seed))
                rows.append((beta, res.I_xt, res.I_ty))
    except NoConvergence as exc:
        raise CliError(str(exc), EXIT_DIVERGED) from None
    except WncsError as exc:
        raise CliError(f"invalid input: {exc}") from None
    text = curve_csv(rows)
    if out_path is None:
        sys.stdout.write(text)
    else:
        if out_path.parent != Path(""):
            _prepare_out(out_path.parent)
        _write(out_path, text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wncs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("--scenario", required=True, type=Path)
        p.add_argument("--horizon", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, default=Path("."))

    run = sub.add_parser("run", help="simulate one episode and write trace.csv and summary.json")
    scenario_args(run)
    run.add_argument("--policy")

    cmp_ = sub.add_parser("compare", help="Monte-Carlo comparison of policies")
    scenario_args(cmp_)
    cmp_.add_argument("--policies", required=True)
    cmp_.add_argument("--runs", type=int, default=20)

    curves = sub.add_parser("curves", help="sweep rate-distortion or IB curves")
    curves.add_argument("kind", choices=["rd", "ib"])
    curves.add_argument("--input", required=True, type=Path)
    curves.add_argument("--betas", required=True)
    curves.add_argument("--out", type=Path)
    curves.add_argument("--t-size", type=int, default=2)
    curves.add_argument("--restarts", type=int, default=10)
    curves.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "curves":
            return cmd_curves(args.kind, args.input, parse_betas(args.betas), args.out,
                              t_size=args.t_size, restarts=args.restarts, seed=args.seed)
        config = RunConfig(scenario_path=args.scenario, horizon_override=args.horizon,
                           seed_override=args.seed, out_dir=args.out)
        if args.command == "run":
            config.policy_override = args.policy
            return cmd_run(config)
        policies = [p.strip() for p in args.policies.split(",") if p.strip()]
        return cmd_compare(config, policies, args.runs)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.status


if __name__ == "__main__":
    sys.exit(main())
