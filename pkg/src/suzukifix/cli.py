"""Command-line runner: ``suzukifix <command> --scenario s.json ...``.

Exit codes: 0 pass / converged, 1 certified failure or violated invariant,
2 input error.  Reports go to stdout as JSON and, with ``--report``, to a
file written atomically once the command has finished.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .contraction import (
    CLASSES,
    PreconditionError,
    certify,
    min_r,
    parse_grid,
    verify_lemma21,
    verify_lemma22,
)
from .dp import (
    LemmaViolation,
    check_condition_ii,
    lemma32_selection,
    solve_functional_equation,
    verify_lemma31,
)
from .gauge import Gauge, GaugeError, gauge_from_name, validate_gauge
from .scenario import Scenario, ScenarioError, load_scenario
from .solver import UniquenessViolated, error_bound, iterate_multivalued, iterate_single

log = logging.getLogger("suzukifix")

COMMANDS = ("validate-gauge", "certify", "min-r", "solve", "dp-solve", "verify-lemmas")
LOG_LEVELS = {"off": logging.CRITICAL + 1, "info": logging.INFO, "debug": logging.DEBUG}
TRACE_COLUMNS = ("n", "point_index", "step_distance", "gauge_step", "residual", "error_bound")


class InputError(Exception):
    pass


def _setup_logging() -> None:
    level = os.environ.get("SUZUKIFIX_LOG", "off").lower()
    if level not in LOG_LEVELS:
        raise InputError(f"SUZUKIFIX_LOG must be one of {sorted(LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=LOG_LEVELS[level], stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="suzukifix", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help: str, scenario_required: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.add_argument("--scenario", type=Path, required=scenario_required)
        p.add_argument("--gauge", help="identity, log, root or linear:C (overrides the scenario)")
        p.add_argument("--report", type=Path, help="also write the JSON report here")
        return p

    p = add("validate-gauge", "check the gauge axioms on a grid", scenario_required=False)
    p.add_argument("--grid", default="0:100:0.2")
    p.add_argument("--tol", type=float, default=1e-9)

    p = add("certify", "certify a contraction class at r")
    p.add_argument("--class", dest="cls", choices=CLASSES, default="suzuki-integral")
    p.add_argument("--r", type=float, required=True)

    p = add("min-r", "smallest passing r on a grid")
    p.add_argument("--class", dest="cls", choices=CLASSES, default="suzuki-integral")
    p.add_argument("--grid", default="0:0.95:0.05")

    p = add("solve", "fixed-point iteration with trace")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--starts", type=int, default=5, help="extra starts for the uniqueness check")
    p.add_argument("--trace", type=Path)

    p = add("dp-solve", "solve the functional equation by value iteration")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=10**6)
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)

    p = add("verify-lemmas", "run the lemma checks")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=200)
    return parser


def _resolve_gauge(args, scenario: Scenario | None) -> Gauge:
    if args.gauge:
        try:
            return gauge_from_name(args.gauge)
        except GaugeError as exc:
            raise InputError(f"--gauge: {exc}") from None
    if scenario is not None and scenario.gauge is not None:
        return scenario.gauge
    return Gauge.identity()


def _need(scenario: Scenario, kind: str, command: str) -> None:
    if scenario.kind != kind:
        raise InputError(f"{command} needs a {kind} scenario, got a {scenario.kind} scenario")


def _check_r(r: float) -> float:
    if not 0.0 <= r < 1.0:
        raise InputError(f"--r must lie in [0, 1), got {r!r}")
    return r


def _parse_grid(text: str) -> list[float]:
    try:
        return parse_grid(text)
    except ValueError as exc:
        raise InputError(f"--grid: {exc}") from None


def cmd_validate_gauge(args, scenario, gauge):
    grid = _parse_grid(args.grid)
    if any(t < 0 for t in grid):
        raise InputError("--grid: gauge grids must be >= 0")
    report = validate_gauge(gauge, grid, tol=args.tol)
    return report.to_dict(), 0 if report.passed else 1, None


def cmd_certify(args, scenario, gauge):
    _need(scenario, "multimap", "certify")
    cert = certify(scenario.multimap, gauge, _check_r(args.r), args.cls)
    return cert.to_dict(), 0 if cert.passed else 1, None


def cmd_min_r(args, scenario, gauge):
    _need(scenario, "multimap", "min-r")
    grid = _parse_grid(args.grid)
    for r in grid:
        _check_r(r)
    res = min_r(scenario.multimap, gauge, args.cls, grid)
    out = {"class": args.cls, "gauge": gauge.to_dict()} | res.to_dict()
    return out, 0 if res.r is not None else 1, None


def _trace_csv(trace, gauge) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for n, p in enumerate(trace.points):
        step = trace.step_distances[n] if n < trace.steps else ""
        gstep = trace.gauge_steps[n] if n < trace.steps else ""
        w.writerow([n, p, repr(step) if step != "" else "", repr(gstep) if gstep != "" else "",
                    repr(trace.residuals[n]), repr(error_bound(trace, gauge, n))])
    return buf.getvalue()


def cmd_solve(args, scenario, gauge):
    _need(scenario, "multimap", "solve")
    T = scenario.multimap
    r = _check_r(args.r)
    if not 0 <= args.start < len(T):
        raise InputError(f"--start {args.start} is not a point index (0..{len(T) - 1})")
    cert = certify(T, gauge, r, "suzuki-integral")
    out = {"r": r, "gauge": gauge.to_dict(), "start": args.start, "certified": cert.passed}
    if not cert.passed:
        out["violations"] = len(cert.violations)
        return out, 1, None
    trace = iterate_multivalued(T, gauge, r, args.start, args.tol, args.max_iter, certificate=cert)
    out["trace"] = trace.to_dict()
    out["error_bounds"] = [error_bound(trace, gauge, n) for n in range(len(trace.points))]
    code = 0 if trace.fixed_point is not None else 1
    if code == 0 and T.is_single_valued:
        try:
            _, uniq = iterate_single(T, gauge, r, args.start, args.tol, args.max_iter, starts=args.starts)
            out["uniqueness"] = uniq.to_dict()
        except UniquenessViolated as exc:
            out["uniqueness"] = {"error": str(exc)}
            code = 1
    extra = {args.trace: _trace_csv(trace, gauge)} if args.trace else None
    return out, code, extra


def cmd_dp_solve(args, scenario, gauge):
    _need(scenario, "dp", "dp-solve")
    p = scenario.dp
    r = _check_r(args.r)
    cert = check_condition_ii(p, gauge, r, seed=args.seed)
    out = {"r": r, "gauge": gauge.to_dict(), "seed": args.seed}
    if not cert.passed:
        out["condition"] = cert.to_dict()
        return out, 1, None
    try:
        sol = solve_functional_equation(p, gauge, r, args.tol, args.max_iter, args.starts, args.seed, cert)
    except UniquenessViolated as exc:
        out["error"] = str(exc)
        return out, 1, None
    out.update(sol.to_dict())
    return out, 0 if sol.converged else 1, None


def cmd_verify_lemmas(args, scenario, gauge):
    r = _check_r(args.r)
    out: dict = {"r": r, "gauge": gauge.to_dict()}
    if scenario.kind == "multimap":
        T = scenario.multimap
        if not 0 <= args.start < len(T):
            raise InputError(f"--start {args.start} is not a point index (0..{len(T) - 1})")
        try:
            l21 = verify_lemma21(T, gauge, r)
            trace = iterate_multivalued(T, gauge, r, args.start, args.tol, args.max_iter)
            l22 = verify_lemma22(T, gauge, r, trace.points, trace.points[-1])
        except PreconditionError as exc:
            out["error"] = str(exc)
            return out, 1, None
        out["lemmas"] = [l21.to_dict(), l22.to_dict()]
        return out, 0 if l21.passed and l22.passed else 1, None
    p = scenario.dp
    rng = np.random.default_rng(args.seed)
    lemma31_fail = 0
    for _ in range(1000):
        R = rng.uniform(0, 10, size=int(rng.integers(1, 10)))
        lemma31_fail += not verify_lemma31(gauge, R)
    scale = 2.0 * p.value_scale() + 1.0
    lemma32_fail = []
    for k in range(args.samples):
        h = rng.uniform(-scale, scale, p.n_states)
        l = rng.uniform(-scale, scale, p.n_states)
        x = int(rng.integers(p.n_states))
        try:
            lemma32_selection(p, gauge, h, l, x, 1e-6)
        except LemmaViolation as exc:
            lemma32_fail.append({"sample": k, "error": str(exc)})
    out["lemmas"] = [
        {"lemma": "lemma31", "passed": lemma31_fail == 0, "checked": 1000, "failures": lemma31_fail},
        {"lemma": "lemma32", "passed": not lemma32_fail, "checked": args.samples, "failures": lemma32_fail},
    ]
    return out, 0 if not lemma31_fail and not lemma32_fail else 1, None


HANDLERS = {
    "validate-gauge": cmd_validate_gauge,
    "certify": cmd_certify,
    "min-r": cmd_min_r,
    "solve": cmd_solve,
    "dp-solve": cmd_dp_solve,
    "verify-lemmas": cmd_verify_lemmas,
}


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def report_schema() -> dict:
    """The JSON Schema every report conforms to."""
    return json.loads(resources.files(__package__).joinpath("report_schema.json").read_text(encoding="utf-8"))


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _setup_logging()
        scenario = load_scenario(args.scenario) if args.scenario else None
        gauge = _resolve_gauge(args, scenario)
        report, code, extra = HANDLERS[args.command](args, scenario, gauge)
        report = {"command": args.command} | report
        text = dumps(report)
    except (InputError, ScenarioError) as exc:
        print(f"suzukifix {args.command}: error: {exc}", file=sys.stderr)
        return 2
    for path, body in (extra or {}).items():
        _atomic_write(path, body)
    if args.report:
        _atomic_write(args.report, text)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
