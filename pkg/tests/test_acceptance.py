"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
pytest terminal summary.
"""

from __future__ import annotations

import itertools
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

import oracles
from cli_cases import COMMANDS
from conftest import ACCEPTANCE, BUILTIN_GAUGES, random_affine
from suzukifix.cli import main
from suzukifix.contraction import certify, min_r, parse_grid, verify_lemma21, verify_lemma22
from suzukifix.corpus import halving_map, random_corpus
from suzukifix.dp import lemma32_selection, solve_functional_equation, sup_norm, verify_lemma31
from suzukifix.gauge import Gauge, validate_gauge
from suzukifix.metric import random_space, subset_hausdorff_table
from suzukifix.solver import error_bound, iterate_multivalued

CORPUS_SIZE = 100
CORPUS_SEED = 0


@contextmanager
def criterion(number: int, title: str, budget: float | None = None):
    notes: list[str] = []
    t0 = time.perf_counter()
    try:
        yield notes
        elapsed = time.perf_counter() - t0
        if budget is not None:
            assert elapsed < budget, f"runtime {elapsed:.2f}s exceeds {budget}s"
    except BaseException as exc:
        line = f"criterion {number} FAIL  {title}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        ACCEPTANCE.append(line)
        print(line)
        raise
    detail = "; ".join(notes + [f"{elapsed:.2f}s"])
    line = f"criterion {number} PASS  {title} ({detail})"
    ACCEPTANCE.append(line)
    print(line)


@pytest.fixture(scope="module")
def corpus():
    return random_corpus(CORPUS_SIZE, seed=CORPUS_SEED)


def _plain(T):
    return T.space.matrix.tolist(), [list(im) for im in T.images]


def test_criterion_1_gauge_axioms():
    with criterion(1, "gauge axiom suite", budget=1.0) as notes:
        grid = np.linspace(0.0, 100.0, 500)
        for g in BUILTIN_GAUGES:
            rep = validate_gauge(g, grid, tol=1e-9)
            assert rep.passed, f"{g.name}: {[c.name for c in rep.checks if not c.passed]}"
            integral = g.integral_psi_prime(grid)
            assert np.max(np.abs(integral - g(grid))) <= 1e-9, g.name
        # independent oracle: scipy quad of psi' on a subsample
        for kind in ("log", "root"):
            for u in grid[::50]:
                assert abs(oracles.integral_of_derivative(kind, float(u)) - oracles.PSI[kind](float(u))) <= 1e-9
        notes.append(f"{len(BUILTIN_GAUGES)} gauges x {grid.size} points")


def test_criterion_2_metric_suite():
    with criterion(2, "Hausdorff metric axioms", budget=5.0) as notes:
        rng = np.random.default_rng(2)
        subsets = 0
        for _ in range(200):
            space = random_space(rng, int(rng.integers(1, 9)))
            table = subset_hausdorff_table(space)[1:, 1:]
            subsets += table.shape[0]
            assert np.array_equal(table, table.T)
            assert np.array_equal(table == 0, np.eye(table.shape[0], dtype=bool))
            for c in range(table.shape[0]):
                assert np.all(table <= table[:, c, None] + table[None, c, :])
        notes.append(f"200 spaces, {subsets} subsets, exact integer arithmetic")


def test_criterion_3_reduction_equivalence(corpus):
    with criterion(3, "identity-gauge reduction equivalence", budget=10.0) as notes:
        g = Gauge.identity()
        passes = 0
        for inst in corpus:
            certs = [certify(inst.T, g, inst.r, cls) for cls in ("suzuki-integral", "suzuki-psi", "suzuki-plain")]
            assert len({c.passed for c in certs}) == 1, f"seed {inst.seed}"
            assert len({tuple(c.violation_pairs()) for c in certs}) == 1, f"seed {inst.seed}"
            assert certs[0].violation_pairs() == oracles.brute_certify(*_plain(inst.T), "identity", inst.r, "suzuki-plain")
            passes += certs[0].passed
        assert 0 < passes < len(corpus)
        notes.append(f"{len(corpus)} instances, {passes} certified")


def test_criterion_4_ciric_implies_suzuki(corpus):
    with criterion(4, "ciric-integral pass implies suzuki-integral pass") as notes:
        ciric = 0
        for g in BUILTIN_GAUGES:
            for inst in corpus:
                if certify(inst.T, g, inst.r, "ciric-integral").passed:
                    ciric += 1
                    assert certify(inst.T, g, inst.r, "suzuki-integral").passed, f"{g.name} seed {inst.seed}"
        assert ciric > 0
        notes.append(f"{ciric} ciric passes over {len(BUILTIN_GAUGES)} gauges, 0 counterexamples")


def test_criterion_5_solver_invariant(corpus):
    with criterion(5, "solver invariant and error bound", budget=10.0) as notes:
        runs = certified = 0
        for g in BUILTIN_GAUGES:
            for inst in corpus:
                if not certify(inst.T, g, inst.r, "suzuki-integral").passed:
                    continue
                certified += 1
                for z0 in range(len(inst.T)):
                    trace = iterate_multivalued(inst.T, g, inst.r, z0)
                    runs += 1
                    z = trace.points[-1]
                    assert trace.terminated_by == "fixed-point-hit"
                    assert inst.T.residual(z) == 0.0
                    gs = trace.gauge_steps
                    for a, b in zip(gs, gs[1:]):
                        assert b < trace.r_bar * a
                    for n, p in enumerate(trace.points):
                        assert inst.T.space.d(p, z) <= error_bound(trace, g, n) + 1e-9
        assert certified >= 20
        notes.append(f"{certified} certified (instance, gauge) pairs, {runs} runs")


def test_criterion_6_halving_map():
    with criterion(6, "halving map", budget=1.0) as notes:
        T = halving_map()
        grid = parse_grid("0.05:0.95:0.05")
        ident = Gauge.identity()
        trace = iterate_multivalued(T, ident, 0.5, 0)
        assert T.space.label(0) == 1.0
        assert trace.steps == 8
        assert trace.step_distances == [0.5 ** (n + 1) for n in range(8)]
        assert trace.fixed_point == T.space.index_of(2.0**-8)
        D, images = _plain(T)
        for cls in ("suzuki-integral", "ciric-integral"):
            expect = next(r for r in grid if not oracles.brute_certify(D, images, "identity", r, cls))
            got = min_r(T, ident, cls, grid).r
            assert got == expect == 0.5, (cls, got, expect)
        notes.append("fixed point is the least grid point 2**-8")


def test_criterion_7_dp_oracle():
    with criterion(7, "DP policy-enumeration equivalence", budget=30.0) as notes:
        rng = np.random.default_rng(7)
        ident = Gauge.identity()
        worst = 0.0
        tol = 1e-9
        for k in range(50):
            beta = (0.5, 0.9, 0.99)[k % 3]
            p = random_affine(rng, beta)
            sol = solve_functional_equation(p, ident, beta, tol=tol, starts=5, seed=k)
            assert sol.converged and len(sol.runs) == 6
            assert sol.agreement <= 2 * tol / (1 - beta)
            h, _ = oracles.policy_enumeration(p.reward, beta, p.coupling.c, p.transition)
            worst = max(worst, sup_norm(sol.values, h))
            assert sup_norm(sol.values, h) <= 1e-6
        notes.append(f"50 instances, worst sup-norm gap {worst:.1e}")


def test_criterion_8_lemmas(corpus):
    with criterion(8, "lemma suite", budget=10.0) as notes:
        checked = 0
        for g in BUILTIN_GAUGES:
            for inst in corpus:
                if not certify(inst.T, g, inst.r, "suzuki-integral").passed:
                    continue
                assert verify_lemma21(inst.T, g, inst.r).passed
                trace = iterate_multivalued(inst.T, g, inst.r, 0)
                assert verify_lemma22(inst.T, g, inst.r, trace.points, trace.points[-1]).passed
                checked += 1
        rng = np.random.default_rng(8)
        for _ in range(1000):
            R = rng.uniform(0, 10, size=int(rng.integers(1, 10)))
            for g in BUILTIN_GAUGES:
                assert verify_lemma31(g, R)
        for _ in range(200):
            p = random_affine(rng, float(rng.choice([0.5, 0.9])))
            h, l = rng.uniform(-5, 5, size=(2, p.n_states))
            res = lemma32_selection(p, Gauge.log(), h, l, int(rng.integers(p.n_states)), 1e-6)
            assert res.lhs <= res.rhs
        notes.append(f"{checked} certified instances, 1000 sets x {len(BUILTIN_GAUGES)} gauges, 200 selections")


def test_criterion_9_cli_determinism(tmp_path):
    with criterion(9, "CLI determinism") as notes:
        for key, argv in COMMANDS.items():
            files = []
            for run in ("a", "b"):
                report = tmp_path / f"{key}-{run}.json"
                extra = ["--trace", str(tmp_path / f"{key}-{run}.csv")] if argv[0] == "solve" else []
                main(argv + ["--report", str(report)] + extra)
                files.append(report)
            assert files[0].read_bytes() == files[1].read_bytes(), key
            if argv[0] == "solve" and (tmp_path / f"{key}-a.csv").exists():
                assert (tmp_path / f"{key}-a.csv").read_bytes() == (tmp_path / f"{key}-b.csv").read_bytes()
        notes.append(f"{len(COMMANDS)} invocations over all 6 commands")
