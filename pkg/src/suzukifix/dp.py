"""The dynamic-programming functional equation

    f(x) = max_{y in D} [ g(x, y) + G(x, y, f(T(x, y))) ]

on finite state and decision grids, its operator A, a sampled check of the
contraction condition on G, and value iteration with multi-start uniqueness
evidence.

Finite D makes every sup an attained max.  Value functions are 1-d arrays
indexed by state; most routines also accept a leading batch axis.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .contraction import PreconditionError, phi
from .gauge import Gauge
from .solver import UniquenessViolated

log = logging.getLogger(__name__)

FAMILIES = ("affine", "tanh")
CONDITION_TOL = 1e-8


class LemmaViolation(AssertionError):
    """A lemma inequality failed; this falsifies the implementation."""


@dataclass(frozen=True, eq=False)
class Coupling:
    """G(x, y, v) = beta * v + c(x, y) (affine) or beta * tanh(v) + c(x, y)."""

    family: str
    beta: float
    c: np.ndarray

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown G family {self.family!r}; expected one of {FAMILIES}")
        c = np.array(self.c, dtype=float)
        if c.ndim != 2 or not np.all(np.isfinite(c)):
            raise ValueError("G.c must be a finite |S| x |D| table")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "beta", float(self.beta))

    def __call__(self, v: np.ndarray) -> np.ndarray:
        inner = v if self.family == "affine" else np.tanh(v)
        return self.beta * inner + self.c

    def bound(self, value_bound: float) -> float:
        """sup |G| over values with |v| <= value_bound."""
        inner = value_bound if self.family == "affine" else min(1.0, value_bound)
        return abs(self.beta) * inner + float(np.max(np.abs(self.c), initial=0.0))

    def to_dict(self) -> dict:
        return {"family": self.family, "beta": self.beta, "c": self.c.tolist()}


@dataclass(frozen=True, eq=False)
class DPProblem:
    reward: np.ndarray
    coupling: Coupling
    transition: np.ndarray
    states: np.ndarray | None = None
    decisions: np.ndarray | None = None

    def __post_init__(self) -> None:
        g = np.array(self.reward, dtype=float)
        t = np.array(self.transition)
        if g.ndim != 2 or g.size == 0:
            raise ValueError("g must be a nonempty |S| x |D| table")
        if not np.all(np.isfinite(g)):
            raise ValueError("g must be finite")
        if t.shape != g.shape or self.coupling.c.shape != g.shape:
            raise ValueError(f"g, G.c and transition must all have shape {g.shape}")
        if t.dtype.kind not in "iu" or np.any(t < 0) or np.any(t >= g.shape[0]):
            raise ValueError("transition entries must be state indices")
        for name, grid, size in (("states", self.states, g.shape[0]), ("decisions", self.decisions, g.shape[1])):
            if grid is not None and len(grid) != size:
                raise ValueError(f"{name} has {len(grid)} entries, tables need {size}")
        g.setflags(write=False)
        t = t.astype(np.intp)
        t.setflags(write=False)
        object.__setattr__(self, "reward", g)
        object.__setattr__(self, "transition", t)

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]

    @property
    def n_decisions(self) -> int:
        return self.reward.shape[1]

    def value_scale(self) -> float:
        """A bound on |h*| used to size random probes and starts."""
        gmax = float(np.max(np.abs(self.reward)))
        b = abs(self.coupling.beta)
        cmax = float(np.max(np.abs(self.coupling.c), initial=0.0))
        if self.coupling.family == "tanh":
            return gmax + b + cmax
        return (gmax + cmax) / (1.0 - b) if b < 1.0 else 10.0 * (gmax + cmax + 1.0)

    def q_values(self, h: np.ndarray) -> np.ndarray:
        """g(x, y) + G(x, y, h(T(x, y))), shape (..., |S|, |D|)."""
        h = self._check(h)
        return self.reward + self.coupling(h[..., self.transition])

    def _check(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        if h.shape[-1:] != (self.n_states,):
            raise ValueError(f"value table has shape {h.shape}, expected (..., {self.n_states})")
        return h


def bellman_apply(p: DPProblem, h) -> np.ndarray:
    """(Ah)(x) = max over decisions of the q-values."""
    return np.max(p.q_values(h), axis=-1)


def sup_norm(h, l) -> float | np.ndarray:
    """max_x |h(x) - l(x)|; batched over leading axes."""
    h, l = np.asarray(h, dtype=float), np.asarray(l, dtype=float)
    if h.shape[-1] != l.shape[-1]:
        raise ValueError(f"index mismatch: {h.shape} vs {l.shape}")
    out = np.max(np.abs(h - l), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def a_int_terms(p: DPProblem, gauge: Gauge, h, l) -> np.ndarray:
    """The four integrals in A_int, stacked on the last axis."""
    ah, al = bellman_apply(p, h), bellman_apply(p, l)
    norms = np.stack(
        [
            np.asarray(sup_norm(h, l)),
            np.asarray(sup_norm(h, ah)),
            np.asarray(sup_norm(l, al)),
            0.5 * (np.asarray(sup_norm(h, al)) + np.asarray(sup_norm(l, ah))),
        ],
        axis=-1,
    )
    return gauge.integral_psi_prime(norms)


def a_int(p: DPProblem, gauge: Gauge, h, l):
    out = np.max(a_int_terms(p, gauge, h, l), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class ConditionCertificate:
    """Sampled evidence for the condition on G at ``r``.

    This checks the implication on finitely many probe pairs only; it is a
    necessary condition, not a proof over every bounded value function.
    """

    r: float
    gauge: Gauge
    probes: int
    premise_active: int
    violations: list[dict]
    tol: float = CONDITION_TOL
    sampled: bool = True

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "gauge": self.gauge.to_dict(),
            "sampled": self.sampled,
            "passed": self.passed,
            "probes": self.probes,
            "premise_active": self.premise_active,
            "tol": self.tol,
            "violations": self.violations,
        }


def value_iterates(p: DPProblem, h0=None, count: int = 10_000, tol: float = 1e-9) -> np.ndarray:
    """h0, A h0, A^2 h0, ... until a step is below ``tol`` or ``count`` tables."""
    h = np.zeros(p.n_states) if h0 is None else np.asarray(h0, dtype=float)
    out = [h]
    for _ in range(count - 1):
        nxt = bellman_apply(p, h)
        out.append(nxt)
        if sup_norm(h, nxt) <= tol:
            break
        h = nxt
    return np.array(out)


def default_probes(p: DPProblem, seed: int = 0, n_random: int = 200, max_iterates: int = 10_000):
    """``n_random`` uniform random pairs plus every consecutive pair of value
    iterates from h = 0 (capped at ``max_iterates`` tables)."""
    rng = np.random.default_rng(seed)
    scale = 2.0 * p.value_scale() + 1.0
    hs = rng.uniform(-scale, scale, size=(n_random, p.n_states))
    ls = rng.uniform(-scale, scale, size=(n_random, p.n_states))
    it = value_iterates(p, count=max_iterates)
    return np.concatenate([hs, it[:-1]]), np.concatenate([ls, it[1:]])


def check_condition_ii(
    p: DPProblem,
    gauge: Gauge,
    r: float,
    probes: tuple[np.ndarray, np.ndarray] | Sequence[tuple[Sequence[float], Sequence[float]]] | None = None,
    seed: int = 0,
    tol: float = CONDITION_TOL,
) -> ConditionCertificate:
    """Check, on each probe pair (h, l) whose premise
    phi(r) * I(||h - Ah||) <= psi(||h - l||) holds, that
    psi(|G(x, y, h(T(x,y))) - G(x, y, l(T(x,y)))|) <= r * A_int(h, l)
    for every state-decision pair."""
    threshold = phi(r)
    if probes is None:
        hs, ls = default_probes(p, seed)
    elif isinstance(probes, tuple) and len(probes) == 2 and np.ndim(probes[0]) == 2:
        hs, ls = np.asarray(probes[0], dtype=float), np.asarray(probes[1], dtype=float)
    else:
        pairs = list(probes)
        hs = np.array([h for h, _ in pairs], dtype=float).reshape(len(pairs), p.n_states)
        ls = np.array([l for _, l in pairs], dtype=float).reshape(len(pairs), p.n_states)
    if hs.shape != ls.shape or hs.shape[0] == 0:
        raise ValueError("probes must be a nonempty list of (h, l) pairs")
    ah = bellman_apply(p, hs)
    premise = threshold * gauge.integral_psi_prime(sup_norm(hs, ah))
    active = premise <= gauge(sup_norm(hs, ls)) + tol
    rhs = r * a_int(p, gauge, hs, ls)
    diff = np.abs(p.coupling(hs[:, p.transition]) - p.coupling(ls[:, p.transition]))
    lhs = gauge(diff)
    bad = active[:, None, None] & (lhs > rhs[:, None, None] + tol)
    violations = [
        {"probe": int(k), "x": int(x), "y": int(y), "lhs": float(lhs[k, x, y]), "rhs": float(rhs[k])}
        for k, x, y in np.argwhere(bad)
    ]
    return ConditionCertificate(float(r), gauge, int(hs.shape[0]), int(np.sum(active)), violations, tol)


@dataclass
class Run:
    start: str
    iterations: int
    residual: float
    converged: bool
    values: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
        }


def value_iteration(p: DPProblem, h0, tol: float = 1e-9, max_iter: int = 10**6, start: str = "zero") -> Run:
    """Iterate h <- Ah until ||h - Ah|| <= tol; returns the last h, so the
    stopping rule holds for the returned table itself."""
    h = np.asarray(h0, dtype=float).copy()
    res = np.inf
    for k in range(1, max_iter + 1):
        ah = bellman_apply(p, h)
        res = sup_norm(h, ah)
        if res <= tol:
            return Run(start, k, res, True, h)
        h = ah
    return Run(start, max_iter, res, False, h)


@dataclass
class DPSolution:
    values: np.ndarray | None
    runs: list[Run]
    agreement: float | None
    agreement_bound: float
    certificate: ConditionCertificate

    @property
    def converged(self) -> bool:
        return self.values is not None

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "values": None if self.values is None else self.values.tolist(),
            "residual": self.runs[0].residual,
            "runs": [run.to_dict() for run in self.runs],
            "agreement": self.agreement,
            "agreement_bound": self.agreement_bound,
            "condition": {
                k: v for k, v in self.certificate.to_dict().items() if k != "violations"
            } | {"violations": len(self.certificate.violations)},
        }


def solve_functional_equation(
    p: DPProblem,
    gauge: Gauge,
    r: float,
    tol: float = 1e-9,
    max_iter: int = 10**6,
    starts: int = 5,
    seed: int = 0,
    certificate: ConditionCertificate | None = None,
) -> DPSolution:
    """Value iteration from h = 0 plus ``starts`` random starts.

    Needs a passing :func:`check_condition_ii` (run with ``seed`` when no
    certificate is given).  All endpoints must agree within
    2 * tol / (1 - r) of the baseline run, else :class:`UniquenessViolated`.
    If any run exhausts ``max_iter`` the solution carries no values.
    """
    if certificate is None:
        certificate = check_condition_ii(p, gauge, r, seed=seed)
    if not certificate.passed:
        raise PreconditionError(
            f"condition on G fails at r={r} on {len(certificate.violations)} probe entries"
        )
    rng = np.random.default_rng([seed, 1])
    scale = 2.0 * p.value_scale() + 1.0
    runs = [value_iteration(p, np.zeros(p.n_states), tol, max_iter)]
    for k in range(starts):
        h0 = rng.uniform(-scale, scale, size=p.n_states)
        runs.append(value_iteration(p, h0, tol, max_iter, start=f"random-{k}"))
    bound = 2.0 * tol / (1.0 - r)
    if not all(run.converged for run in runs):
        log.info("value iteration hit max_iter=%d", max_iter)
        return DPSolution(None, runs, None, bound, certificate)
    base = runs[0].values
    agreement = max(sup_norm(base, run.values) for run in runs)
    if agreement > bound:
        raise UniquenessViolated(f"endpoints disagree by {agreement!r} > {bound!r}")
    return DPSolution(base, runs, agreement, bound, certificate)


def verify_lemma31(gauge: Gauge, R: Iterable[float]) -> bool:
    """psi(max R) == max psi(R), compared exactly."""
    values = np.asarray(list(R), dtype=float)
    if values.size == 0:
        raise ValueError("R must be nonempty")
    return float(gauge(np.max(values))) == float(np.max(gauge(values)))


@dataclass
class Lemma32Result:
    y1: int
    y2: int
    lhs: float
    rhs: float
    a: float
    b: float


def lemma32_selection(p: DPProblem, gauge: Gauge, h, l, x: int, eps: float) -> Lemma32Result:
    """Maximisers y1 (for h) and y2 (for l) at state x, with the check

        psi(|(Ah)(x) - (Al)(x)|) <= max(psi(|a(x, y1)|), psi(|b(x, y2)|)) + eps

    where a and b are the G-differences between h and l at y1 and y2.
    Raises :class:`LemmaViolation` when the inequality fails.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    h, l = p._check(h), p._check(l)
    qh, ql = p.q_values(h)[x], p.q_values(l)[x]
    y1, y2 = int(np.argmax(qh)), int(np.argmax(ql))
    diff = p.coupling(h[p.transition])[x] - p.coupling(l[p.transition])[x]
    a, b = float(diff[y1]), float(diff[y2])
    lhs = float(gauge(abs(float(qh[y1]) - float(ql[y2]))))
    rhs = max(float(gauge(abs(a))), float(gauge(abs(b)))) + eps
    if lhs > rhs:
        raise LemmaViolation(f"state {x}: {lhs!r} > {rhs!r}")
    return Lemma32Result(y1, y2, lhs, rhs, a, b)
