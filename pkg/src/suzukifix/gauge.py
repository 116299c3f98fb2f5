"""Gauge functions: subadditive, nondecreasing, continuous maps of [0, inf)
with psi(t) >= t for t > 0 and psi(t) = 0 only at t = 0.

Built-in kinds are ``identity`` (t), ``linear`` (c*t, c >= 1), ``log``
(t + ln(1 + t)) and ``root`` (t + sqrt(t)).  A ``tabulated`` gauge is the
piecewise-linear interpolant of a knot list starting at (0, 0), continued
past the last knot with slope 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .quadrature import adaptive_simpson

KINDS = ("identity", "linear", "log", "root", "tabulated")
AXIOMS = ("zero-at-zero", "dominates-identity", "monotone", "subadditive", "integral-bound")
DEFAULT_TOL = 1e-9
QUAD_TOL = 1e-10

# Stand-in for s = 0 in the sqrt-substituted integrand; s*s stays a normal float.
_S_FLOOR = 1e-150


class GaugeError(ValueError):
    """Raised for a malformed gauge or one that is not a member of the family."""


class DomainError(ValueError):
    """Raised when a gauge is evaluated outside [0, inf)."""


class NonDifferentiablePoint(ValueError):
    """Raised when a tabulated gauge is differentiated exactly at a knot."""


def _as_array(t: Any, what: str = "t") -> tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"{what} must be >= 0, got {t!r}")
    return arr, arr.ndim == 0


def _out(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


@dataclass(frozen=True)
class Gauge:
    kind: str
    c: float = 1.0
    knots: tuple[tuple[float, float], ...] = ()
    _ts: np.ndarray = field(init=False, repr=False, compare=False)
    _ps: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise GaugeError(f"unknown gauge kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "linear":
            if not math.isfinite(self.c) or self.c < 1.0:
                raise GaugeError(f"linear gauge needs c >= 1, got {self.c!r}")
        elif self.c != 1.0:
            raise GaugeError(f"coefficient c only applies to linear gauges (kind={self.kind!r})")
        if self.kind == "tabulated":
            ts, ps = self._check_knot_shape(self.knots)
            slopes = np.diff(ps) / np.diff(ts)
            cum = np.concatenate([[0.0], np.cumsum(slopes * np.diff(ts))])
        else:
            if self.knots:
                raise GaugeError("knots only apply to tabulated gauges")
            ts = ps = cum = np.empty(0)
        object.__setattr__(self, "_ts", ts)
        object.__setattr__(self, "_ps", ps)
        object.__setattr__(self, "_cum", cum)

    @staticmethod
    def _check_knot_shape(knots) -> tuple[np.ndarray, np.ndarray]:
        if len(knots) < 2:
            raise GaugeError("tabulated gauge needs at least two knots")
        arr = np.asarray(knots, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or not np.all(np.isfinite(arr)):
            raise GaugeError("knots must be finite [t, psi_t] pairs")
        ts, ps = arr[:, 0].copy(), arr[:, 1].copy()
        if ts[0] != 0.0 or ps[0] != 0.0:
            raise GaugeError("first knot must be [0, 0]")
        if np.any(np.diff(ts) <= 0):
            raise GaugeError("knot abscissae must be strictly increasing")
        ts.setflags(write=False)
        ps.setflags(write=False)
        return ts, ps

    # constructors

    @classmethod
    def identity(cls) -> "Gauge":
        return cls("identity")

    @classmethod
    def linear(cls, c: float) -> "Gauge":
        return cls("linear", c=float(c))

    @classmethod
    def log(cls) -> "Gauge":
        return cls("log")

    @classmethod
    def root(cls) -> "Gauge":
        return cls("root")

    @classmethod
    def tabulated(cls, knots: Iterable[Sequence[float]], check: bool = True) -> "Gauge":
        """Build a piecewise-linear gauge.

        With ``check`` (the default) the knots are certified against the
        gauge axioms and a :class:`GaugeError` lists every failed axiom.
        ``check=False`` keeps only the structural checks, which is how a
        deliberately broken gauge can be handed to :func:`validate_gauge`.
        """
        g = cls("tabulated", knots=tuple((float(t), float(p)) for t, p in knots))
        if check:
            failed = _tabulated_failures(g)
            if failed:
                raise GaugeError("tabulated gauge violates: " + "; ".join(failed))
        return g

    @classmethod
    def from_dict(cls, spec: dict) -> "Gauge":
        if not isinstance(spec, dict):
            raise GaugeError("gauge: expected an object")
        unknown = set(spec) - {"kind", "c", "knots"}
        if unknown:
            raise GaugeError(f"gauge: unknown field(s) {sorted(unknown)}")
        kind = spec.get("kind")
        if kind not in KINDS:
            raise GaugeError(f"gauge.kind: expected one of {KINDS}, got {kind!r}")
        if kind == "linear":
            c = spec.get("c")
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise GaugeError("gauge.c: linear gauge needs a numeric coefficient")
            return cls.linear(c)
        if "c" in spec:
            raise GaugeError(f"gauge.c: not allowed for kind {kind!r}")
        if kind == "tabulated":
            knots = spec.get("knots")
            if not isinstance(knots, list) or not all(
                isinstance(k, list)
                and len(k) == 2
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in k)
                for k in knots
            ):
                raise GaugeError("gauge.knots: expected a list of [t, psi_t] number pairs")
            return cls.tabulated(knots)
        if "knots" in spec:
            raise GaugeError(f"gauge.knots: not allowed for kind {kind!r}")
        return cls(kind)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == "linear":
            out["c"] = self.c
        if self.kind == "tabulated":
            out["knots"] = [list(k) for k in self.knots]
        return out

    @property
    def name(self) -> str:
        return f"linear:{self.c:g}" if self.kind == "linear" else self.kind

    @property
    def absolutely_continuous(self) -> bool:
        # Every built-in and every piecewise-linear gauge is.
        return True

    # evaluation

    def __call__(self, t):
        arr, scalar = _as_array(t)
        if self.kind == "identity":
            out = arr.copy()
        elif self.kind == "linear":
            out = self.c * arr
        elif self.kind == "log":
            out = arr + np.log1p(arr)
        elif self.kind == "root":
            out = arr + np.sqrt(arr)
        else:
            ts, ps = self._ts, self._ps
            out = np.where(arr <= ts[-1], np.interp(arr, ts, ps), ps[-1] + (arr - ts[-1]))
        return _out(np.asarray(out, dtype=float), scalar)

    def derivative(self, t: float) -> float:
        """psi'(t) for t > 0; raises at knots of a tabulated gauge."""
        t = float(t)
        if not t > 0:
            raise DomainError(f"derivative needs t > 0, got {t!r}")
        if self.kind == "identity":
            return 1.0
        if self.kind == "linear":
            return self.c
        if self.kind == "log":
            return 1.0 + 1.0 / (1.0 + t)
        if self.kind == "root":
            return 1.0 + 0.5 / math.sqrt(t)
        ts, ps = self._ts, self._ps
        if np.any(ts == t):
            raise NonDifferentiablePoint(f"tabulated gauge has a knot at t={t!r}")
        if t > ts[-1]:
            return 1.0
        k = int(np.searchsorted(ts, t)) - 1
        return float((ps[k + 1] - ps[k]) / (ts[k + 1] - ts[k]))

    def integral_psi_prime(self, upper, method: str = "exact"):
        """Integral of psi' over [0, upper].

        ``method="exact"`` uses the antiderivative (built-ins) or the exact
        piecewise sum (tabulated) and accepts arrays.  ``method="quadrature"``
        is the adaptive Simpson fallback, scalar only, run on the
        substitution t = s*s so that the t**-1/2 singularity of the root
        gauge's derivative at 0 becomes a bounded integrand.
        """
        if method == "quadrature":
            return self._integral_quadrature(upper)
        if method != "exact":
            raise ValueError(f"unknown integration method {method!r}")
        arr, scalar = _as_array(upper, "upper")
        if self.kind == "identity":
            out = arr.copy()
        elif self.kind == "linear":
            out = self.c * arr
        elif self.kind == "log":
            out = arr + np.log1p(arr)
        elif self.kind == "root":
            out = arr + np.sqrt(arr)
        else:
            ts, ps, cum = self._ts, self._ps, self._cum
            slopes = np.diff(ps) / np.diff(ts)
            k = np.clip(np.searchsorted(ts, arr, side="right") - 1, 0, len(ts) - 2)
            inside = cum[k] + slopes[k] * (arr - ts[k])
            out = np.where(arr <= ts[-1], inside, cum[-1] + (arr - ts[-1]))
        return _out(np.asarray(out, dtype=float), scalar)

    def _integral_quadrature(self, upper, tol: float = QUAD_TOL) -> float:
        u = float(upper)
        if not u >= 0:
            raise DomainError(f"upper must be >= 0, got {upper!r}")
        if u == 0.0:
            return 0.0
        cuts = [0.0] + [t for t in self._ts if 0.0 < t < u] + [u]
        pieces = list(zip(cuts[:-1], cuts[1:]))
        total = 0.0
        for a, b in pieces:
            if self.kind == "tabulated":
                slope = self.derivative(0.5 * (a + b))
                integrand = lambda s, k=slope: 2.0 * s * k
            else:
                integrand = lambda s: 2.0 * max(s, _S_FLOOR) * self.derivative(max(s, _S_FLOOR) ** 2)
            total += adaptive_simpson(integrand, math.sqrt(a), math.sqrt(b), tol / len(pieces))
        return total


def _tabulated_failures(g: Gauge) -> list[str]:
    """Exact axiom check for a piecewise-linear gauge with a slope-1 tail.

    Domination and monotonicity are linear between knots, so the knots
    decide them.  psi(a) + psi(b) - psi(a + b) is linear on each cell cut
    by the lines a = t_i, b = t_j, a + b = t_k and bounded below on the
    unbounded cells, so its minimum sits on a vertex of that arrangement.
    """
    ts, ps = g._ts, g._ps
    failures = []
    if np.any(ps[1:] <= 0):
        failures.append("zero-at-zero: psi(t) = 0 for some knot t > 0")
    gap = ts[1:] - ps[1:]
    if np.any(gap > DEFAULT_TOL):
        i = int(np.argmax(gap)) + 1
        failures.append(f"dominates-identity: psi({ts[i]!r}) = {ps[i]!r} < t")
    drops = ps[:-1] - ps[1:]
    if np.any(drops > DEFAULT_TOL):
        i = int(np.argmax(drops))
        failures.append(f"monotone: psi({ts[i]!r}) = {ps[i]!r} > psi({ts[i + 1]!r}) = {ps[i + 1]!r}")
    a = np.concatenate([np.repeat(ts, len(ts)), np.repeat(ts, len(ts))])
    b = np.concatenate([np.tile(ts, len(ts)), np.tile(ts, len(ts)) - np.repeat(ts, len(ts))])
    keep = b >= 0
    a, b = a[keep], b[keep]
    slack = g(a) + g(b) - g(a + b)
    if np.any(slack < -DEFAULT_TOL):
        i = int(np.argmin(slack))
        failures.append(f"subadditive: psi({a[i] + b[i]!r}) > psi({a[i]!r}) + psi({b[i]!r})")
    return failures


@dataclass
class AxiomCheck:
    name: str
    passed: bool
    worst: dict | None = None

    def to_dict(self) -> dict:
        return {"axiom": self.name, "passed": self.passed, "worst": self.worst}


@dataclass
class GaugeReport:
    gauge: Gauge
    checks: list[AxiomCheck]
    grid_size: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> AxiomCheck:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self) -> dict:
        return {
            "gauge": self.gauge.to_dict(),
            "grid_size": self.grid_size,
            "passed": self.passed,
            "axioms": [c.to_dict() for c in self.checks],
        }


def validate_gauge(g: Gauge, sample_grid: Iterable[float], tol: float = DEFAULT_TOL) -> GaugeReport:
    """Check the five gauge axioms on a sample grid.

    Failures become report entries, never exceptions.  The knots of a
    tabulated gauge are merged into the grid so that a bad knot cannot
    hide between samples.
    """
    grid = np.asarray(list(sample_grid), dtype=float)
    if grid.size == 0:
        raise ValueError("sample_grid must be nonempty")
    if np.any(~np.isfinite(grid)) or np.any(grid < 0):
        raise DomainError("sample_grid entries must be finite and >= 0")
    if g.kind == "tabulated":
        grid = np.concatenate([grid, g._ts])
    grid = np.unique(grid)
    psi = g(grid)
    checks = []

    zero_val = float(g(0.0))
    bad = np.flatnonzero((grid > 0) & (psi <= 0))
    if zero_val != 0.0:
        checks.append(AxiomCheck("zero-at-zero", False, {"t": 0.0, "psi": zero_val}))
    elif bad.size:
        i = int(bad[0])
        checks.append(AxiomCheck("zero-at-zero", False, {"t": float(grid[i]), "psi": float(psi[i])}))
    else:
        checks.append(AxiomCheck("zero-at-zero", True))

    gap = np.where(grid > 0, grid - psi, -np.inf)
    i = int(np.argmax(gap))
    ok = not gap[i] > tol
    checks.append(
        AxiomCheck("dominates-identity", ok, None if ok else {"t": float(grid[i]), "psi": float(psi[i])})
    )

    if grid.size > 1:
        drop = psi[:-1] - psi[1:]
        i = int(np.argmax(drop))
        ok = not drop[i] > tol
        worst = None if ok else {
            "t1": float(grid[i]), "t2": float(grid[i + 1]),
            "psi1": float(psi[i]), "psi2": float(psi[i + 1]),
        }
        checks.append(AxiomCheck("monotone", ok, worst))
    else:
        checks.append(AxiomCheck("monotone", True))

    excess = g(grid[:, None] + grid[None, :]) - (psi[:, None] + psi[None, :])
    i, j = np.unravel_index(int(np.argmax(excess)), excess.shape)
    ok = not excess[i, j] > tol
    worst = None if ok else {"t1": float(grid[i]), "t2": float(grid[j]), "excess": float(excess[i, j])}
    checks.append(AxiomCheck("subadditive", ok, worst))

    over = g.integral_psi_prime(grid) - psi
    i = int(np.argmax(over))
    ok = not over[i] > tol
    checks.append(AxiomCheck("integral-bound", ok, None if ok else {"t": float(grid[i]), "excess": float(over[i])}))

    return GaugeReport(g, checks, int(grid.size))


BUILTINS = {
    "identity": Gauge.identity,
    "log": Gauge.log,
    "root": Gauge.root,
}


def gauge_from_name(name: str) -> Gauge:
    """Parse ``identity``, ``log``, ``root`` or ``linear:C``."""
    if name in BUILTINS:
        return BUILTINS[name]()
    if name.startswith("linear:"):
        try:
            c = float(name.split(":", 1)[1])
        except ValueError:
            raise GaugeError(f"bad linear coefficient in {name!r}") from None
        return Gauge.linear(c)
    raise GaugeError(f"unknown gauge name {name!r}; expected identity, log, root or linear:C")
