"""Contraction classes for multivalued maps on finite metric spaces.

All four classes share the conclusion ``psi(H(Tx, Ty)) <= r * M(x, y)``
for a four-term majorant ``M``; they differ in the majorant and in the
premise that switches the conclusion on:

=================  ======================================  ==========
class              premise                                 majorant
=================  ======================================  ==========
suzuki-integral    phi(r) * I(d(x,Tx)) <= psi(d(x,y))      T_int
suzuki-psi         phi(r) * psi(d(x,Tx)) <= psi(d(x,y))    T_psi
ciric-integral     always                                  T_int
suzuki-plain       phi(r) * d(x,Tx) <= d(x,y)              T_M
=================  ======================================  ==========

where ``I(u)`` is the integral of psi' over [0, u].  ``suzuki-plain``
ignores the gauge (it is the psi = identity case).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .gauge import Gauge
from .metric import FiniteMetricSpace, point_to_set_distance

CLASSES = ("suzuki-integral", "suzuki-psi", "ciric-integral", "suzuki-plain")
PREMISE_TOL = 1e-8
LEMMA_TOL = 1e-8
# Roundoff allowance on the conclusion side, relative to max(1, rhs).
CONCLUSION_SLACK = 1e-12


class PreconditionError(RuntimeError):
    """An operation was called on an input that does not meet its hypotheses."""


def phi(r: float) -> float:
    """Suzuki threshold: 1 below r = 1/2, 1 - r from 1/2 up to 1."""
    if not 0.0 <= r < 1.0:
        raise ValueError(f"r must lie in [0, 1), got {r!r}")
    return 1.0 if r < 0.5 else 1.0 - r


@dataclass(frozen=True, eq=False)
class MultiMap:
    """x -> Tx, a nonempty finite image set for every point of ``space``."""

    space: FiniteMetricSpace
    images: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.space)
        if len(self.images) != n:
            raise ValueError(f"need one image per point: {n} points, {len(self.images)} images")
        object.__setattr__(self, "images", tuple(self.space.check_set(im) for im in self.images))
        m = self.space.matrix
        # dist_to_image[x, j] = d(x, T j)
        to_img = np.stack([np.min(m[:, list(im)], axis=1) for im in self.images], axis=1)
        directed = np.stack([np.max(to_img[list(im), :], axis=0) for im in self.images])
        to_img.setflags(write=False)
        haus = np.maximum(directed, directed.T)
        haus.setflags(write=False)
        object.__setattr__(self, "_to_img", to_img)
        object.__setattr__(self, "_haus", haus)

    @classmethod
    def from_function(cls, space: FiniteMetricSpace, f: Callable[[int], Iterable[int] | int]) -> "MultiMap":
        images = []
        for x in range(len(space)):
            im = f(x)
            images.append((im,) if isinstance(im, (int, np.integer)) else tuple(im))
        return cls(space, tuple(images))

    @classmethod
    def single_valued(cls, space: FiniteMetricSpace, targets: Sequence[int]) -> "MultiMap":
        return cls(space, tuple((int(t),) for t in targets))

    def __len__(self) -> int:
        return len(self.images)

    @property
    def is_single_valued(self) -> bool:
        return all(len(im) == 1 for im in self.images)

    def residual(self, x: int) -> float:
        """d(x, Tx)."""
        return float(self._to_img[x, x])

    @property
    def residuals(self) -> np.ndarray:
        return np.diag(self._to_img)

    @property
    def dist_to_image(self) -> np.ndarray:
        """Matrix with entry [x, y] = d(x, Ty)."""
        return self._to_img

    @property
    def image_hausdorff(self) -> np.ndarray:
        """Matrix with entry [x, y] = H(Tx, Ty)."""
        return self._haus


def _majorant_terms(T: MultiMap, f: Callable) -> np.ndarray:
    """The four terms of the majorant with ``f`` applied, shape (4, n, n)."""
    m = T.space.matrix.astype(float)
    res = T.residuals.astype(float)
    n = len(T)
    cross = 0.5 * (T.dist_to_image + T.dist_to_image.T)
    return np.stack([
        f(m),
        f(np.broadcast_to(res[:, None], (n, n))),
        f(np.broadcast_to(res[None, :], (n, n))),
        f(cross),
    ])


def t_int(T: MultiMap, g: Gauge, x: int | None = None, y: int | None = None):
    """Integral-form majorant: max of I(d(x,y)), I(d(x,Tx)), I(d(y,Ty)),
    I((d(x,Ty) + d(y,Tx)) / 2).  Returns the full matrix when x, y are omitted."""
    full = np.max(_majorant_terms(T, g.integral_psi_prime), axis=0)
    return full if x is None else float(full[x, y])


def t_psi(T: MultiMap, g: Gauge, x: int | None = None, y: int | None = None):
    """Same as :func:`t_int` with psi(u) in place of I(u)."""
    full = np.max(_majorant_terms(T, g), axis=0)
    return full if x is None else float(full[x, y])


def t_m(T: MultiMap, x: int | None = None, y: int | None = None):
    """Plain majorant, the psi = identity case."""
    full = np.max(_majorant_terms(T, lambda u: np.asarray(u, dtype=float)), axis=0)
    return full if x is None else float(full[x, y])


@dataclass(frozen=True)
class Violation:
    x: int
    y: int
    premise: float | None
    lhs: float
    rhs: float

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "premise": self.premise, "lhs": self.lhs, "rhs": self.rhs}


@dataclass
class ContractionCertificate:
    cls: str
    r: float
    gauge: Gauge
    violations: list[Violation]
    pairs_checked: int
    pairs_premise_active: int
    tol: float = PREMISE_TOL

    @property
    def passed(self) -> bool:
        return not self.violations

    def violation_pairs(self) -> list[tuple[int, int]]:
        return [(v.x, v.y) for v in self.violations]

    def to_dict(self) -> dict:
        return {
            "class": self.cls,
            "r": self.r,
            "gauge": self.gauge.to_dict(),
            "passed": self.passed,
            "pairs_checked": self.pairs_checked,
            "pairs_premise_active": self.pairs_premise_active,
            "tol": self.tol,
            "violations": [v.to_dict() for v in self.violations],
        }


def certify(T: MultiMap, g: Gauge, r: float, cls: str, tol: float = PREMISE_TOL) -> ContractionCertificate:
    """Check one contraction class at ``r`` over every ordered pair (x, y).

    The premise is lenient by ``tol`` (a pair within ``tol`` of the
    threshold is checked), so leniency can only add checks.  Violations are
    exhaustive and sorted by (x, y).
    """
    if cls not in CLASSES:
        raise ValueError(f"unknown contraction class {cls!r}; expected one of {CLASSES}")
    threshold = phi(r)
    if cls == "suzuki-plain":
        g = Gauge.identity()
    m = T.space.matrix.astype(float)
    res = T.residuals.astype(float)
    n = len(T)
    lhs = g(T.image_hausdorff.astype(float))
    if cls == "suzuki-psi":
        rhs = r * t_psi(T, g)
        prem = threshold * g(res)
    else:
        rhs = r * t_int(T, g)
        prem = threshold * g.integral_psi_prime(res)
    prem = np.broadcast_to(prem[:, None], (n, n))
    if cls == "ciric-integral":
        active = np.ones((n, n), dtype=bool)
    else:
        active = prem <= g(m) + tol
    bad = active & (lhs > rhs + CONCLUSION_SLACK * np.maximum(1.0, rhs))
    violations = [
        Violation(int(x), int(y), None if cls == "ciric-integral" else float(prem[x, y]),
                  float(lhs[x, y]), float(rhs[x, y]))
        for x, y in np.argwhere(bad)
    ]
    return ContractionCertificate(cls, float(r), g, violations, n * n, int(np.sum(active)), tol)


@dataclass
class MinRResult:
    r: float | None
    grid: list[float]
    passes: list[bool]

    def to_dict(self) -> dict:
        return {"min_r": self.r, "grid": self.grid, "passes": self.passes}


def min_r(T: MultiMap, g: Gauge, cls: str, r_grid: Sequence[float], tol: float = PREMISE_TOL) -> MinRResult:
    """Smallest grid value whose certificate passes.

    The whole grid is scanned: for the Suzuki classes phi(r) moves the
    premise, so the passing set need not be an up-set and bisection would
    be unsound.
    """
    grid = [float(r) for r in r_grid]
    if not grid:
        raise ValueError("r_grid must be nonempty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("r_grid must be sorted ascending")
    passes = [certify(T, g, r, cls, tol).passed for r in grid]
    best = next((r for r, ok in zip(grid, passes) if ok), None)
    return MinRResult(best, grid, passes)


def parse_grid(text: str) -> list[float]:
    """``LO:HI:STEP`` -> inclusive arithmetic grid, rounded to 12 decimals."""
    try:
        lo, hi, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise ValueError(f"grid must be LO:HI:STEP, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise ValueError(f"grid needs STEP > 0 and HI >= LO, got {text!r}")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 12) for k in range(count)]


@dataclass
class LemmaReport:
    lemma: str
    checked: int
    violations: list[dict]
    slack: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "passed": self.passed,
            "checked": self.checked,
            "violations": self.violations,
            "slack": self.slack,
        }


def _require_suzuki(T: MultiMap, g: Gauge, r: float, what: str) -> None:
    if not certify(T, g, r, "suzuki-integral").passed:
        raise PreconditionError(f"{what} needs a map certified suzuki-integral at r={r}")


def verify_lemma21(
    T: MultiMap, g: Gauge, r: float, tol: float = LEMMA_TOL, require_certificate: bool = True
) -> LemmaReport:
    """psi(H(Tx, Ty)) <= r * I(d(x, y)) for every x and every y in Tx.

    On a certified map any violation is a bug.  ``require_certificate=False``
    skips the guard so the check can be shown to bite on a map that is not
    a contraction at ``r``.
    """
    if require_certificate:
        _require_suzuki(T, g, r, "verify_lemma21")
    m = T.space.matrix
    violations, checked = [], 0
    for x, image in enumerate(T.images):
        for y in image:
            checked += 1
            lhs = float(g(float(T.image_hausdorff[x, y])))
            rhs = r * float(g.integral_psi_prime(float(m[x, y])))
            if lhs > rhs + tol:
                violations.append({"x": x, "y": int(y), "lhs": lhs, "rhs": rhs})
    return LemmaReport("lemma21", checked, violations)


def verify_lemma22(
    T: MultiMap,
    g: Gauge,
    r: float,
    trace: Sequence[int],
    z: int,
    tol: float = LEMMA_TOL,
    require_certificate: bool = True,
) -> LemmaReport:
    """psi(d(z, Tx)) <= r * max(I(d(z, x)), I(d(x, Tx))) for all x != z.

    ``trace`` must be an orbit (each point in the image of its predecessor)
    that has settled at ``z``; in a finite space convergence means the
    trace ends at ``z`` with z in Tz.
    """
    if require_certificate:
        _require_suzuki(T, g, r, "verify_lemma22")
    trace = [int(p) for p in trace]
    if not trace or trace[-1] != z or z not in T.images[z]:
        raise PreconditionError("trace does not converge to a fixed point z")
    for a, b in zip(trace, trace[1:]):
        if b not in T.images[a]:
            raise PreconditionError(f"trace step {a} -> {b} leaves the image of {a}")
    m = T.space.matrix
    violations, slack = [], []
    for x in range(len(T)):
        if x == z:
            continue
        lhs = float(g(point_to_set_distance(T.space, z, T.images[x])))
        rhs = r * max(float(g.integral_psi_prime(float(m[z, x]))), float(g.integral_psi_prime(T.residual(x))))
        slack.append({"x": x, "slack": rhs - lhs})
        if lhs > rhs + tol:
            violations.append({"x": x, "lhs": lhs, "rhs": rhs})
    return LemmaReport("lemma22", len(T) - 1, violations, slack)
