"""Constructive fixed-point iteration for certified multivalued contractions.

From z0 the iteration picks z_{n+1} in T z_n nearest to z_n (lowest index
on ties).  In a finite space that nearest point realises d(z_n, T z_n)
exactly, so the selection needs no epsilon-delta slack.  Each step checks
the decrease invariant

    psi(d(z_n, z_{n+1})) < rbar * psi(d(z_{n-1}, z_n)),   r < rbar < 1,

and stops the run the moment it fails.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .contraction import ContractionCertificate, MultiMap, PreconditionError, certify
from .gauge import Gauge

log = logging.getLogger(__name__)

TERMINATIONS = ("fixed-point-hit", "tolerance", "max-iter", "invariant-violation")
INVARIANT_SLACK = 1e-12
# Certificates that feed the solver: the Ciric class implies the Suzuki one.
_SOLVABLE = ("suzuki-integral", "ciric-integral")


class UniquenessViolated(RuntimeError):
    """Two runs of a single-valued contraction ended at different points."""


@dataclass
class IterationTrace:
    points: list[int]
    step_distances: list[float]
    gauge_steps: list[float]
    residuals: list[float]
    r: float
    r_bar: float
    terminated_by: str = "max-iter"

    @property
    def steps(self) -> int:
        return len(self.step_distances)

    @property
    def fixed_point(self) -> int | None:
        """The endpoint if the run claims one, else None."""
        if self.terminated_by in ("fixed-point-hit", "tolerance"):
            return self.points[-1]
        return None

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "step_distances": self.step_distances,
            "gauge_steps": self.gauge_steps,
            "residuals": self.residuals,
            "r": self.r,
            "r_bar": self.r_bar,
            "terminated_by": self.terminated_by,
            "fixed_point": self.fixed_point,
        }


def _check_certificate(T: MultiMap, g: Gauge, r: float, certificate: ContractionCertificate | None):
    if certificate is None:
        certificate = certify(T, g, r, "suzuki-integral")
    elif certificate.cls not in _SOLVABLE or certificate.r != r or certificate.gauge != g:
        raise PreconditionError(
            f"certificate ({certificate.cls}, r={certificate.r}) does not cover ({g.name}, r={r})"
        )
    if not certificate.passed:
        raise PreconditionError(
            f"map is not certified {certificate.cls} at r={r} "
            f"({len(certificate.violations)} violating pairs)"
        )
    return certificate


def iterate_multivalued(
    T: MultiMap,
    g: Gauge,
    r: float,
    z0: int,
    tol: float = 1e-9,
    max_iter: int = 10_000,
    certificate: ContractionCertificate | None = None,
    r_bar: float | None = None,
) -> IterationTrace:
    """Run the iteration from ``z0``.

    Without ``certificate`` the map is certified suzuki-integral at ``r``
    first; a passing ciric-integral certificate is accepted as well.  Raises
    :class:`PreconditionError` on an uncertified map.
    """
    _check_certificate(T, g, r, certificate)
    if r_bar is None:
        r_bar = 0.5 * (r + 1.0)
    if not r < r_bar < 1.0:
        raise ValueError(f"r_bar must satisfy r < r_bar < 1, got {r_bar!r}")
    if not 0 <= z0 < len(T):
        raise IndexError(f"start point {z0} not in the space")
    m = T.space.matrix
    trace = IterationTrace([int(z0)], [], [], [T.residual(z0)], float(r), float(r_bar))
    z = int(z0)
    for _ in range(max_iter):
        if trace.residuals[-1] == 0.0:
            trace.terminated_by = "fixed-point-hit"
            break
        image = T.images[z]
        nxt = min(image, key=lambda p: (m[z, p], p))
        step = float(m[z, nxt])
        gstep = float(g(step))
        if trace.gauge_steps and not gstep < r_bar * trace.gauge_steps[-1] + INVARIANT_SLACK:
            log.warning("decrease invariant failed at step %d: %r >= %r * %r",
                        trace.steps, gstep, r_bar, trace.gauge_steps[-1])
            trace.terminated_by = "invariant-violation"
            break
        z = int(nxt)
        trace.points.append(z)
        trace.step_distances.append(step)
        trace.gauge_steps.append(gstep)
        trace.residuals.append(T.residual(z))
        log.debug("step %d: -> %d, d=%r", trace.steps, z, step)
        if step <= tol:
            trace.terminated_by = "fixed-point-hit" if trace.residuals[-1] == 0.0 else "tolerance"
            break
    else:
        trace.terminated_by = "fixed-point-hit" if trace.residuals[-1] == 0.0 else "max-iter"
    return trace


def error_bound(trace: IterationTrace, g: Gauge, n: int) -> float:
    """A-priori bound psi(d(z0, z1)) * rbar**n / (1 - rbar) on d(z_n, limit)."""
    if not 0 <= n < len(trace.points):
        raise IndexError(f"index {n} outside trace of {len(trace.points)} points")
    if not trace.step_distances:
        return 0.0
    return float(g(trace.step_distances[0])) * trace.r_bar**n / (1.0 - trace.r_bar)


def fixed_point_residual(T: MultiMap, z: int) -> float:
    """d(z, Tz); zero exactly when z is a fixed point."""
    return T.residual(z)


@dataclass
class UniquenessReport:
    fixed_point: int
    starts: list[int]
    endpoints: list[int]
    traces: list[IterationTrace] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "fixed_point": self.fixed_point,
            "starts": self.starts,
            "endpoints": self.endpoints,
            "steps": [t.steps for t in self.traces],
        }


def alternative_starts(n_points: int, z0: int, k: int) -> list[int]:
    """Up to ``k`` start indices other than ``z0``, evenly spread over the space."""
    others = [p for p in range(n_points) if p != z0]
    if k >= len(others):
        return others
    picks = np.linspace(0, len(others) - 1, k).round().astype(int)
    return [others[i] for i in dict.fromkeys(picks.tolist())]


def iterate_single(
    S: MultiMap,
    g: Gauge,
    r: float,
    z0: int,
    tol: float = 1e-9,
    max_iter: int = 10_000,
    starts: int | Sequence[int] = 5,
) -> tuple[IterationTrace, UniquenessReport]:
    """Iterate a single-valued map and check that alternative starts agree.

    ``starts`` is either a count of extra starts (spread over the space) or
    an explicit list.  Raises :class:`UniquenessViolated` when two runs
    end at different points.
    """
    if not S.is_single_valued:
        raise ValueError("iterate_single needs singleton images")
    cert = _check_certificate(S, g, r, None)
    main = iterate_multivalued(S, g, r, z0, tol, max_iter, certificate=cert)
    if main.fixed_point is None:
        raise PreconditionError(f"run from {z0} ended by {main.terminated_by} without a fixed point")
    extra = alternative_starts(len(S), z0, starts) if isinstance(starts, int) else [int(s) for s in starts]
    traces = [main] + [iterate_multivalued(S, g, r, s, tol, max_iter, certificate=cert) for s in extra]
    endpoints = [t.points[-1] for t in traces]
    if any(t.fixed_point is None for t in traces) or len(set(endpoints)) > 1:
        raise UniquenessViolated(f"runs from {[z0] + extra} ended at {endpoints}")
    return main, UniquenessReport(main.fixed_point, [int(z0)] + extra, endpoints, traces)
