"""Adaptive Simpson quadrature with an absolute error target."""

from __future__ import annotations

import math
from typing import Callable

DEFAULT_TOL = 1e-10
MAX_DEPTH = 60


def _simpson(fa: float, fm: float, fb: float, a: float, b: float) -> float:
    return (b - a) * (fa + 4.0 * fm + fb) / 6.0


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_TOL,
    max_depth: int = MAX_DEPTH,
) -> float:
    """Integrate ``f`` over ``[a, b]`` to absolute accuracy ``tol``.

    Standard recursive bisection with the Richardson-corrected estimate
    ``S2 + (S2 - S1) / 15``; each half receives half of the parent budget.
    """
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_depth)
    if b == a:
        return 0.0
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = _simpson(fa, fm, fb, a, b)
    return _refine(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _refine(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = _simpson(fa, flm, fm, a, m)
    right = _simpson(fm, frm, fb, m, b)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol or not math.isfinite(delta):
        return left + right + delta / 15.0
    return _refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + _refine(
        f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1
    )
