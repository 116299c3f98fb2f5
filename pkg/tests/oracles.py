"""Reference computations written straight from the definitions.

Nothing here imports the package's numerical routines: distances are
plain loops over Python lists, integrals of psi' come from
``scipy.integrate.quad`` on the derivative, and the DP solution comes from
policy enumeration with exact linear solves.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np
from scipy import integrate

DERIVATIVES = {
    "identity": lambda t: 1.0,
    "log": lambda t: 1.0 + 1.0 / (1.0 + t),
    "root": lambda t: 1.0 + 0.5 / math.sqrt(t),
}
PSI = {
    "identity": lambda t: t,
    "log": lambda t: t + math.log(1.0 + t),
    "root": lambda t: t + math.sqrt(t),
}


@lru_cache(maxsize=None)
def integral_of_derivative(kind: str, upper: float) -> float:
    if upper == 0.0:
        return 0.0
    if kind == "identity":
        return upper
    val, _ = integrate.quad(DERIVATIVES[kind], 0.0, upper, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def dist_to_set(D, x, B):
    return min(D[x][b] for b in B)


def hausdorff(D, A, B):
    return max(max(dist_to_set(D, a, B) for a in A), max(dist_to_set(D, b, A) for b in B))


def phi(r):
    return 1.0 if r < 0.5 else 1.0 - r


def brute_certify(D, images, kind, r, cls, tol=1e-8):
    """Violating ordered pairs (x, y) for one contraction class."""
    D = [list(map(float, row)) for row in D]
    n = len(D)
    psi = PSI[kind] if cls != "suzuki-plain" else PSI["identity"]
    if cls in ("suzuki-integral", "ciric-integral"):
        f = lambda u: integral_of_derivative(kind, u)
    else:
        f = psi
    bad = []
    for x in range(n):
        for y in range(n):
            dx = dist_to_set(D, x, images[x])
            dy = dist_to_set(D, y, images[y])
            cross = (dist_to_set(D, x, images[y]) + dist_to_set(D, y, images[x])) / 2
            majorant = max(f(D[x][y]), f(dx), f(dy), f(cross))
            if cls == "ciric-integral":
                active = True
            else:
                active = phi(r) * f(dx) <= psi(D[x][y]) + tol
            lhs = psi(hausdorff(D, images[x], images[y]))
            if active and lhs > r * majorant + 1e-9:
                bad.append((x, y))
    return bad


def policy_enumeration(reward, beta, c, transition):
    """Optimal values of h(x) = max_y [g + c + beta * h(T(x, y))], 0 <= beta < 1.

    Each stationary policy gives a linear system (I - beta P) h = g_pi + c_pi;
    the solution is the componentwise max over policies, returned with the
    maximising policy.
    """
    reward = np.asarray(reward, float)
    c = np.asarray(c, float)
    transition = np.asarray(transition)
    ns, nd = reward.shape
    best, best_pi = None, None
    for pi in itertools.product(range(nd), repeat=ns):
        P = np.zeros((ns, ns))
        rhs = np.empty(ns)
        for x, y in enumerate(pi):
            P[x, transition[x, y]] = 1.0
            rhs[x] = reward[x, y] + c[x, y]
        h = np.linalg.solve(np.eye(ns) - beta * P, rhs)
        if best is None:
            best, best_pi = h, pi
        else:
            best = np.maximum(best, h)
            if np.all(h >= best - 1e-12):
                best_pi = pi
    return best, best_pi


def cross_substitute(reward, beta, c, transition, h):
    """max_x |h(x) - max_y [g + c + beta * h(T)]| by explicit loops."""
    ns, nd = np.asarray(reward).shape
    worst = 0.0
    for x in range(ns):
        best = max(reward[x][y] + c[x][y] + beta * h[transition[x][y]] for y in range(nd))
        worst = max(worst, abs(h[x] - best))
    return worst
