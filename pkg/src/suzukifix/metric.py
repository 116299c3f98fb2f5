"""Finite metric spaces, point-to-set distance and the Hausdorff metric.

Points are the indices ``0..n-1`` of a :class:`FiniteMetricSpace`; a point
set is any nonempty iterable of indices.  Every finite subset is closed and
bounded, so it stands in for a member of CB(X) and all infima are minima.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORMS = ("euclidean", "max")


class MetricError(ValueError):
    """Raised for a distance table that is not a metric."""


class EmptySetError(ValueError):
    pass


def metric_closure(matrix) -> np.ndarray:
    """Shortest-path closure (Floyd-Warshall) of a symmetric weight table.

    The result satisfies the triangle inequality; integer inputs stay exact.
    """
    m = np.array(matrix, copy=True)
    for k in range(m.shape[0]):
        m = np.minimum(m, m[:, k, None] + m[None, k, :])
    return m


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """A finite set of points with an explicit distance table.

    ``coords`` is kept when the space was induced from coordinates, so the
    points can be reported by value.
    """

    matrix: np.ndarray
    coords: np.ndarray | None = None
    norm: str | None = None
    tol: float = field(default=1e-12, repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, copy=True)
        if m.dtype.kind not in "iuf":
            m = m.astype(float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise MetricError("distance matrix must be square and nonempty")
        if not np.all(np.isfinite(m)):
            raise MetricError("distances must be finite")
        scale = max(1.0, float(np.max(np.abs(m))))
        slack = self.tol * scale
        if np.any(np.diag(m) != 0):
            raise MetricError("dist(x, x) must be 0")
        if np.any(m < 0):
            raise MetricError("distances must be nonnegative")
        off = ~np.eye(m.shape[0], dtype=bool)
        if np.any(m[off] <= 0):
            i, j = np.argwhere((m <= 0) & off)[0]
            raise MetricError(f"dist({i}, {j}) = 0 for distinct points")
        if np.any(m != m.T):
            i, j = np.argwhere(m != m.T)[0]
            raise MetricError(f"asymmetric: dist({i}, {j}) != dist({j}, {i})")
        for y in range(m.shape[0]):
            excess = m - (m[:, y, None] + m[None, y, :])
            if np.any(excess > slack):
                x, z = np.unravel_index(int(np.argmax(excess)), excess.shape)
                raise MetricError(
                    f"triangle inequality fails: dist({x}, {z}) > dist({x}, {y}) + dist({y}, {z})"
                )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_coords(cls, coords: Sequence[Sequence[float]] | Sequence[float], norm: str = "euclidean"):
        pts = np.asarray(coords, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise MetricError("coords must be a nonempty list of equal-length vectors")
        if norm not in NORMS:
            raise MetricError(f"unknown norm {norm!r}; expected one of {NORMS}")
        diff = np.abs(pts[:, None, :] - pts[None, :, :])
        m = np.sqrt(np.sum(diff**2, axis=-1)) if norm == "euclidean" else np.max(diff, axis=-1)
        if pts.shape[1] == 1:
            m = diff[..., 0]
        pts.setflags(write=False)
        return cls(m, coords=pts, norm=norm)

    @classmethod
    def on_line(cls, values: Iterable[float]):
        """Points of the real line with |x - y|."""
        return cls.from_coords([[float(v)] for v in values], norm="max")

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def d(self, x: int, y: int) -> float:
        return float(self.matrix[x, y])

    def label(self, x: int):
        if self.coords is None:
            return int(x)
        c = self.coords[x]
        return float(c[0]) if c.size == 1 else [float(v) for v in c]

    def index_of(self, value: float) -> int:
        """Index of the point of a 1-d coordinate space equal to ``value``."""
        if self.coords is None or self.coords.shape[1] != 1:
            raise ValueError("index_of needs a one-dimensional coordinate space")
        hits = np.flatnonzero(self.coords[:, 0] == value)
        if hits.size == 0:
            raise KeyError(value)
        return int(hits[0])

    def check_set(self, members: Iterable[int]) -> tuple[int, ...]:
        out = tuple(sorted({int(m) for m in members}))
        if not out:
            raise EmptySetError("empty set has no distance")
        if out[0] < 0 or out[-1] >= len(self):
            raise IndexError(f"point set {out} is not contained in a space of {len(self)} points")
        return out


def point_to_set_distance(space: FiniteMetricSpace, x: int, B: Iterable[int]) -> float:
    """d(x, B): the minimum of d(x, b) over b in B."""
    members = space.check_set(B)
    return float(np.min(space.matrix[x, list(members)]))


def directed_hausdorff(space: FiniteMetricSpace, A: Iterable[int], B: Iterable[int]) -> float:
    """max over a in A of d(a, B)."""
    a, b = list(space.check_set(A)), list(space.check_set(B))
    return float(np.max(np.min(space.matrix[np.ix_(a, b)], axis=1)))


def hausdorff(space: FiniteMetricSpace, A: Iterable[int], B: Iterable[int]) -> float:
    a, b = list(space.check_set(A)), list(space.check_set(B))
    block = space.matrix[np.ix_(a, b)]
    return float(max(np.max(np.min(block, axis=1)), np.max(np.min(block, axis=0))))


def subset_hausdorff_table(space: FiniteMetricSpace) -> np.ndarray:
    """Hausdorff distances between all nonempty subsets, indexed by bitmask.

    Row and column ``m`` (1 <= m < 2**n) hold the subset whose members are
    the set bits of ``m``; row/column 0 is unused and left at 0.  Built by
    dynamic programming over masks: d(x, B) and the directed distance each
    extend the value for ``mask`` without its lowest member.
    """
    n = len(space)
    if n > 16:
        raise ValueError("subset table is only practical for n <= 16")
    size = 1 << n
    dm = space.matrix
    to_set = np.zeros((n, size), dtype=dm.dtype)  # to_set[x, B] = d(x, B)
    for mask in range(1, size):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        to_set[:, mask] = dm[:, low] if rest == 0 else np.minimum(to_set[:, rest], dm[:, low])
    directed = np.zeros((size, size), dtype=dm.dtype)  # directed[A, B] = sup_{a in A} d(a, B)
    for mask in range(1, size):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        directed[mask] = to_set[low] if rest == 0 else np.maximum(directed[rest], to_set[low])
    table = np.maximum(directed, directed.T)
    table[0, :] = 0
    table[:, 0] = 0
    return table


def mask_members(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def random_space(rng: np.random.Generator, n: int, max_weight: int = 10) -> FiniteMetricSpace:
    """A random integer metric on ``n`` points.

    Candidate weights are drawn from 1..max_weight and repaired by metric
    closure instead of being rejected.
    """
    w = rng.integers(1, max_weight + 1, size=(n, n))
    w = np.triu(w, 1)
    w = w + w.T
    return FiniteMetricSpace(metric_closure(w))
