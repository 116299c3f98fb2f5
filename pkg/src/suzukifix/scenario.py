"""Scenario files: strict JSON parsing with field-level diagnostics.

A scenario holds either a metric space with a multimap::

    {"space": {"matrix": [[...]]} | {"coords": [[...]], "norm": "euclidean" | "max"},
     "multimap": {"images": [[point_index, ...], ...]},
     "gauge": {...}}

or a dynamic program::

    {"dp": {"states": [...], "decisions": [...], "g": [[...]],
            "G": {"family": "affine" | "tanh", "beta": b, "c": [[...]]},
            "transition": [[state_index, ...], ...]},
     "gauge": {...}}

``gauge`` is optional; an optional ``name`` string is carried through.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .contraction import MultiMap
from .dp import Coupling, DPProblem
from .gauge import Gauge, GaugeError
from .metric import FiniteMetricSpace, MetricError


class ScenarioError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass
class Scenario:
    name: str | None
    gauge: Gauge | None
    multimap: MultiMap | None = None
    dp: DPProblem | None = None

    @property
    def kind(self) -> str:
        return "dp" if self.dp is not None else "multimap"


def _number(v: Any, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ScenarioError(where, f"expected a finite number, got {v!r}")
    return float(v)


def _index(v: Any, where: str, size: int) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(where, f"expected an integer index, got {v!r}")
    if not 0 <= v < size:
        raise ScenarioError(where, f"index {v} out of range 0..{size - 1}")
    return v


def _list(v: Any, where: str, length: int | None = None) -> list:
    if not isinstance(v, list):
        raise ScenarioError(where, f"expected a list, got {type(v).__name__}")
    if length is not None and len(v) != length:
        raise ScenarioError(where, f"expected {length} entries, got {len(v)}")
    return v


def _object(v: Any, where: str, allowed: set[str], required: set[str] = frozenset()) -> dict:
    if not isinstance(v, dict):
        raise ScenarioError(where, "expected an object")
    extra = set(v) - allowed
    if extra:
        raise ScenarioError(where, f"unknown field(s) {sorted(extra)}")
    missing = set(required) - set(v)
    if missing:
        raise ScenarioError(where, f"missing field(s) {sorted(missing)}")
    return v


def _table(v: Any, where: str, rows: int | None = None, cols: int | None = None) -> list[list[float]]:
    out = []
    for i, row in enumerate(_list(v, where, rows)):
        row = _list(row, f"{where}[{i}]", cols)
        out.append([_number(x, f"{where}[{i}][{j}]") for j, x in enumerate(row)])
        cols = len(row) if cols is None else cols
    if not out or not out[0]:
        raise ScenarioError(where, "table must be nonempty")
    return out


def _grid(v: Any, where: str) -> list:
    items = _list(v, where)
    if not items:
        raise ScenarioError(where, "must be nonempty")
    for i, item in enumerate(items):
        if isinstance(item, list):
            for j, x in enumerate(item):
                _number(x, f"{where}[{i}][{j}]")
        else:
            _number(item, f"{where}[{i}]")
    return items


def _space(v: Any) -> FiniteMetricSpace:
    block = _object(v, "space", {"matrix", "coords", "norm"})
    if ("matrix" in block) == ("coords" in block):
        raise ScenarioError("space", "give exactly one of 'matrix' or 'coords'")
    try:
        if "matrix" in block:
            if "norm" in block:
                raise ScenarioError("space.norm", "only applies to 'coords'")
            m = _table(block["matrix"], "space.matrix")
            _list(block["matrix"], "space.matrix", len(m[0]))
            return FiniteMetricSpace(m)
        coords = _table(block["coords"], "space.coords")
        norm = block.get("norm", "euclidean")
        if norm not in ("euclidean", "max"):
            raise ScenarioError("space.norm", f"expected 'euclidean' or 'max', got {norm!r}")
        return FiniteMetricSpace.from_coords(coords, norm)
    except MetricError as exc:
        raise ScenarioError("space", str(exc)) from None


def _multimap(v: Any, space: FiniteMetricSpace) -> MultiMap:
    block = _object(v, "multimap", {"images"}, {"images"})
    n = len(space)
    images = []
    for i, im in enumerate(_list(block["images"], "multimap.images", n)):
        im = _list(im, f"multimap.images[{i}]")
        if not im:
            raise ScenarioError(f"multimap.images[{i}]", "image must be nonempty")
        images.append(tuple(_index(p, f"multimap.images[{i}][{j}]", n) for j, p in enumerate(im)))
    return MultiMap(space, tuple(images))


def _dp(v: Any) -> DPProblem:
    keys = {"states", "decisions", "g", "G", "transition"}
    block = _object(v, "dp", keys, keys)
    states = _grid(block["states"], "dp.states")
    decisions = _grid(block["decisions"], "dp.decisions")
    ns, nd = len(states), len(decisions)
    g = _table(block["g"], "dp.g", ns, nd)
    gb = _object(block["G"], "dp.G", {"family", "beta", "c"}, {"family", "beta"})
    if gb["family"] not in ("affine", "tanh"):
        raise ScenarioError("dp.G.family", f"expected 'affine' or 'tanh', got {gb['family']!r}")
    beta = _number(gb["beta"], "dp.G.beta")
    c = _table(gb["c"], "dp.G.c", ns, nd) if "c" in gb else [[0.0] * nd for _ in range(ns)]
    trans = []
    for i, row in enumerate(_list(block["transition"], "dp.transition", ns)):
        row = _list(row, f"dp.transition[{i}]", nd)
        trans.append([_index(t, f"dp.transition[{i}][{j}]", ns) for j, t in enumerate(row)])
    return DPProblem(g, Coupling(gb["family"], beta, c), trans, states=states, decisions=decisions)


def parse_scenario(data: Any) -> Scenario:
    top = _object(data, "scenario", {"name", "space", "multimap", "dp", "gauge"})
    name = top.get("name")
    if name is not None and not isinstance(name, str):
        raise ScenarioError("name", "expected a string")
    gauge = None
    if "gauge" in top:
        try:
            gauge = Gauge.from_dict(top["gauge"])
        except GaugeError as exc:
            raise ScenarioError("gauge", str(exc)) from None
    has_mm = "space" in top or "multimap" in top
    if has_mm == ("dp" in top):
        raise ScenarioError("scenario", "give exactly one of {space + multimap} or {dp}")
    if "dp" in top:
        return Scenario(name, gauge, dp=_dp(top["dp"]))
    if "space" not in top or "multimap" not in top:
        raise ScenarioError("scenario", "'space' and 'multimap' must appear together")
    space = _space(top["space"])
    return Scenario(name, gauge, multimap=_multimap(top["multimap"], space))


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(str(path), exc.strerror or str(exc)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return parse_scenario(data)


def multimap_to_dict(T: MultiMap) -> dict:
    sp = T.space
    if sp.coords is not None:
        space = {"coords": sp.coords.tolist(), "norm": sp.norm}
    else:
        space = {"matrix": sp.matrix.tolist()}
    return {"space": space, "multimap": {"images": [list(im) for im in T.images]}}
