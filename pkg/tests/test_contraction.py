import math

import numpy as np
import pytest

import oracles
from conftest import BUILTIN_GAUGES
from suzukifix.contraction import (
    CLASSES,
    MultiMap,
    PreconditionError,
    certify,
    min_r,
    parse_grid,
    phi,
    t_int,
    t_m,
    t_psi,
    verify_lemma21,
    verify_lemma22,
)
from suzukifix.corpus import constant_map, halving_grid, halving_map, identity_map, random_corpus
from suzukifix.gauge import Gauge
from suzukifix.metric import FiniteMetricSpace
from suzukifix.solver import iterate_multivalued


@pytest.fixture
def half_step():
    """Reals {0, 1/2, 1} with 1 -> 1/2 and 1/2, 0 -> 0."""
    space = FiniteMetricSpace.on_line([0.0, 0.5, 1.0])
    return MultiMap.single_valued(space, [0, 0, 1])


def test_phi_examples():
    assert phi(0.25) == 1.0
    assert phi(0.5) == 0.5
    assert phi(0.9) == pytest.approx(0.1, abs=1e-15)
    for bad in (-0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            phi(bad)


def test_majorant_examples(half_step):
    ident, lg = Gauge.identity(), Gauge.log()
    # x = 1, y = 0: max{1, 1/2, 0, (1 + 1/2)/2}
    assert t_int(half_step, ident, 2, 0) == 1.0
    assert t_m(half_step, 2, 0) == 1.0
    assert t_psi(half_step, lg, 2, 0) == pytest.approx(1.0 + math.log(2.0), abs=1e-15)
    # x = y a fixed point: every term vanishes
    assert t_int(half_step, lg, 0, 0) == 0.0
    assert t_psi(half_step, lg, 0, 0) == 0.0


def test_identity_gauge_collapses_majorants():
    for inst in random_corpus(20, seed=7):
        a = t_int(inst.T, Gauge.identity())
        assert np.array_equal(a, t_psi(inst.T, Gauge.identity()))
        assert np.array_equal(a, t_m(inst.T))


def test_singleton_space_passes_every_class():
    T = identity_map(FiniteMetricSpace([[0]]))
    for cls in CLASSES:
        for r in (0.0, 0.3, 0.9):
            assert certify(T, Gauge.log(), r, cls).passed


def test_halving_map_ciric():
    T = halving_map()
    assert certify(T, Gauge.identity(), 0.5, "ciric-integral").passed
    bad = certify(T, Gauge.identity(), 0.25, "ciric-integral")
    assert not bad.passed
    D = T.space.matrix.tolist()
    images = [list(im) for im in T.images]
    assert bad.violation_pairs() == oracles.brute_certify(D, images, "identity", 0.25, "ciric-integral")
    for v in bad.violations:
        assert v.lhs > v.rhs and v.premise is None


def test_zero_including_halving_grid_is_uncertifiable():
    # With 0 in the grid the bottom of the chain cannot contract whichever way
    # x/2 is rounded: the pair (2**-7, 2**-8) keeps H(Tx, Ty) = d(x, y) = T_M.
    space = FiniteMetricSpace.on_line([0.0] + [2.0**-k for k in range(9)])
    down = MultiMap.single_valued(space, [0] + [min(k + 2, 9) if k < 8 else 0 for k in range(9)])
    up = MultiMap.single_valued(space, [0] + [min(k + 2, 9) for k in range(9)])
    grid = parse_grid("0.05:0.95:0.05")
    for T in (down, up):
        for cls in CLASSES:
            assert min_r(T, Gauge.identity(), cls, grid).r is None


@pytest.mark.parametrize("cls", CLASSES)
@pytest.mark.parametrize("kind", ["identity", "log", "root"])
def test_certify_matches_brute_force(cls, kind):
    g = Gauge(kind)
    checked = 0
    for inst in random_corpus(40, seed=11):
        D = inst.T.space.matrix.tolist()
        images = [list(im) for im in inst.T.images]
        cert = certify(inst.T, g, inst.r, cls)
        assert cert.violation_pairs() == oracles.brute_certify(D, images, kind, inst.r, cls)
        checked += 1
    assert checked == 40


def test_certificate_bookkeeping():
    T = halving_map()
    cert = certify(T, Gauge.identity(), 0.5, "suzuki-integral")
    assert cert.pairs_checked == len(T) ** 2
    assert 0 < cert.pairs_premise_active <= cert.pairs_checked
    assert certify(T, Gauge.identity(), 0.5, "ciric-integral").pairs_premise_active == cert.pairs_checked
    d = cert.to_dict()
    assert d["class"] == "suzuki-integral" and d["passed"] is True


def test_plain_class_ignores_gauge():
    for inst in random_corpus(20, seed=5):
        a = certify(inst.T, Gauge.root(), inst.r, "suzuki-plain")
        b = certify(inst.T, Gauge.identity(), inst.r, "suzuki-plain")
        assert a.violation_pairs() == b.violation_pairs()
        assert a.gauge == Gauge.identity()


@pytest.mark.parametrize("g", BUILTIN_GAUGES, ids=lambda g: g.name)
def test_integral_and_psi_forms_agree_for_absolutely_continuous(g):
    # I(u) = psi(u) for every built-in gauge, so both Suzuki forms coincide.
    for inst in random_corpus(60, seed=2):
        a = certify(inst.T, g, inst.r, "suzuki-integral")
        b = certify(inst.T, g, inst.r, "suzuki-psi")
        assert a.passed == b.passed
        assert a.violation_pairs() == b.violation_pairs()


def test_ciric_pass_implies_suzuki_pass():
    for g in BUILTIN_GAUGES:
        for inst in random_corpus(60, seed=9):
            if certify(inst.T, g, inst.r, "ciric-integral").passed:
                assert certify(inst.T, g, inst.r, "suzuki-integral").passed


def test_unknown_class():
    with pytest.raises(ValueError, match="unknown contraction class"):
        certify(halving_map(), Gauge.identity(), 0.5, "banach")


def test_min_r_examples():
    T = halving_map()
    assert min_r(T, Gauge.identity(), "ciric-integral", parse_grid("0.1:0.9:0.1")).r == 0.5
    two = identity_map(FiniteMetricSpace.on_line([0.0, 1.0]))
    for cls in CLASSES:
        assert min_r(two, Gauge.identity(), cls, parse_grid("0:0.95:0.05")).r is None
    const = constant_map(halving_grid())
    assert min_r(const, Gauge.log(), "suzuki-integral", [0.0, 0.5]).r == 0.0
    with pytest.raises(ValueError):
        min_r(T, Gauge.identity(), "ciric-integral", [])
    with pytest.raises(ValueError):
        min_r(T, Gauge.identity(), "ciric-integral", [0.5, 0.1])


def test_min_r_matches_per_point_oracle():
    grid = parse_grid("0.05:0.95:0.05")
    for inst in random_corpus(15, seed=4):
        D = inst.T.space.matrix.tolist()
        images = [list(im) for im in inst.T.images]
        expect = next((r for r in grid if not oracles.brute_certify(D, images, "identity", r, "suzuki-integral")), None)
        assert min_r(inst.T, Gauge.identity(), "suzuki-integral", grid).r == expect


def test_parse_grid():
    assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert len(parse_grid("0.05:0.95:0.05")) == 19
    assert parse_grid("0.05:0.95:0.05")[9] == 0.5
    for bad in ("0:1", "a:b:c", "0:1:0", "1:0:0.1"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_lemma21_examples():
    const = constant_map(halving_grid())
    rep = verify_lemma21(const, Gauge.log(), 0.3)
    assert rep.passed and rep.checked == len(const)
    assert verify_lemma21(halving_map(), Gauge.identity(), 0.5).passed


def test_lemma21_has_teeth():
    # x -> x/2 has H(Tx, Tz) = d(x, z) / 2 for z in Tx, so any r < 1/2 bites.
    T = halving_map()
    for r in (0.5 - 1e-3, 0.25):
        rep = verify_lemma21(T, Gauge.identity(), r, require_certificate=False)
        assert rep.violations
    with pytest.raises(PreconditionError):
        verify_lemma21(T, Gauge.identity(), 0.25)


def test_lemma22_examples():
    const = constant_map(halving_grid(), p=3)
    rep = verify_lemma22(const, Gauge.identity(), 0.2, [0, 3], 3)
    assert rep.passed
    T = halving_map()
    for g in (Gauge.identity(), Gauge.log()):
        r = min_r(T, g, "suzuki-integral", parse_grid("0.05:0.95:0.05")).r
        trace = iterate_multivalued(T, g, r, 0)
        rep = verify_lemma22(T, g, r, trace.points, trace.points[-1])
        assert rep.passed and rep.checked == len(T) - 1
        assert len(rep.slack) == len(T) - 1
        assert all(s["slack"] >= -1e-8 for s in rep.slack)


def test_lemma22_rejects_bad_traces():
    T = halving_map()
    g = Gauge.identity()
    with pytest.raises(PreconditionError, match="converge"):
        verify_lemma22(T, g, 0.5, [0, 1], 1)
    with pytest.raises(PreconditionError, match="leaves"):
        verify_lemma22(T, g, 0.5, [0, 8], 8)


def test_lemmas_hold_on_certified_corpus():
    count = 0
    for g in BUILTIN_GAUGES:
        for inst in random_corpus(60, seed=13):
            if not certify(inst.T, g, inst.r, "suzuki-integral").passed:
                continue
            count += 1
            assert verify_lemma21(inst.T, g, inst.r).passed
            trace = iterate_multivalued(inst.T, g, inst.r, 0)
            if trace.fixed_point is not None:
                assert verify_lemma22(inst.T, g, inst.r, trace.points, trace.points[-1]).passed
    assert count > 20
