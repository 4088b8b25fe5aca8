import numpy as np
import pytest

from horokit import domains as dm
from horokit import sequences as sq


def test_radial_terms():
    D = dm.unit_disc()
    s = sq.radial(D, [1j])
    assert s.point(1) == pytest.approx([0])
    assert s.point(4) == pytest.approx([0.75j])
    with pytest.raises(sq.SequenceError):
        s.point(0)


def test_radial_on_unbounded_domain_starts_at_center():
    S = dm.siegel()
    s = sq.radial(S, [0, 0])
    assert s.point(2) == pytest.approx([0.5, 0])


def test_bidisc_families():
    assert sq.bidisc_w1(1j, -1).point(2) == pytest.approx([0.5j, -0.5])
    assert sq.bidisc_w2(1).point(10) == pytest.approx([0.9, 0])
    assert sq.bidisc_w3(-1).point(10) == pytest.approx([0, -0.9])
    with pytest.raises(sq.SequenceError):
        sq.bidisc_w2(0.5)


def test_interleaving_order():
    s = sq.interleaved(sq.bidisc_w3(1), sq.bidisc_w2(1))
    pts = s.points([1, 2, 3, 4])
    np.testing.assert_allclose(pts[2], sq.bidisc_w3(1).point(2))
    np.testing.assert_allclose(pts[3], sq.bidisc_w2(1).point(2))


def test_subsequence_indexing():
    s = sq.bidisc_w2(1)
    sub = s.subsequence(3, 2)
    np.testing.assert_allclose(sub.points([1, 2]), s.points([2, 5]))


def test_custom_coordinate_spec():
    d = dm.polydisc(2)
    s = sq.custom(d, coords=[{"p": 1, "c": 1, "power": 2}, {"p": [0, 1], "cycle": [1, -1]}])
    u = s.point(2)
    assert u[0] == pytest.approx(0.75)
    assert u[1] == pytest.approx(0.5j * 1)  # cycle index 2 mod 2 = 0


def test_terms_stay_inside(rng):
    d = dm.polydisc(2)
    s = sq.custom(d, coords=[{"p": 1, "twist": 3.0}, {"p": 1j, "power": 0.5}])
    ns = rng.integers(1, 1 << 20, size=200)
    assert dm.membership_many(d, s.points(ns)).all()


@pytest.mark.parametrize("seq", [
    sq.radial(dm.unit_ball(2), [0, 1j]),
    sq.bidisc_w1(1, 1j),
    sq.interleaved(sq.bidisc_w3(1), sq.bidisc_w2(1)),
    sq.custom(dm.polydisc(2), coords=[{"p": 1, "c": 2.0}, {"p": -1, "twist": 1.0}]),
])
def test_serialization_round_trip(seq):
    back = sq.from_dict(seq.to_dict())
    ns = np.array([1, 7, 1000])
    np.testing.assert_allclose(back.points(ns), seq.points(ns))
    assert back.describe() == seq.describe()


def test_callable_sequence_not_serializable():
    s = sq.custom(dm.unit_disc(), fn=lambda n: (1 - 1 / n)[:, None] + 0j)
    with pytest.raises(sq.SequenceError):
        s.to_dict()


def test_bad_descriptor():
    with pytest.raises(sq.SequenceError):
        sq.from_dict({"label": "Nope", "domain": {"kind": "UnitDisc", "dim": 1}})
    with pytest.raises(sq.SequenceError):
        sq.from_dict({"label": "Radial", "params": {}, "domain": {"kind": "UnitDisc", "dim": 1}})


def test_limit_points():
    D = dm.unit_disc()
    assert len(sq.limit_points(sq.radial(D, [1]))) == 1
    cyc = sq.custom(D, coords=[{"p": 1, "cycle": [1, 1j, -1, -1j]}])
    pts = sq.limit_points(cyc)
    assert len(pts) == 4
    assert all(abs(abs(p[0]) - 1) < 1e-12 for p in pts)


def test_residue_classes_detects_period_two():
    s = sq.interleaved(sq.bidisc_w3(1), sq.bidisc_w2(1))
    k, lims = sq.residue_classes(s, 1024)
    assert k == 2
    got = sorted(tuple(np.round(c, 6)) for _, c in lims)
    assert got == [(0, 1), (1, 0)]


def test_non_convergent_sequence():
    D = dm.unit_disc()
    spiral = sq.custom(D, fn=lambda n: ((1 - 1 / n) * np.exp(1j * np.log(n)))[:, None])
    with pytest.raises(sq.SequenceError):
        sq.limit_points(spiral)
