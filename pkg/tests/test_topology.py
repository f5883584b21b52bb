import numpy as np
import pytest

from src.errors import EmptyBasis, EmptyCoverWarning, KOutsideWindow, WindowTooSmall
from src.generators import lattice, perturbed_lattice
from src.geometry import Box, BoxUnion
from src.measures import WeightedComb
from src.topology import (
    FellBasisElement,
    PointSetWindowed,
    UKVParams,
    delta_counterexample,
    fell_lemma_trials,
    fell_refines_ukv,
    flc_check,
    patch_classes,
    repetitivity_scan,
    ukv_refines_fell,
    ukv_related,
    vague_family,
    vague_metric,
)

LINE = Box.interval(-2.0, 2.0)


def lattice_points(length=100.0):
    return PointSetWindowed.from_comb(lattice(1.0).produce(Box.interval(0.0, length)))


# =============================================================================
# POINT SETS AND U_{K,V}
# =============================================================================

def test_point_set_rejects_outside_points():
    with pytest.raises(ValueError):
        PointSetWindowed([3.0], LINE)


def test_point_set_translate():
    moved = PointSetWindowed([0.0, 1.0], LINE).translate(0.5)
    assert moved.points[:, 0].tolist() == [0.5, 1.5]
    assert moved.window == Box.interval(-1.5, 2.5)


def test_ukv_params_validation():
    with pytest.raises(ValueError):
        UKVParams(Box.interval(-1.0, 1.0), Box.interval(0.0, 1.0))


def test_ukv_singletons():
    K = BoxUnion.of(Box.interval(-1.0, 1.0))
    P1 = PointSetWindowed([0.0], LINE)
    P2 = PointSetWindowed([0.1], LINE)
    assert ukv_related(P1, P2, UKVParams(K, Box.symmetric(0.2)))
    assert not ukv_related(P1, P2, UKVParams(K, Box.symmetric(0.05)))


def test_ukv_ignores_points_outside_K():
    K = BoxUnion.of(Box.interval(-1.0, 1.0))
    P1 = PointSetWindowed([0.0, 1.5], LINE)
    P2 = PointSetWindowed([0.0], LINE)
    assert ukv_related(P1, P2, UKVParams(K, Box.symmetric(0.1)))


def test_ukv_K_outside_window():
    with pytest.raises(KOutsideWindow):
        ukv_related(
            PointSetWindowed([0.0], LINE), PointSetWindowed([0.0], LINE),
            UKVParams(Box.interval(-3.0, 3.0), Box.symmetric(0.1)),
        )


# =============================================================================
# VAGUE METRIC
# =============================================================================

def test_vague_family_order():
    family = vague_family(5)
    assert [phi.center[0] for phi in family[:3]] == [-1.0, 0.0, 1.0]
    assert family[3].halfwidth == (0.5,)


def test_vague_metric_properties():
    mu = WeightedComb.from_mapping({0.0: 1, 0.5: -1}, LINE)
    nu = WeightedComb.from_mapping({0.25: 1}, LINE)
    assert vague_metric(mu, mu, 20) == 0.0
    assert abs(vague_metric(mu, nu, 20) - vague_metric(nu, mu, 20)) < 1e-15
    assert vague_metric(mu, nu, 10) <= vague_metric(mu, nu, 20)


def test_delta_counterexample():
    rows = delta_counterexample([10, 100])
    last = rows[-1]
    assert last["ukv_related"]
    assert last["vague_to_2delta0"] < last["vague_to_delta0"]
    assert rows[1]["vague_to_2delta0"] < rows[0]["vague_to_2delta0"]


# =============================================================================
# FELL CONVERSIONS
# =============================================================================

def test_fell_refines_ukv_singleton():
    H = PointSetWindowed([0.0], LINE)
    element = fell_refines_ukv(H, UKVParams(Box.interval(-1.0, 1.0), Box.symmetric(0.4)))
    assert len(element.F) == 1
    assert element.F[0] == Box.interval(-0.2, 0.2)
    assert element.contains(H)
    assert not element.contains(PointSetWindowed([0.0, 0.5], LINE))


def test_fell_refines_ukv_empty_cover():
    H = PointSetWindowed([1.5], LINE)
    with pytest.warns(EmptyCoverWarning):
        element = fell_refines_ukv(H, UKVParams(Box.interval(-0.5, 0.5), Box.symmetric(0.2)))
    assert element.F == ()


def test_fell_refines_ukv_window_too_small():
    with pytest.raises(WindowTooSmall):
        fell_refines_ukv(PointSetWindowed([0.0], LINE), UKVParams(Box.interval(-1.0, 1.9), Box.symmetric(0.4)))


def test_ukv_refines_fell_construction():
    element = FellBasisElement(BoxUnion.of(Box.interval(-1.0, 0.0)), (Box.interval(-1.0, 1.0),))
    H, u = ukv_refines_fell(element)
    assert H.points[:, 0].tolist() == [0.5]
    assert abs(u.radius[0] - 0.45) < 1e-12
    assert element.contains(H)


def test_ukv_refines_fell_empty_basis():
    element = FellBasisElement(BoxUnion.of(Box.interval(-1.0, 2.0)), (Box.interval(0.0, 1.0),))
    with pytest.raises(EmptyBasis):
        ukv_refines_fell(element)


def test_fell_lemma_trials_both_directions():
    for direction in ("fell-refines-ukv", "ukv-refines-fell"):
        report = fell_lemma_trials(direction, 500, np.random.default_rng(0))
        assert report.samples == 500
        assert report.passed, report


def test_fell_lemma_trials_unknown_direction():
    with pytest.raises(ValueError):
        fell_lemma_trials("sideways", 1, np.random.default_rng(0))


# =============================================================================
# REPETITIVITY & FLC
# =============================================================================

def test_lattice_repetitivity():
    u = UKVParams(Box.interval(10.0, 12.0), Box.symmetric(0.1))
    report = repetitivity_scan(lattice_points(), u, np.arange(0.0, 20.0, 0.25), R=1.5)
    assert report.dense
    assert report.witnesses[:, 0].tolist() == [float(n) for n in range(20)]
    assert report.max_gap == 1.0


def test_repetitivity_window_too_small():
    u = UKVParams(Box.interval(10.0, 12.0), Box.symmetric(0.1))
    with pytest.raises(WindowTooSmall):
        repetitivity_scan(lattice_points(), u, np.arange(0.0, 96.0, 1.0), R=1.5)


def test_lattice_has_one_patch_class():
    assert patch_classes(lattice_points(), 2.0, 1e-6) == 1
    report = flc_check(lattice_points(), 2.0, 1e-6)
    assert report.flc
    assert report.counts == [1, 1, 1, 1]


def test_random_perturbation_is_not_flc():
    P = PointSetWindowed.from_comb(perturbed_lattice(1.0, 0.2, seed=5).produce(Box.interval(0.0, 400.0)))
    report = flc_check(P, 2.0, 1e-6)
    assert not report.flc
    assert report.counts[-1] > report.counts[-2]
