import numpy as np
import pytest

from src.autocorrelation import VanHoveSequence, autocorrelation_of
from src.diffraction import purity
from src.dynamics import (
    correlation,
    correlation_curve,
    dworkin_identity_report,
    eigenvalue_group_check,
    spectral_measure_zero_check,
    weyl_report,
    weyl_sum,
)
from src.errors import NotPurePoint
from src.generators import example, lattice
from src.geometry import Box
from src.measures import REAL_PLANE, TestFunction


TENT = TestFunction.tent(0.0, 0.5)


# =============================================================================
# CORRELATIONS
# =============================================================================

def test_correlation_at_zero_lag():
    # ∫ tent² over one period is 2h/3
    value = correlation(lattice(1.0), TENT, TENT, 0.0, Box.interval(0.0, 100.0))
    assert abs(value - 1.0 / 3.0) < 5e-3


def test_correlation_matches_curve():
    B = Box.interval(0.0, 100.0)
    curve = correlation_curve(lattice(1.0), TENT, TENT, 2.0, B)
    assert len(curve.ts) == 2 * 32 + 1
    for t in (0.0, 0.5, -1.25):
        index = int(round(t / 0.0625)) + 32
        assert abs(curve.values[index] - correlation(lattice(1.0), TENT, TENT, t, B)) < 1e-9


def test_curve_is_hermitian_and_tapered():
    curve = correlation_curve(lattice(1.0), TENT, TENT, 4.0, Box.interval(0.0, 200.0))
    assert np.allclose(curve.values[::-1], np.conj(curve.values), atol=1e-9)
    tapered = curve.tapered()
    assert abs(tapered[0]) < 1e-12
    assert tapered[len(tapered) // 2] == curve.at_zero()


def test_curve_needs_one_dimension():
    with pytest.raises(ValueError):
        correlation_curve(lattice((1.0, 1.0), group=REAL_PLANE), TestFunction.tent((0.0, 0.0), 0.5),
                          TestFunction.tent((0.0, 0.0), 0.5), 1.0, Box((0.0, 0.0), (10.0, 10.0)))


# =============================================================================
# DWORKIN IDENTITY
# =============================================================================

def test_dworkin_lattice():
    report = dworkin_identity_report(lattice(1.0), TENT, TENT, np.linspace(-5.0, 5.0, 21),
                                     VanHoveSequence.geometric(100.0, 2.0, 3))
    assert report.max_rel_error <= 5e-2
    assert len(report.correlations) == 21


def test_dworkin_fibonacci():
    report = dworkin_identity_report(example("fibonacci"), TENT, TENT, np.linspace(-5.0, 5.0, 21),
                                     VanHoveSequence.geometric(100.0, 2.0, 4))
    assert report.max_rel_error <= 5e-2


def test_dworkin_thue_morse_off_grid():
    # integer lags with step 0.3/8 take the direct correlation path
    phi = TestFunction.tent(0.0, 0.3)
    report = dworkin_identity_report(example("thue-morse"), phi, phi, np.arange(-4.0, 5.0),
                                     VanHoveSequence.geometric(100.0, 2.0, 4), step=0.3 / 8)
    assert report.max_rel_error <= 5e-2


# =============================================================================
# WEYL SUMS
# =============================================================================

def test_weyl_sum_lattice():
    B = Box.interval(0.0, 100.0)
    assert abs(weyl_sum(lattice(1.0), TENT, 0.0, B) - 0.5) < 1e-9
    # φ̂(1) = 0.5·sinc²(0.5) = 2/π²
    assert abs(weyl_sum(lattice(1.0), TENT, 1.0, B) - 2.0 / np.pi ** 2) < 1e-9


def test_weyl_sum_fibonacci_mean():
    gen = example("fibonacci")
    value = weyl_sum(gen, TENT, 0.0, Box.interval(0.0, 1000.0))
    assert abs(value - 0.5 * gen.density) < 1e-2


def test_weyl_report():
    seq = VanHoveSequence.geometric(100.0, 2.0, 3)
    hit = weyl_report(lattice(1.0), TENT, 1.0, seq)
    assert hit.accepted
    assert len(hit.moduli) == 4
    assert not weyl_report(lattice(1.0), TENT, 0.5, seq).accepted


# =============================================================================
# EIGENVALUE GROUP
# =============================================================================

def test_eigenvalue_group_lattice(lattice_spectrum):
    probes = [TestFunction.tent(0.0, 0.3), TestFunction.tent(0.0, 0.45)]
    report = eigenvalue_group_check(lattice_spectrum.with_purity(1.0), lattice(1.0), probes)
    assert sorted({round(k[0]) for k in report.accepted}) == [-2, -1, 0, 1, 2]
    assert report.negation_closed
    assert report.sum_accept_rate == 1.0
    assert report.closure_rate == 1.0


def test_eigenvalue_group_fibonacci(fibonacci_spectrum):
    gen = example("fibonacci")
    comb = gen.produce(Box.from_list(fibonacci_spectrum.scan["box"]))
    value = purity(autocorrelation_of(comb, 0.0, 2.0), fibonacci_spectrum, TestFunction.tent(0.0, 0.5))
    phis = [TestFunction.tent(0.0, h) for h in (0.25, 0.5, 0.75)]
    report = eigenvalue_group_check(fibonacci_spectrum, gen, phis, top=5, purity_value=value)
    assert report.accepted
    assert report.negation_rate == 1.0
    assert report.sum_accept_rate >= 0.95


def test_eigenvalue_group_needs_purity(lattice_spectrum):
    with pytest.raises(NotPurePoint):
        eigenvalue_group_check(lattice_spectrum, lattice(1.0), [TENT])
    with pytest.raises(NotPurePoint):
        eigenvalue_group_check(lattice_spectrum, lattice(1.0), [TENT], purity_value=0.5)


# =============================================================================
# ATOM-FREE WINDOWS
# =============================================================================

def test_zero_window_between_lattice_atoms():
    seq = VanHoveSequence.geometric(100.0, 2.0, 3)
    report = spectral_measure_zero_check(lattice(1.0), TENT, Box.interval(0.25, 0.75), seq)
    assert report.max_lag == 80.0
    assert abs(report.norm - 1.0 / 3.0) < 5e-3
    assert abs(report.ratio) <= 0.01


def test_window_around_atom_matches_prediction(lattice_spectrum):
    seq = VanHoveSequence.geometric(100.0, 2.0, 3)
    report = spectral_measure_zero_check(lattice(1.0), TENT, Box.interval(0.75, 1.25), seq,
                                         spectrum=lattice_spectrum)
    assert report.predicted > 0
    assert abs(report.mass - report.predicted) / report.predicted <= 0.05
