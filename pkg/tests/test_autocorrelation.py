import numpy as np
import pytest

from src.autocorrelation import (
    Autocorrelation,
    EmpiricalHullMeasure,
    VanHoveSequence,
    autocorr_closed_formula,
    autocorr_van_hove,
    autocorrelation_of,
    boundary_ratio,
    boundary_series,
    cauchy_residuals,
    eberlein_boundary_check,
    kronecker_shifts,
    pairing,
    quadratic_form,
    thue_morse_eta,
)
from src.errors import NonFLCWithZeroBinning, RangeExceeded, SigmaNotNormalized
from src.generators import example, lattice, perturbed_lattice
from src.geometry import Box
from src.measures import TestFunction, WeightedComb


def unit_lattice(length=100.0):
    return lattice(1.0).produce(Box.interval(0.0, length))


# =============================================================================
# VAN HOVE SEQUENCES
# =============================================================================

def test_boundary_ratio():
    assert abs(boundary_ratio(Box.interval(0.0, 100.0), Box.interval(-1.0, 1.0)) - 0.04) < 1e-12
    assert boundary_ratio(Box.interval(0.0, 100.0), Box.interval(0.0, 0.0)) == 0.0


def test_geometric_sequence():
    seq = VanHoveSequence.geometric(base=10.0, factor=2.0, n_max=3)
    assert len(seq) == 4
    assert seq.largest == Box.interval(0.0, 80.0)
    ratios = seq.ratios()
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_sequence_must_increase():
    with pytest.raises(ValueError):
        VanHoveSequence((Box.interval(0.0, 10.0), Box.interval(0.0, 10.0)))


# =============================================================================
# FINITE-VOLUME AUTOCORRELATION
# =============================================================================

def test_lattice_autocorrelation():
    gamma = autocorrelation_of(unit_lattice(), 0.0, 3.0)
    assert gamma.lattice_spacing == 1.0
    assert len(gamma) == 7
    assert np.allclose(gamma.eta([0.0, 1.0, -2.0, 3.0]), [1.0, 0.99, 0.98, 0.97])
    assert gamma.eta([0.5])[0] == 0
    assert gamma.hermitian_defect() < 1e-12


def test_fibonacci_autocorrelation():
    comb = example("fibonacci").produce(Box.interval(0.0, 2000.0))
    gamma = autocorrelation_of(comb, 0.0, 4.0)
    assert gamma.lattice_spacing is None
    assert abs(gamma.eta([0.0])[0] - comb.density()) < 1e-12
    assert gamma.hermitian_defect() < 1e-9
    # no Fibonacci distance lies strictly between 0 and 1
    short = np.abs(gamma.support[:, 0]) < 0.9
    assert gamma.support[short, 0].tolist() == [0.0]


def test_binned_autocorrelation_on_perturbed_lattice():
    comb = perturbed_lattice(1.0, 0.1, seed=2).produce(Box.interval(0.0, 1000.0))
    gamma = autocorrelation_of(comb, 0.05, 2.0)
    assert abs(gamma.eta([0.0])[0] - comb.density()) < 1e-12
    assert gamma.hermitian_defect() < 1e-12


def test_non_flc_with_zero_binning():
    comb = perturbed_lattice(1.0, 0.2, seed=1).produce(Box.interval(0.0, 1000.0))
    with pytest.raises(NonFLCWithZeroBinning):
        autocorrelation_of(comb, 0.0, 5.0)


def test_negative_epsilon():
    with pytest.raises(ValueError):
        autocorrelation_of(unit_lattice(), -0.1, 1.0)


def test_empty_comb():
    gamma = autocorrelation_of(WeightedComb.empty(Box.interval(0.0, 10.0)), 0.0, 1.0)
    assert len(gamma) == 0
    assert gamma.hermitian_defect() == 0.0


def test_worker_count_does_not_change_result():
    comb = example("fibonacci").produce(Box.interval(0.0, 6000.0))
    single = autocorrelation_of(comb, 0.0, 3.0, workers=1)
    pooled = autocorrelation_of(comb, 0.0, 3.0, workers=4)
    assert np.array_equal(single.support, pooled.support)
    assert np.array_equal(single.coefficients, pooled.coefficients)


def test_thue_morse_matches_recursion():
    comb = example("thue-morse").produce(Box.interval(0.0, 2.0 ** 14))
    gamma = autocorrelation_of(comb, 0.0, 4.0)
    assert np.allclose(np.real(gamma.eta(np.arange(5.0))), thue_morse_eta(4), atol=1e-2)


def test_thue_morse_eta_values():
    assert np.allclose(thue_morse_eta(4), [1.0, -1 / 3, -1 / 3, 1 / 3, -1 / 3])


def test_restricted():
    gamma = autocorrelation_of(unit_lattice(), 0.0, 3.0).restricted(1.0)
    assert len(gamma) == 3
    assert gamma.range == 1.0


# =============================================================================
# VAN HOVE LIMITS
# =============================================================================

def test_van_hove_residuals_shrink():
    seq = VanHoveSequence.geometric(base=100.0, factor=2.0, n_max=3)
    sequence = autocorr_van_hove(lattice(1.0), seq, 0.0, 2.0)
    assert [g.n for g in sequence] == [0, 1, 2, 3]
    assert np.allclose(cauchy_residuals(sequence), [0.01, 0.005, 0.0025])


def test_van_hove_range_exceeded():
    seq = VanHoveSequence.geometric(base=10.0, factor=2.0, n_max=2)
    with pytest.raises(RangeExceeded):
        autocorr_van_hove(lattice(1.0), seq, 0.0, 11.0)


# =============================================================================
# BOUNDARY TERMS
# =============================================================================

def test_lattice_boundary_term():
    phi = TestFunction.tent(0.0, 1.5)
    value = eberlein_boundary_check(lattice(1.0), lattice(1.0), Box.interval(0.0, 100.0), phi)
    assert abs(value - (2.0 / 3.0) / 100.0) < 1e-12


def test_boundary_series_decreases():
    seq = VanHoveSequence.geometric(base=50.0, factor=2.0, n_max=4)
    fit = boundary_series(lattice(1.0), lattice(1.0), seq, TestFunction.tent(0.0, 1.5))
    assert fit.decreasing
    assert len(fit.values) == 3
    assert abs(fit.constant - 1.0 / 9.0) < 1e-12


@pytest.mark.parametrize("name", ["lattice", "fibonacci", "thue-morse"])
def test_boundary_series_on_canonical_examples(name):
    gen = lattice(1.0) if name == "lattice" else example(name)
    seq = VanHoveSequence.geometric(base=100.0, factor=2.0, n_max=8)
    fit = boundary_series(gen, gen, seq, TestFunction.tent(0.0, 1.5))
    assert len(fit.values) == 7
    assert fit.decreasing
    assert all(v <= fit.constant * r * (1 + 1e-9) for v, r in zip(fit.values, fit.ratios))


def test_boundary_series_allows_ties_and_zeros():
    # gaps of 1 never meet a tent of halfwidth 0.5 across the boundary
    seq = VanHoveSequence.geometric(base=50.0, factor=2.0, n_max=4)
    fit = boundary_series(lattice(1.0), lattice(1.0), seq, TestFunction.tent(0.0, 0.5))
    assert fit.values == [0.0, 0.0, 0.0]
    assert fit.decreasing


# =============================================================================
# CLOSED FORMULA
# =============================================================================

def test_closed_formula_single_sample():
    sample = lattice(1.0).produce(Box.interval(-3.0, 3.0))
    m = EmpiricalHullMeasure.of_samples([sample])
    sigma = TestFunction.tent(0.0, 1.0).normalized()
    value = autocorr_closed_formula(m, sigma, TestFunction.tent(0.0, 1.0))
    assert abs(value - 1.0) < 1e-12


def test_closed_formula_from_generator():
    m = EmpiricalHullMeasure.from_generator(lattice(1.0), 50.0, 100, Box.interval(-3.0, 3.0))
    assert m.size == 100
    sigma = TestFunction.tent(0.0, 1.0).normalized()
    value = autocorr_closed_formula(m, sigma, TestFunction.tent(0.0, 1.0))
    assert abs(value - 1.0) < 1e-9


def test_kronecker_shifts():
    shifts = kronecker_shifts(1000)
    assert shifts.shape == (1000, 1)
    assert abs(shifts[0, 0] - (5 ** 0.5 - 1) / 2) < 1e-12
    assert np.all((shifts >= 0.0) & (shifts < 1.0))
    # every tenth of [0, 1) gets its share
    counts = np.histogram(shifts[:, 0], bins=10, range=(0.0, 1.0))[0]
    assert counts.min() >= 95 and counts.max() <= 105
    assert kronecker_shifts(10, dim=2).shape == (10, 2)


@pytest.mark.parametrize("name", ["lattice", "fibonacci"])
def test_closed_formula_does_not_depend_on_sigma(name):
    gen = lattice(1.0) if name == "lattice" else example(name)
    m = EmpiricalHullMeasure.from_generator(gen, 4000.0, 40000, Box.interval(-6.0, 6.0))
    tent = TestFunction.tent(0.0, 1.0).normalized()
    bump = TestFunction.raised_cosine(0.0, 0.7).normalized()
    rng = np.random.default_rng(11)
    for center, halfwidth in zip(rng.uniform(-2.0, 2.0, 20), rng.uniform(0.6, 1.5, 20)):
        phi = TestFunction.tent(center, halfwidth)
        a = autocorr_closed_formula(m, tent, phi)
        b = autocorr_closed_formula(m, bump, phi)
        assert abs(a - b) / abs(a) <= 1e-3, (center, halfwidth, a, b)


def test_closed_formula_matches_van_hove():
    gamma = autocorrelation_of(unit_lattice(10000.0), 0.0, 2.0)
    phi = TestFunction.tent(0.0, 1.5)
    m = EmpiricalHullMeasure.of_samples([lattice(1.0).produce(Box.interval(-3.0, 3.0))])
    closed = autocorr_closed_formula(m, TestFunction.tent(0.0, 1.0).normalized(), phi)
    van_hove = np.sum(gamma.coefficients * phi(gamma.support))
    assert abs(closed - 5.0 / 3.0) < 1e-12
    assert abs(closed - van_hove) / abs(van_hove) < 1e-2


def test_sigma_must_be_normalized():
    m = EmpiricalHullMeasure.of_samples([lattice(1.0).produce(Box.interval(-3.0, 3.0))])
    with pytest.raises(SigmaNotNormalized):
        autocorr_closed_formula(m, TestFunction.tent(0.0, 2.0), TestFunction.tent())


# =============================================================================
# PAIRING
# =============================================================================

def test_delta_pairing():
    phi = TestFunction.tent(0.0, 1.0)
    gamma = Autocorrelation.delta(R=3.0)
    assert abs(pairing(gamma, phi, phi, 0.0) - 2.0 / 3.0) < 1e-12
    assert abs(pairing(Autocorrelation.delta(R=5.0), phi, phi, 2.0)) < 1e-12


def test_pairing_range_exceeded():
    phi = TestFunction.tent(0.0, 1.0)
    with pytest.raises(RangeExceeded):
        pairing(Autocorrelation.delta(R=1.0), phi, phi, 0.0)


def test_lattice_pairing():
    gamma = autocorrelation_of(unit_lattice(1000.0), 0.0, 3.0)
    phi = TestFunction.tent(0.0, 1.0)
    # (φ̃ ∗ φ)(0) = 2/3 and (φ̃ ∗ φ)(±1) = 1/6
    assert abs(pairing(gamma, phi, phi, 0.0) - (2.0 / 3.0 + 2 * 0.999 / 6.0)) < 1e-12


def test_quadratic_form_is_nonnegative():
    gamma = autocorrelation_of(example("thue-morse").produce(Box.interval(0.0, 4096.0)), 0.0, 6.0)
    rng = np.random.default_rng(0)
    ts = np.linspace(-2.0, 2.0, 9)
    phi = TestFunction.tent(0.0, 0.5)
    for _ in range(5):
        c = rng.normal(size=9) + 1j * rng.normal(size=9)
        assert quadratic_form(gamma, phi, ts, c) >= -1e-9
