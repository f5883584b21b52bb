from fractions import Fraction

import numpy as np
import pytest

from src.autocorrelation import Autocorrelation, VanHoveSequence, autocorrelation_of
from src.diffraction import (
    Atom,
    DiffractionSpectrum,
    _direct_sums,
    approximate_unit_check,
    atom_estimate,
    atom_intensity,
    dyadic_report,
    grid_intensity,
    module_report,
    nufft_grid_sums,
    peak_scan,
    purity,
    spectral_mass_check,
    spectral_mass_window,
    structure_factor,
    wiener_cross_check,
    wiener_oracle,
)
from src.errors import AtomRejected, GridTooCoarse, RangeExceeded, ZeroDenominator
from src.generators import example, lattice
from src.geometry import Box
from src.measures import TestFunction, WeightedComb


# =============================================================================
# STRUCTURE FACTORS
# =============================================================================

def test_structure_factor_lattice():
    B = Box.interval(0.0, 100.0)
    assert abs(structure_factor(lattice(1.0), B, 0.0) - 100.0) < 1e-9
    assert structure_factor(lattice(1.0), B, 0.5) < 1e-9
    values = structure_factor(lattice(1.0), B, np.array([[0.0], [1.0]]))
    assert values.shape == (2,)


def test_atom_intensity_at_integer():
    comb = lattice(1.0).produce(Box.interval(0.0, 100.0))
    assert abs(atom_intensity(comb, 1.0)[0] - 1.0) < 1e-9


def test_nufft_matches_direct_sums():
    rng = np.random.default_rng(3)
    points = np.sort(rng.uniform(0.0, 500.0, 400)).reshape(-1, 1)
    weights = np.ones(400, dtype=complex)
    fast = nufft_grid_sums(points, weights, -1.0, 0.01, 200)
    ks = (-1.0 + 0.01 * np.arange(200)).reshape(-1, 1)
    exact = _direct_sums(points, weights, ks)
    assert np.max(np.abs(fast - exact)) < 1e-6 * len(points)


def test_lattice_fft_matches_direct():
    comb = lattice(1.0).produce(Box.interval(0.0, 64.0))
    fast, axes, method = grid_intensity(comb, -0.5, 1.0 / 256.0, 256)
    slow, _, _ = grid_intensity(comb, -0.5, 1.0 / 256.0, 256, method="direct")
    assert method == "lattice-fft"
    assert np.allclose(fast, slow, atol=1e-9)
    assert abs(axes[0][1] - axes[0][0] - 1.0 / 256.0) < 1e-12


# =============================================================================
# ATOMS
# =============================================================================

def test_atom_estimate_accepts_lattice_peak():
    seq = VanHoveSequence.geometric(100.0, 2.0, 3)
    assert atom_estimate(lattice(1.0), seq, 0.0).accepted
    rejected = atom_estimate(lattice(1.0), seq, 0.5)
    assert not rejected.accepted
    assert len(rejected.history) == 3


def test_poisson_summation(lattice_spectrum):
    ks = sorted(round(a.k[0], 6) for a in lattice_spectrum.atoms)
    assert ks == [-2.0, -1.0, 0.0, 1.0, 2.0]
    assert np.allclose(lattice_spectrum.intensities, 1.0, atol=1e-4)
    assert lattice_spectrum.scan["method"] == "lattice-fft"


def test_poisson_summation_on_long_box():
    spectrum = peak_scan(lattice(1.0), VanHoveSequence.geometric(2048.0, 2.0, 3), (-2.5, 2.5))
    assert spectrum.scan["box"] == [[0.0], [16384.0]]
    ks = [a.k[0] for a in spectrum.atoms]
    assert sorted(round(k) for k in ks) == [-2, -1, 0, 1, 2]
    assert all(abs(k - round(k)) <= 1e-6 for k in ks)
    assert np.allclose(spectrum.intensities, 1.0, atol=1e-2)


def test_peak_scan_needs_three_boxes():
    with pytest.raises(ValueError):
        peak_scan(lattice(1.0), VanHoveSequence.geometric(100.0, 2.0, 1), (-1.0, 1.0))


def test_peak_scan_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        peak_scan(lattice(1.0), VanHoveSequence.geometric(100.0, 2.0, 3), (-1.0, 1.0), coarse_step=1.0)


def test_thue_morse_has_no_atoms():
    gen = example("thue-morse")
    seq = VanHoveSequence.geometric(512.0, 2.0, 3)
    spectrum = peak_scan(gen, seq, (-0.5, 0.5))
    assert spectrum.atoms == ()
    assert spectrum.max_intensity() == 0.0
    gamma = autocorrelation_of(gen.produce(seq.largest), 0.0, 3.0)
    assert purity(gamma, spectrum, TestFunction.tent(0.0, 1.0)) == 0.0


def test_period_doubling_atoms_are_dyadic(period_doubling_spectrum):
    spectrum = period_doubling_spectrum
    assert len(spectrum.atoms) > 1
    assert all(match is not None for _, match in dyadic_report(spectrum))
    strongest = spectrum.atoms[0]
    assert abs(strongest.k[0]) < 1e-6
    assert abs(strongest.intensity - 25.0 / 36.0) < 1e-2
    assert dyadic_report(spectrum)[0][1] == Fraction(0)


# =============================================================================
# PURITY
# =============================================================================

def test_lattice_purity(lattice_spectrum):
    comb = lattice(1.0).produce(Box.from_list(lattice_spectrum.scan["box"]))
    gamma = autocorrelation_of(comb, 0.0, 3.0)
    value = purity(gamma, lattice_spectrum, TestFunction.tent(0.0, 1.0))
    assert 0.98 <= value <= 1.02


def test_purity_of_empty_spectrum():
    assert purity(Autocorrelation.delta(R=3.0), DiffractionSpectrum(()), TestFunction.tent(0.0, 1.0)) == 0.0


def test_purity_zero_denominator():
    gamma = autocorrelation_of(WeightedComb.empty(Box.interval(0.0, 10.0)), 0.0, 3.0)
    with pytest.raises(ZeroDenominator):
        purity(gamma, DiffractionSpectrum(()), TestFunction.tent(0.0, 1.0))


def test_fibonacci_purity_and_module(fibonacci_spectrum):
    comb = example("fibonacci").produce(Box.from_list(fibonacci_spectrum.scan["box"]))
    gamma = autocorrelation_of(comb, 0.0, 2.0)
    assert purity(gamma, fibonacci_spectrum, TestFunction.tent(0.0, 0.5)) >= 0.98
    assert all(match is not None for _, match in module_report(fibonacci_spectrum, "golden", bound=40))


# =============================================================================
# WIENER ORACLE
# =============================================================================

def test_wiener_oracle_range():
    gamma = autocorrelation_of(lattice(1.0).produce(Box.interval(0.0, 100.0)), 0.0, 3.0)
    assert abs(wiener_oracle(gamma, 3) - (1.0 + 2 * 0.99 ** 2 + 2 * 0.98 ** 2 + 2 * 0.97 ** 2) / 7) < 1e-12
    with pytest.raises(RangeExceeded):
        wiener_oracle(gamma, 5)


def test_wiener_oracle_needs_lattice():
    gamma = autocorrelation_of(example("fibonacci").produce(Box.interval(0.0, 200.0)), 0.0, 3.0)
    with pytest.raises(ValueError):
        wiener_oracle(gamma, 2)


def test_wiener_cross_check(lattice_spectrum):
    result = wiener_cross_check(lattice(1.0), lattice_spectrum, 256)
    assert abs(result["atom_sum"] - 1.0) < 1e-3
    assert result["rel_error"] <= 0.02


def test_wiener_cross_check_period_doubling(period_doubling_spectrum):
    result = wiener_cross_check(example("period-doubling"), period_doubling_spectrum, 256)
    assert result["atom_sum"] > 0
    assert result["rel_error"] <= 0.02


# =============================================================================
# SPECTRAL MASSES
# =============================================================================

def test_spectral_mass_check():
    seq = VanHoveSequence.geometric(100.0, 2.0, 3)
    phi = TestFunction.tent(0.0, 0.5)
    report = spectral_mass_check(lattice(1.0), phi, 1.0, seq)
    assert report.rel_error <= 0.05
    with pytest.raises(AtomRejected):
        spectral_mass_check(lattice(1.0), phi, 0.5, seq)


def test_spectral_mass_check_fibonacci_atoms(fibonacci_spectrum):
    gen = example("fibonacci")
    seq = VanHoveSequence.geometric(100.0, 2.0, 8)
    widths = (0.25, 0.5, 1.0)
    for atom in fibonacci_spectrum.top(4):
        errors = [spectral_mass_check(gen, TestFunction.tent(0.0, h), atom.k[0], seq).rel_error for h in widths]
        assert min(errors) <= 0.05, (atom.k, errors)


def test_approximate_unit_check(lattice_spectrum):
    rows = approximate_unit_check(lattice(1.0), None, [1.0, 0.5, 0.25], Box.interval(-1.5, 1.5),
                                  spectrum=lattice_spectrum)
    differences = [row["difference"] for row in rows]
    assert all(b <= a + 1e-12 for a, b in zip(differences, differences[1:]))
    assert differences[-1] < differences[0]


def test_spectral_mass_window(lattice_spectrum):
    phi = TestFunction.tent(0.0, 1.0)
    assert abs(spectral_mass_window(lattice_spectrum, phi, Box.interval(-0.5, 0.5)) - 1.0) < 1e-3
    assert spectral_mass_window(lattice_spectrum, phi, Box.interval(0.5, 1.5)) < 1e-3
    assert spectral_mass_window(lattice_spectrum, phi, Box.interval(5.0, 6.0)) == 0.0


# =============================================================================
# SPECTRUM
# =============================================================================

def test_spectrum_sorting():
    spectrum = DiffractionSpectrum((Atom((0.5,), 0.2, 0.0), Atom((0.0,), 1.0, 0.0)))
    assert spectrum.atoms[0].k == (0.0,)
    assert abs(spectrum.total_mass_proxy - 1.2) < 1e-12
    assert spectrum.top(1)[0].intensity == 1.0
    assert [a.k for a in spectrum.in_box(Box.interval(0.25, 1.0))] == [(0.5,)]
    assert spectrum.with_purity(0.9).purity == 0.9


def test_spectrum_rejects_negative_intensity():
    with pytest.raises(ValueError):
        DiffractionSpectrum((Atom((0.0,), -1.0, 0.0),))
