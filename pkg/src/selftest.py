"""
Self-Test
Small closed-form checks of every module plus a reduced-size Poisson
summation scan, reported one line per check in TAP style.
"""

import time
import warnings
from fractions import Fraction
from typing import Callable

import numpy as np
from colorama import Fore, Style

from src.autocorrelation import Autocorrelation, VanHoveSequence, autocorrelation_of, boundary_ratio, pairing
from src.diffraction import peak_scan
from src.generators import cut_and_project_1d, lattice
from src.geometry import Box, BoxUnion
from src.measures import (
    TestFunction,
    TranslationBound,
    WeightedComb,
    convolve_finite,
    evaluate,
    f_phi,
    is_translation_bounded,
    reflect,
    total_variation_on,
    translate,
)
from src.quadratic import GOLDEN, dyadic_membership, module_membership
from src.topology import PointSetWindowed, UKVParams, fell_refines_ukv, patch_classes, ukv_related, vague_metric
from src.utils.logger import ActionType, log_experiment

CHECKS: list[tuple[str, Callable[[], None]]] = []

_LINE = Box.interval(-2.0, 2.0)


def check(name: str):
    """Registers a check; it passes unless it raises."""
    def register(fn: Callable[[], None]) -> Callable[[], None]:
        CHECKS.append((name, fn))
        return fn
    return register


def _comb(mapping: dict, window: Box = _LINE) -> WeightedComb:
    return WeightedComb.from_mapping(mapping, window)


# =============================================================================
# MEASURES
# =============================================================================

@check("measures: tent peak value")
def _tent_peak():
    assert abs(evaluate(_comb({0.0: 1}), TestFunction.tent(0.0, 1.0)) - 1.0) < 1e-12


@check("measures: two-point evaluation")
def _two_points():
    assert abs(evaluate(_comb({0.0: 1, 0.5: 1}), TestFunction.tent(0.0, 1.0)) - 1.5) < 1e-12


@check("measures: empty measure evaluates to 0")
def _empty_measure():
    assert evaluate(WeightedComb.empty(_LINE), TestFunction.tent(0.0, 1.0)) == 0


@check("measures: total variation sums moduli")
def _total_variation():
    assert abs(total_variation_on(_comb({0.0: 1, 1.0: -1}), Box.interval(-0.5, 1.5)) - 2.0) < 1e-12
    assert abs(total_variation_on(_comb({0.0: 3j}), Box.interval(-1.0, 1.0)) - 3.0) < 1e-12


@check("measures: lattice translation bound")
def _translation_bound():
    comb = lattice(1.0).produce(Box.interval(0.0, 100.0))
    V = Box.interval(0.0, 1.5)
    assert is_translation_bounded(comb, TranslationBound(2.0, V), 0.05).bounded
    assert not is_translation_bounded(comb, TranslationBound(1.0, V), 0.05).bounded


@check("measures: translate and reflect")
def _translate_reflect():
    moved = translate(_comb({0.0: 1}), 2.0)
    assert np.allclose(moved.points[:, 0], [2.0]) and np.allclose(moved.weights, [1.0])
    mirrored = reflect(_comb({1.0: 1j}))
    assert np.allclose(mirrored.points[:, 0], [-1.0]) and np.allclose(mirrored.weights, [-1j])
    comb = _comb({0.25: 1 + 1j, -1.5: 2})
    assert reflect(reflect(comb)).allclose(comb)


@check("measures: f_phi vanishes at the support edge")
def _f_phi_edge():
    assert abs(f_phi(TestFunction.tent(0.0, 1.0), _comb({-1.0: 2}))) < 1e-12


@check("measures: delta convolution")
def _delta_convolution():
    product = convolve_finite(_comb({0.5: 2}), _comb({-1.25: 3j}))
    assert np.allclose(product.points[:, 0], [-0.75]) and np.allclose(product.weights, [6j])


# =============================================================================
# GENERATORS
# =============================================================================

@check("generators: unit lattice on [0, 4)")
def _unit_lattice():
    gen = lattice(1.0)
    comb = gen.produce(Box.interval(0.0, 4.0))
    assert np.allclose(comb.points[:, 0], [0, 1, 2, 3]) and np.allclose(comb.weights, 1.0)
    assert abs(gen.density - 1.0) < 1e-15


@check("generators: fibonacci gaps are units of Z[tau]")
def _fibonacci_gaps():
    comb = cut_and_project_1d("golden").produce(Box.interval(0.0, 200.0))
    gaps = np.unique(np.round(np.diff(comb.points[:, 0]), 12))
    scale = GOLDEN.root_gap
    for gap in gaps:
        match = module_membership(gap / scale, GOLDEN, bound=5, tol=1e-10 / scale)
        assert match is not None, f"gap {gap!r} is not in Z[tau]"
        assert abs(match.element.norm()) == 1, f"gap {gap!r} is not a unit"


# =============================================================================
# QUADRATIC ARITHMETIC
# =============================================================================

@check("quadratic: golden norm and dyadic membership")
def _quadratic():
    assert GOLDEN.element(0, 1).norm() == -1
    assert dyadic_membership(0.375) == Fraction(3, 8)


# =============================================================================
# TOPOLOGY
# =============================================================================

@check("topology: U_{K,V} on two singletons")
def _ukv_singletons():
    K = BoxUnion.of(Box.interval(-1.0, 1.0))
    P1 = PointSetWindowed([0.0], _LINE)
    P2 = PointSetWindowed([0.1], _LINE)
    assert ukv_related(P1, P2, UKVParams(K, Box.symmetric(0.2)))
    assert not ukv_related(P1, P2, UKVParams(K, Box.symmetric(0.05)))
    assert ukv_related(P1, P1, UKVParams(K, Box.symmetric(0.05)))


@check("topology: vague metric is a metric on samples")
def _vague_metric():
    mu = _comb({0.0: 1, 0.5: -1})
    nu = _comb({0.25: 1})
    assert vague_metric(mu, mu, 20) == 0.0
    assert abs(vague_metric(mu, nu, 20) - vague_metric(nu, mu, 20)) < 1e-15


@check("topology: Fell basis around {0}")
def _fell_singleton():
    element = fell_refines_ukv(PointSetWindowed([0.0], _LINE), UKVParams(Box.interval(-1.0, 1.0), Box.symmetric(0.4)))
    assert len(element.F) == 1
    assert np.allclose(element.F[0].lo, [-0.2]) and np.allclose(element.F[0].hi, [0.2])
    assert element.contains(PointSetWindowed([0.0], _LINE))


@check("topology: lattice has one patch class")
def _lattice_patches():
    P = PointSetWindowed.from_comb(lattice(1.0).produce(Box.interval(0.0, 100.0)))
    assert patch_classes(P, 2.0, 1e-6) == 1


# =============================================================================
# AUTOCORRELATION
# =============================================================================

@check("autocorrelation: degenerate probe has zero boundary")
def _boundary_probe():
    assert boundary_ratio(Box.interval(0.0, 100.0), Box.interval(0.0, 0.0)) == 0.0


@check("autocorrelation: eta(0) is the density")
def _eta_zero():
    gamma = autocorrelation_of(lattice(1.0).produce(Box.interval(0.0, 100.0)), 0.0, 2.0)
    assert abs(gamma.eta(np.zeros((1, 1)))[0] - 1.0) < 1e-12


@check("autocorrelation: delta pairing is the tent autocorrelation")
def _delta_pairing():
    phi = TestFunction.tent(0.0, 1.0)
    value = pairing(Autocorrelation.delta(R=3.0), phi, phi, 0.0)
    assert abs(value - 2.0 / 3.0) < 1e-12


# =============================================================================
# DIFFRACTION
# =============================================================================

@check("diffraction: Poisson summation on [0, 2^12)")
def _poisson():
    seq = VanHoveSequence.geometric(base=512.0, factor=2.0, n_max=3)
    spectrum = peak_scan(lattice(1.0), seq, (-2.5, 2.5))
    ks = spectrum.ks[:, 0]
    assert np.all(np.abs(ks - np.round(ks)) <= 1e-6), f"off-integer atoms {ks}"
    for n in range(-2, 3):
        near = np.abs(ks - n) <= 1e-6
        assert np.any(near), f"no atom at k = {n}"
        assert abs(spectrum.intensities[near][0] - 1.0) <= 1e-2


# =============================================================================
# RUNNER
# =============================================================================

def list_checks() -> list[str]:
    return [name for name, _ in CHECKS]


def run_selftest() -> int:
    """
    Runs every check and prints a TAP log.

    Returns:
        int: 0 if every check passed, 1 otherwise.
    """
    print(f"1..{len(CHECKS)}")
    failures = []
    start = time.perf_counter()
    for number, (name, fn) in enumerate(CHECKS, start=1):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                fn()
        except Exception as e:
            failures.append(name)
            print(f"{Fore.RED}not ok {number} - {name}{Style.RESET_ALL}")
            print(f"  # {type(e).__name__}: {e}")
        else:
            print(f"{Fore.GREEN}ok {number} - {name}{Style.RESET_ALL}")
    elapsed = time.perf_counter() - start

    print(f"# {len(CHECKS) - len(failures)}/{len(CHECKS)} passed in {elapsed:.1f} s")
    for name in failures:
        print(f"# failed: {name}")
    log_experiment(
        stage="selftest",
        action=ActionType.SELFTEST,
        details={"inputs": {"checks": list_checks()}, "outputs": {"failed": failures, "seconds": elapsed}},
        status="SUCCESS" if not failures else "FAILURE",
    )
    return 0 if not failures else 1
