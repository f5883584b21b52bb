import numpy as np
import pytest

from src.errors import DegenerateWindow, EpsilonTooLarge
from src.generators import (
    EXAMPLES,
    GOLDEN_RATIO,
    CombGenerator,
    bernoulli_lattice,
    cut_and_project_1d,
    example,
    fixed_point,
    hash_uniform,
    lattice,
    letter_frequencies,
    perturbed_lattice,
    substitution,
    substitution_matrix,
)
from src.geometry import Box
from src.measures import INTEGER_LINE, REAL_PLANE, is_translation_bounded


# =============================================================================
# LATTICES
# =============================================================================

def test_unit_lattice():
    comb = lattice(1.0).produce(Box.interval(0.0, 4.0))
    assert comb.points[:, 0].tolist() == [0.0, 1.0, 2.0, 3.0]
    assert np.all(comb.weights == 1)


def test_alternating_lattice_weights():
    comb = lattice(1.0, "alternating").produce(Box.interval(0.0, 4.0))
    assert comb.weights.real.tolist() == [1.0, -1.0, 1.0, -1.0]


def test_planar_lattice():
    gen = lattice((1.0, 2.0), group=REAL_PLANE)
    comb = gen.produce(Box((0.0, 0.0), (3.0, 4.0)))
    assert len(comb) == 6
    assert gen.density == 0.5


def test_integer_lattice_needs_integer_spacing():
    with pytest.raises(ValueError):
        lattice(1.5, group=INTEGER_LINE)


def test_lattice_rejects_negative_spacing():
    with pytest.raises(ValueError):
        lattice(-1.0)


# =============================================================================
# CUT AND PROJECT
# =============================================================================

def test_fibonacci_gaps_and_density():
    gen = cut_and_project_1d("golden")
    comb = gen.produce(Box.interval(0.0, 1000.0))
    gaps = np.unique(np.round(np.diff(comb.points[:, 0]), 9))
    assert np.allclose(gaps, [1.0, GOLDEN_RATIO])
    assert abs(comb.density() - gen.density) < 5e-3
    assert abs(gen.density - GOLDEN_RATIO / np.sqrt(5)) < 1e-12


def test_fibonacci_minimal_gap():
    assert abs(cut_and_project_1d("golden").minimal_gap() - 1.0) < 1e-9


def test_degenerate_acceptance_window():
    with pytest.raises(DegenerateWindow):
        cut_and_project_1d("golden", window_star=(0.5, 0.5))


def test_unknown_field():
    with pytest.raises(ValueError):
        cut_and_project_1d("bronze")


def test_productions_agree_on_overlap():
    for name in ("lattice", "fibonacci", "thue-morse", "perturbed", "bernoulli"):
        gen = example(name)
        small = gen.produce(Box.interval(0.0, 50.0))
        large = gen.produce(Box.interval(0.0, 100.0)).restrict(Box.interval(0.0, 50.0))
        assert np.array_equal(small.points, large.points), name
        assert np.array_equal(small.weights, large.weights), name


def test_translation_bound_holds():
    for name in ("lattice", "fibonacci", "thue-morse", "period-doubling", "perturbed"):
        gen = example(name)
        comb = gen.produce(Box.interval(0.0, 200.0))
        assert is_translation_bounded(comb, gen.bound, 0.05).bounded, name


# =============================================================================
# SUBSTITUTIONS
# =============================================================================

def test_thue_morse_word():
    assert fixed_point("thue-morse", 3).tolist() == [0, 1, 1, 0, 1, 0, 0, 1]


def test_period_doubling_word():
    assert fixed_point("period-doubling", 3).tolist() == [0, 1, 0, 0, 0, 1, 0, 1]


def test_thue_morse_comb():
    comb = example("thue-morse").produce(Box.interval(0.0, 8.0))
    assert comb.points[:, 0].tolist() == [0, 1, 2, 3, 4, 5, 6, 7]
    assert comb.weights.real.tolist() == [1, -1, -1, 1, -1, 1, 1, -1]


def test_fibonacci_substitution_matrix_and_frequencies():
    assert substitution_matrix("fibonacci").tolist() == [[1.0, 1.0], [1.0, 0.0]]
    freqs = letter_frequencies("fibonacci")
    assert abs(freqs["a"] - 1 / GOLDEN_RATIO) < 1e-12
    assert abs(freqs["b"] - 1 / GOLDEN_RATIO ** 2) < 1e-12


def test_substitution_densities_match_model_set():
    assert abs(substitution("fibonacci").density - cut_and_project_1d("golden").density) < 1e-12
    assert abs(example("thue-morse").density - 1.0) < 1e-12


def test_substitution_comb_is_one_sided():
    comb = example("period-doubling").produce(Box.interval(-10.0, 10.0))
    assert comb.points[0, 0] == 0.0
    assert len(comb) == 10


def test_unknown_rule():
    with pytest.raises(ValueError):
        substitution("rudin-shapiro")


# =============================================================================
# RANDOM FAMILIES
# =============================================================================

def test_hash_uniform_is_deterministic():
    n = np.arange(1000)
    first = hash_uniform(7, n)
    assert np.array_equal(first, hash_uniform(7, n))
    assert np.all((first >= 0) & (first < 1))
    assert not np.array_equal(first, hash_uniform(8, n))


def test_perturbed_displacements_are_bounded():
    comb = perturbed_lattice(1.0, 0.2, seed=3).produce(Box.interval(0.0, 500.0))
    displacement = comb.points[:, 0] - np.round(comb.points[:, 0])
    assert np.max(np.abs(displacement)) <= 0.2


def test_quasiperiodic_displacements_are_bounded():
    comb = perturbed_lattice(1.0, 0.1, rule="quasiperiodic").produce(Box.interval(0.0, 500.0))
    displacement = comb.points[:, 0] - np.round(comb.points[:, 0])
    assert np.max(np.abs(displacement)) <= 0.1


def test_epsilon_too_large():
    with pytest.raises(EpsilonTooLarge):
        perturbed_lattice(1.0, 0.5)


def test_bernoulli_density():
    comb = bernoulli_lattice(1.0, 0.5, seed=11).produce(Box.interval(0.0, 10000.0))
    assert abs(comb.density() - 0.5) < 0.03


# =============================================================================
# SPECS
# =============================================================================

def test_spec_round_trip():
    gen = substitution("thue-morse", weights={"a": 1j, "b": -1j})
    again = CombGenerator.from_spec(gen.to_spec())
    window = Box.interval(0.0, 64.0)
    assert again.produce(window).allclose(gen.produce(window))


def test_spec_missing_kind():
    with pytest.raises(ValueError):
        CombGenerator.from_spec({"params": {}})


def test_every_example_builds():
    for name in EXAMPLES:
        assert example(name).describe()
    with pytest.raises(ValueError):
        example("penrose")
