import math
from fractions import Fraction

import pytest

from src.quadratic import GOLDEN, SILVER, QuadraticInteger, dyadic_membership, module_membership


# =============================================================================
# FIELD ARITHMETIC
# =============================================================================

def test_golden_root():
    assert abs(GOLDEN.root - (1 + math.sqrt(5)) / 2) < 1e-15
    assert abs(GOLDEN.root + GOLDEN.conjugate_root - 1) < 1e-15
    assert abs(GOLDEN.root_gap - math.sqrt(5)) < 1e-15


def test_tau_squared():
    tau = GOLDEN.element(0, 1)
    assert tau * tau == GOLDEN.element(1, 1)
    silver = SILVER.element(0, 1)
    assert silver * silver == SILVER.element(1, 2)


def test_norms():
    assert GOLDEN.element(0, 1).norm() == -1
    assert GOLDEN.element(1, 1).norm() == 1
    assert GOLDEN.element(2, 0).norm() == 4
    assert SILVER.element(0, 1).norm() == -1


def test_add_sub_neg():
    x = GOLDEN.element(2, 3)
    y = GOLDEN.element(-1, 1)
    assert x + y == GOLDEN.element(1, 4)
    assert x - y == GOLDEN.element(3, 2)
    assert -x == GOLDEN.element(-2, -3)


def test_mixed_fields_rejected():
    with pytest.raises(ValueError):
        GOLDEN.element(1, 0) + SILVER.element(1, 0)


def test_star_map():
    tau = GOLDEN.element(0, 1)
    assert abs(tau.to_float() - GOLDEN.root) < 1e-15
    assert abs(tau.star() - GOLDEN.conjugate_root) < 1e-15
    assert isinstance(tau, QuadraticInteger)


# =============================================================================
# MODULE MEMBERSHIP
# =============================================================================

def test_module_membership_hit():
    k = GOLDEN.element(1, 1).to_float() / GOLDEN.root_gap
    match = module_membership(k, GOLDEN)
    assert match is not None
    assert match.element == GOLDEN.element(1, 1)
    assert match.error < 1e-12


def test_module_membership_miss():
    assert module_membership(0.1234, GOLDEN, bound=2, tol=1e-6) is None


# =============================================================================
# DYADIC MEMBERSHIP
# =============================================================================

def test_dyadic_membership():
    assert dyadic_membership(0.375) == Fraction(3, 8)
    assert dyadic_membership(2.0) == Fraction(2, 1)
    assert dyadic_membership(1.0 / 3.0) is None
