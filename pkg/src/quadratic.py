"""
Exact Arithmetic
Quadratic integers a + bτ (τ² = pτ + q) and dyadic rationals.

Peak positions of model sets live in the module Z[τ]/(τ − τ'), those of
period-doubling in Z[1/2]. Membership is decided over integers; floats only
appear when a candidate lattice point is compared against a measured k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class QuadraticField:
    """The ring Z[τ] with τ the larger root of x² = p·x + q."""

    name: str
    p: int
    q: int

    @property
    def discriminant(self) -> int:
        return self.p * self.p + 4 * self.q

    @property
    def root(self) -> float:
        return (self.p + math.sqrt(self.discriminant)) / 2.0

    @property
    def conjugate_root(self) -> float:
        return (self.p - math.sqrt(self.discriminant)) / 2.0

    @property
    def root_gap(self) -> float:
        """τ − τ' = √disc, the covolume of the Minkowski embedding of Z[τ]."""
        return math.sqrt(self.discriminant)

    def element(self, a: int, b: int) -> "QuadraticInteger":
        return QuadraticInteger(int(a), int(b), self)


GOLDEN = QuadraticField("golden", 1, 1)
SILVER = QuadraticField("silver", 2, 1)
FIELDS = {GOLDEN.name: GOLDEN, SILVER.name: SILVER}


@dataclass(frozen=True)
class QuadraticInteger:
    """a + bτ with integer coordinates."""

    a: int
    b: int
    field: QuadraticField = GOLDEN

    def _check(self, other: "QuadraticInteger"):
        if other.field != self.field:
            raise ValueError("❌ Cannot combine quadratic integers of different fields")

    def __add__(self, other: "QuadraticInteger") -> "QuadraticInteger":
        self._check(other)
        return QuadraticInteger(self.a + other.a, self.b + other.b, self.field)

    def __sub__(self, other: "QuadraticInteger") -> "QuadraticInteger":
        self._check(other)
        return QuadraticInteger(self.a - other.a, self.b - other.b, self.field)

    def __neg__(self) -> "QuadraticInteger":
        return QuadraticInteger(-self.a, -self.b, self.field)

    def __mul__(self, other: "QuadraticInteger") -> "QuadraticInteger":
        self._check(other)
        # τ² = pτ + q
        a = self.a * other.a + self.field.q * self.b * other.b
        b = self.a * other.b + self.b * other.a + self.field.p * self.b * other.b
        return QuadraticInteger(a, b, self.field)

    def conjugate(self) -> "QuadraticInteger":
        """Galois conjugate: τ ↦ τ' = p − τ."""
        return QuadraticInteger(self.a + self.field.p * self.b, -self.b, self.field)

    def norm(self) -> int:
        """N(x) = x·x', an integer."""
        prod = self * self.conjugate()
        assert prod.b == 0
        return prod.a

    def to_float(self) -> float:
        return self.a + self.b * self.field.root

    def star(self) -> float:
        """Image under the star map (internal-space coordinate)."""
        return self.a + self.b * self.field.conjugate_root


@dataclass(frozen=True)
class ModuleMatch:
    """Witness that k ≈ (a + bτ)/√disc."""

    element: QuadraticInteger
    k_exact: float
    error: float


def module_membership(
    k: float, field: QuadraticField = GOLDEN, bound: int = 20, tol: float = 1e-4
) -> ModuleMatch | None:
    """
    Searches (a, b) with |a|, |b| ≤ bound and |k − (a + bτ)/√disc| ≤ tol.

    The Fourier module of a model set built on Z[τ] is Z[τ]/√disc. The
    search runs over integers; the closest witness is returned.

    Args:
        k: Measured wave number.
        field: Quadratic field of the model set.
        bound: Coefficient bound.
        tol: Acceptance tolerance in k.

    Returns:
        ModuleMatch | None: Best witness, or None if k is not in the module.
    """
    scale = field.root_gap
    target = k * scale
    best: ModuleMatch | None = None
    for b in range(-bound, bound + 1):
        a = int(round(target - b * field.root))
        if abs(a) > bound:
            continue
        element = field.element(a, b)
        k_exact = element.to_float() / scale
        err = abs(k - k_exact)
        if err <= tol and (best is None or err < best.error):
            best = ModuleMatch(element, k_exact, err)
    return best


def dyadic_membership(k: float, max_level: int = 10, tol: float = 1e-4) -> Fraction | None:
    """
    Returns the dyadic rational m/2^j (smallest j ≤ max_level) within tol of k.
    """
    for level in range(max_level + 1):
        denom = 1 << level
        m = int(round(k * denom))
        if abs(k - m / denom) <= tol:
            return Fraction(m, denom)
    return None
