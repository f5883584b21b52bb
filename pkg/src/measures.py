"""
Measures Module
Translation-bounded complex point measures (finite restrictions of Dirac
combs) on R, R², Z, Z², their test functions, and the basic operations of
the measure dynamical system: evaluation, total variation, translation,
reflection, convolution and the f_φ embedding.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Mapping

import numpy as np
from scipy.spatial import cKDTree

from src.errors import InvalidComb, TruncatedSupportWarning, WindowTooSmall
from src.geometry import Box, as_points

RESOLUTION = 1e-12  # point-coincidence resolution (absolute)

GroupKind = Literal["real-line", "real-plane", "integer-line", "integer-plane"]


# =============================================================================
# GROUPS
# =============================================================================

@dataclass(frozen=True)
class GroupSpec:
    """
    The ambient group G and its Haar normalization.

    Real kinds use Lebesgue measure and have dual R^d; integer kinds use
    counting measure and have the unit torus as dual. The pairing is
    (k, t) = exp(−2πi k·t).
    """
    kind: GroupKind = "real-line"

    def __post_init__(self):
        if self.kind not in ("real-line", "real-plane", "integer-line", "integer-plane"):
            raise ValueError(f"❌ Unknown group kind '{self.kind}'")

    @property
    def dim(self) -> int:
        return 1 if self.kind.endswith("line") else 2

    @property
    def is_discrete(self) -> bool:
        return self.kind.startswith("integer")

    def haar(self, box: Box) -> float:
        """Volume |B| (Lebesgue or integer-point count)."""
        return float(box.lattice_count()) if self.is_discrete else box.volume()

    def pairing(self, k, t) -> np.ndarray:
        """(k, t) = exp(−2πi k·t) for k, t of shape (n, d) or broadcastable."""
        k = as_points(k, self.dim)
        t = as_points(t, self.dim)
        return np.exp(-2j * np.pi * np.sum(k * t, axis=1))

    def reduce_dual(self, k) -> np.ndarray:
        """Representative of k in the dual group (mod 1 for integer kinds)."""
        k = as_points(k, self.dim)
        if self.is_discrete:
            return k - np.floor(k + 0.5)
        return k


REAL_LINE = GroupSpec("real-line")
REAL_PLANE = GroupSpec("real-plane")
INTEGER_LINE = GroupSpec("integer-line")
INTEGER_PLANE = GroupSpec("integer-plane")


@dataclass(frozen=True)
class TranslationBound:
    """A (C, V) pair: |μ|(t + V) ≤ C for all t, V an open box."""

    C: float
    V: Box

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"❌ Translation bound C must be positive, got {self.C}")
        if self.V.is_empty("open"):
            raise ValueError("❌ Translation bound V must be a nonempty open box")


# =============================================================================
# TEST FUNCTIONS
# =============================================================================

Shape = Literal["tent", "raised-cosine-bump", "box-mollified-tent"]
_SHAPES = ("tent", "raised-cosine-bump", "box-mollified-tent")
_GAUSS_NODES = 32


@lru_cache(maxsize=4)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _tent_antiderivative(x: np.ndarray, b: float) -> np.ndarray:
    """∫_{-∞}^x max(0, 1 − |u|/b) du."""
    x = np.clip(x, -b, b)
    left = (x + b) ** 2 / (2 * b)
    right = b - (b - x) ** 2 / (2 * b)
    return np.where(x <= 0, left, right)


def _profile(shape: str, u: np.ndarray, h: float) -> np.ndarray:
    """Unit-height profile centered at 0 with support [−h, h]."""
    if shape == "tent":
        return np.maximum(0.0, 1.0 - np.abs(u) / h)
    if shape == "raised-cosine-bump":
        inside = np.abs(u) < h
        return np.where(inside, 0.5 * (1.0 + np.cos(np.pi * np.clip(u / h, -1, 1))), 0.0)
    # box-mollified tent: (4/3)·(1/a)·box_a ∗ tent_b with a = b = 2h/3
    a = b = 2.0 * h / 3.0
    smoothed = (_tent_antiderivative(u + a / 2, b) - _tent_antiderivative(u - a / 2, b)) / a
    return (4.0 / 3.0) * smoothed


def _profile_transform(shape: str, k: np.ndarray, h: float) -> np.ndarray:
    """∫ profile(u) e^{−2πiku} du (real: profiles are even)."""
    if shape == "tent":
        return h * np.sinc(h * k) ** 2
    if shape == "raised-cosine-bump":
        return h * np.sinc(2 * h * k) + 0.5 * h * (np.sinc(2 * h * k - 1) + np.sinc(2 * h * k + 1))
    a = b = 2.0 * h / 3.0
    return (4.0 / 3.0) * np.sinc(a * k) * b * np.sinc(b * k) ** 2


def _profile_kinks(shape: str, h: float) -> list[float]:
    if shape == "tent":
        return [-h, 0.0, h]
    if shape == "raised-cosine-bump":
        return [-h, h]
    return [-h, -h / 3.0, h / 3.0, h]


def _box_spline(shape: str, h: float) -> tuple[float, list[float]] | None:
    """(coefficient, box widths) with profile = coef·(box_{w1} ∗ … ∗ box_{wn})."""
    if shape == "tent":
        return 1.0 / h, [h, h]
    if shape == "box-mollified-tent":
        a = b = 2.0 * h / 3.0
        return (4.0 / 3.0) / (a * b), [a, b, b]
    return None


def _box_spline_values(x: np.ndarray, widths: list[float]) -> np.ndarray:
    """Convolution of centered unit-height boxes of the given widths, by truncated powers."""
    n = len(widths)
    shift = 0.5 * sum(widths)
    total = np.zeros_like(x, dtype=float)
    for mask in range(1 << n):
        subset = sum(widths[i] for i in range(n) if mask >> i & 1)
        sign = -1.0 if bin(mask).count("1") % 2 else 1.0
        total += sign * np.maximum(x + shift - subset, 0.0) ** (n - 1)
    values = total / math.factorial(n - 1)
    support = np.abs(x) < shift
    return np.where(support, values, 0.0)


@dataclass(frozen=True)
class TestFunction:
    """
    Compactly supported product bump φ(x) = amplitude · Π_i p(x_i − c_i).

    The profile p is a tent, a raised-cosine bump or a box-mollified tent of
    half-width h_i; all three have closed-form integrals and Fourier
    transforms.
    """
    __test__ = False  # not a pytest class

    shape: Shape
    center: tuple[float, ...]
    halfwidth: tuple[float, ...]
    amplitude: complex = 1.0

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ValueError(f"❌ Unknown test function shape '{self.shape}'")
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        halfwidth = np.atleast_1d(np.asarray(self.halfwidth, dtype=float))
        if halfwidth.size == 1 and len(center) > 1:
            halfwidth = np.repeat(halfwidth, len(center))
        if halfwidth.size != len(center):
            raise ValueError("❌ Center and halfwidth dimensions differ")
        if np.any(halfwidth <= 0):
            raise ValueError(f"❌ Halfwidths must be positive, got {halfwidth}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "halfwidth", tuple(float(h) for h in halfwidth))
        object.__setattr__(self, "amplitude", complex(self.amplitude))

    # -------------------------------------------------------------------------
    # Constructors
    # -------------------------------------------------------------------------

    @classmethod
    def tent(cls, center=0.0, halfwidth=1.0, amplitude: complex = 1.0) -> "TestFunction":
        return cls("tent", center, halfwidth, amplitude)

    @classmethod
    def raised_cosine(cls, center=0.0, halfwidth=1.0, amplitude: complex = 1.0) -> "TestFunction":
        return cls("raised-cosine-bump", center, halfwidth, amplitude)

    @classmethod
    def box_mollified_tent(cls, center=0.0, halfwidth=1.0, amplitude: complex = 1.0) -> "TestFunction":
        return cls("box-mollified-tent", center, halfwidth, amplitude)

    @classmethod
    def parse(cls, text: str, dim: int = 1) -> "TestFunction":
        """Parses ``shape:halfwidth[:center]`` (ex: ``tent:0.5``)."""
        parts = text.split(":")
        aliases = {"tent": "tent", "cos": "raised-cosine-bump", "raised-cosine-bump": "raised-cosine-bump",
                   "bmt": "box-mollified-tent", "box-mollified-tent": "box-mollified-tent"}
        if parts[0] not in aliases or len(parts) < 2:
            raise ValueError(f"❌ Cannot parse test function '{text}' (expected shape:halfwidth[:center])")
        halfwidth = float(parts[1])
        center = float(parts[2]) if len(parts) > 2 else 0.0
        return cls(aliases[parts[0]], (center,) * dim, (halfwidth,) * dim)

    # -------------------------------------------------------------------------
    # Geometry
    # -------------------------------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def c(self) -> np.ndarray:
        return np.array(self.center)

    @property
    def h(self) -> np.ndarray:
        return np.array(self.halfwidth)

    def support(self) -> Box:
        """Closed support box center ± halfwidth."""
        return Box(tuple(self.c - self.h), tuple(self.c + self.h))

    def lipschitz(self) -> float:
        """Lipschitz constant w.r.t. the max-norm (tent: |a|·Σ 1/h_i)."""
        slope = {"tent": 1.0, "raised-cosine-bump": np.pi / 2, "box-mollified-tent": 1.0}[self.shape]
        return abs(self.amplitude) * slope * float(np.sum(1.0 / self.h))

    # -------------------------------------------------------------------------
    # Transformations
    # -------------------------------------------------------------------------

    def tilde(self) -> "TestFunction":
        """φ̃(t) = conj(φ(−t))."""
        return TestFunction(self.shape, tuple(-self.c), self.halfwidth, np.conj(self.amplitude))

    def reflected(self) -> "TestFunction":
        """φ_(t) = φ(−t)."""
        return TestFunction(self.shape, tuple(-self.c), self.halfwidth, self.amplitude)

    def translated(self, t) -> "TestFunction":
        """β_t φ = φ(· − t)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return TestFunction(self.shape, tuple(self.c + t), self.halfwidth, self.amplitude)

    def with_amplitude(self, amplitude: complex) -> "TestFunction":
        return TestFunction(self.shape, self.center, self.halfwidth, amplitude)

    def normalized(self, group: GroupSpec | None = None) -> "TestFunction":
        """Rescaled copy with ∫φ = 1."""
        unit = self.with_amplitude(1.0)
        return unit.with_amplitude(1.0 / unit.integral(group))

    # -------------------------------------------------------------------------
    # Values
    # -------------------------------------------------------------------------

    def __call__(self, x) -> np.ndarray:
        pts = as_points(x, self.dim)
        values = np.ones(len(pts))
        for i in range(self.dim):
            values = values * _profile(self.shape, pts[:, i] - self.center[i], self.halfwidth[i])
        return self.amplitude * values

    def _axis_integers(self, axis: int) -> np.ndarray:
        c, h = self.center[axis], self.halfwidth[axis]
        return np.arange(math.ceil(c - h), math.floor(c + h) + 1, dtype=float)

    def integral(self, group: GroupSpec | None = None) -> complex:
        """∫φ dθ_G (Lebesgue for real groups, sum over Z^d for integer groups)."""
        total = self.amplitude
        for i in range(self.dim):
            if group is not None and group.is_discrete:
                n = self._axis_integers(i)
                total *= float(np.sum(_profile(self.shape, n - self.center[i], self.halfwidth[i])))
            else:
                total *= float(_profile_transform(self.shape, np.zeros(1), self.halfwidth[i])[0])
        return complex(total)

    def fourier(self, k, group: GroupSpec | None = None) -> np.ndarray:
        """φ̂(k) = ∫ φ(x) e^{−2πik·x} dx (a finite sum over Z^d for integer groups)."""
        ks = as_points(k, self.dim)
        values = np.full(len(ks), self.amplitude, dtype=complex)
        for i in range(self.dim):
            if group is not None and group.is_discrete:
                n = self._axis_integers(i)
                p = _profile(self.shape, n - self.center[i], self.halfwidth[i])
                values *= np.exp(-2j * np.pi * np.outer(ks[:, i], n)) @ p
            else:
                values *= _profile_transform(self.shape, ks[:, i], self.halfwidth[i])
                values *= np.exp(-2j * np.pi * ks[:, i] * self.center[i])
        return values


def correlate_test_functions(phi: TestFunction, psi: TestFunction, s,
                             group: GroupSpec | None = None) -> np.ndarray:
    """
    Evaluates (φ̃ ∗ ψ)(s) = ∫ conj(φ(a)) ψ(s + a) da.

    Tents and box-mollified tents are box splines, so the convolution is a
    box spline again and is evaluated exactly by truncated powers. Pairs
    involving a raised-cosine bump are integrated by Gauss–Legendre
    quadrature between the kinks. On integer groups the integral is a finite
    sum.

    Args:
        phi: First test function (enters conjugated and reflected).
        psi: Second test function.
        s: Points of shape (n, d).
        group: Ambient group (None means real).

    Returns:
        np.ndarray: Complex values of length n.
    """
    if phi.dim != psi.dim:
        raise ValueError("❌ Test functions of different dimensions")
    pts = as_points(s, phi.dim)
    values = np.full(len(pts), np.conj(phi.amplitude) * psi.amplitude, dtype=complex)
    discrete = group is not None and group.is_discrete
    for i in range(phi.dim):
        # φ̃ is centered at −c_φ with the same (even) profile; ψ at c_ψ.
        u = pts[:, i] - (psi.center[i] - phi.center[i])
        values *= _axis_convolution(phi.shape, phi.halfwidth[i], psi.shape, psi.halfwidth[i], u, discrete)
    return values


def _axis_convolution(shape_a: str, ha: float, shape_b: str, hb: float,
                      u: np.ndarray, discrete: bool) -> np.ndarray:
    """(p_a ∗ p_b)(u) for two centered even profiles."""
    if discrete:
        n = np.arange(-math.floor(ha), math.floor(ha) + 1, dtype=float)
        pa = _profile(shape_a, n, ha)
        return np.array([np.dot(pa, _profile(shape_b, ui - n, hb)) for ui in u])

    spline_a, spline_b = _box_spline(shape_a, ha), _box_spline(shape_b, hb)
    if spline_a is not None and spline_b is not None:
        coef = spline_a[0] * spline_b[0]
        return coef * _box_spline_values(u, spline_a[1] + spline_b[1])

    nodes, weights = _gauss_legendre(_GAUSS_NODES)
    lo = np.maximum(-ha, u - hb)
    hi = np.minimum(ha, u + hb)
    kinks = np.array(_profile_kinks(shape_a, ha))
    breaks = np.concatenate(
        [np.broadcast_to(kinks, (len(u), len(kinks))), u[:, None] - np.array(_profile_kinks(shape_b, hb))[None, :]],
        axis=1,
    )
    breaks = np.sort(np.clip(breaks, lo[:, None], hi[:, None]), axis=1)
    breaks = np.concatenate([lo[:, None], breaks, hi[:, None]], axis=1)
    breaks = np.maximum.accumulate(breaks, axis=1)
    left, right = breaks[:, :-1], breaks[:, 1:]
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    x = mid[..., None] + half[..., None] * nodes
    integrand = _profile(shape_a, x, ha) * _profile(shape_b, u[:, None, None] - x, hb)
    return np.sum(half * np.sum(integrand * weights, axis=-1), axis=1)


# =============================================================================
# WEIGHTED COMBS
# =============================================================================

def _sort_order(points: np.ndarray) -> np.ndarray:
    if points.shape[1] == 1:
        return np.argsort(points[:, 0], kind="stable")
    return np.lexsort(points.T[::-1])


@dataclass(frozen=True, eq=False)
class WeightedComb:
    """
    Finite restriction ω_B = Σ_{x∈B} w_x δ_x of a translation bounded comb.

    Points are kept sorted (lexicographically in 2D) and read-only.
    """
    points: np.ndarray
    weights: np.ndarray
    window: Box
    group: GroupSpec = field(default=REAL_LINE)

    def __post_init__(self):
        if self.window.dim != self.group.dim:
            raise InvalidComb(f"❌ Window dimension {self.window.dim} does not match group {self.group.kind}")
        pts = as_points(self.points, self.group.dim) if np.size(self.points) else np.zeros((0, self.group.dim))
        w = np.asarray(self.weights, dtype=complex).reshape(-1)
        if len(pts) != len(w):
            raise InvalidComb(f"❌ {len(pts)} points but {len(w)} weights")
        order = _sort_order(pts)
        pts, w = pts[order], w[order]

        if len(pts):
            slack = 1e-9 * max(1.0, float(np.max(np.abs(self.window.to_list()))))
            lo, hi = self.window.lo, self.window.hi
            if np.any(pts < lo - slack) or np.any(pts >= hi + slack):
                raise InvalidComb("❌ Comb points must lie inside the window")
            if self.group.is_discrete and np.any(np.abs(pts - np.round(pts)) > 1e-9):
                raise InvalidComb(f"❌ Points of a {self.group.kind} comb must be integers")
            if _has_coincidences(pts):
                raise InvalidComb(f"❌ Comb points must be pairwise distinct (resolution {RESOLUTION})")

        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_mapping(cls, mapping: Mapping, window: Box, group: GroupSpec = REAL_LINE) -> "WeightedComb":
        """Builds a comb from ``{point: weight}`` (points scalars or tuples)."""
        pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in mapping]
        pts_arr = np.array(pts).reshape(-1, group.dim) if pts else np.zeros((0, group.dim))
        return cls(pts_arr, np.array(list(mapping.values()), dtype=complex), window, group)

    @classmethod
    def empty(cls, window: Box, group: GroupSpec = REAL_LINE) -> "WeightedComb":
        return cls(np.zeros((0, group.dim)), np.zeros(0, dtype=complex), window, group)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.group.dim

    @property
    def volume(self) -> float:
        return self.group.haar(self.window)

    def density(self) -> float:
        vol = self.volume
        return len(self) / vol if vol > 0 else 0.0

    def restrict(self, box: Box) -> "WeightedComb":
        """ω_B for B = box ∩ window."""
        mask = box.contains(self.points)
        return WeightedComb(self.points[mask], self.weights[mask], box.intersect(self.window), self.group)

    def conjugate(self) -> "WeightedComb":
        """ω̄ (conjugated weights)."""
        return WeightedComb(self.points, np.conj(self.weights), self.window, self.group)

    def lattice_structure(self, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray] | None:
        """
        Detects lattice support: all points on offset + spacing·Z^d.

        Returns:
            (offset, spacing) arrays, or None if the comb is not lattice-supported.
        """
        if len(self) < 2:
            return None
        offset = np.empty(self.dim)
        spacing = np.empty(self.dim)
        for i in range(self.dim):
            coords = np.unique(self.points[:, i])
            if len(coords) < 2:
                offset[i], spacing[i] = coords[0], 1.0
                continue
            step = float(np.min(np.diff(coords)))
            steps = (coords - coords[0]) / step
            if np.max(np.abs(steps - np.round(steps))) > tol * max(1.0, float(np.max(steps))):
                return None
            offset[i], spacing[i] = coords[0], step
        return offset, spacing

    def allclose(self, other: "WeightedComb", atol: float = 1e-12) -> bool:
        return (
            len(self) == len(other)
            and self.group == other.group
            and np.allclose(self.window.lo, other.window.lo, atol=atol)
            and np.allclose(self.window.hi, other.window.hi, atol=atol)
            and np.allclose(self.points, other.points, atol=atol)
            and np.allclose(self.weights, other.weights, atol=atol)
        )


def _has_coincidences(points: np.ndarray) -> bool:
    if len(points) < 2:
        return False
    if points.shape[1] == 1:
        return bool(np.any(np.diff(points[:, 0]) <= RESOLUTION))
    return len(cKDTree(points).query_pairs(RESOLUTION, p=np.inf)) > 0


# =============================================================================
# NEIGHBOUR SEARCH
# =============================================================================

def neighbor_pairs(queries: np.ndarray, points: np.ndarray, radius) -> tuple[np.ndarray, np.ndarray]:
    """
    All index pairs (i, j) with |queries_i − points_j| ≤ radius per axis.

    In 1D ``points`` must be sorted; pairs come out grouped by query index,
    ascending in j. In 2D a cKDTree in the scaled max-norm is used.

    Returns:
        tuple: (query indices, point indices) as int arrays.
    """
    queries = np.asarray(queries, dtype=float)
    points = np.asarray(points, dtype=float)
    if len(points) == 0 or len(queries) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    radius = np.broadcast_to(np.asarray(radius, dtype=float), (points.shape[1],))

    if points.shape[1] == 1:
        xs = points[:, 0]
        q = queries[:, 0]
        lo = np.searchsorted(xs, q - radius[0], side="left")
        hi = np.searchsorted(xs, q + radius[0], side="right")
        counts = hi - lo
        total = int(counts.sum())
        qi = np.repeat(np.arange(len(q)), counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        pj = np.repeat(lo, counts) + (np.arange(total) - starts)
        return qi.astype(np.int64), pj.astype(np.int64)

    tree = cKDTree(points / radius)
    hits = tree.query_ball_point(queries / radius, 1.0, p=np.inf)
    counts = np.array([len(h) for h in hits])
    qi = np.repeat(np.arange(len(queries)), counts)
    pj = np.array([j for h in hits for j in sorted(h)], dtype=np.int64)
    return qi.astype(np.int64), pj


def _accumulate(index: np.ndarray, values: np.ndarray, length: int) -> np.ndarray:
    """Ordered complex bin sums (bincount on real and imaginary parts)."""
    re = np.bincount(index, weights=values.real, minlength=length)
    im = np.bincount(index, weights=values.imag, minlength=length)
    return re + 1j * im


def _warn_if_truncated(support: Box, comb: WeightedComb, what: str):
    if not comb.window.contains_box(support, other_closed=True):
        warnings.warn(
            TruncatedSupportWarning(
                f"⚠️ {what}: support {support.to_list()} is not inside window {comb.window.to_list()}; "
                "value computed on the available points"
            ),
            stacklevel=3,
        )


# =============================================================================
# OPERATIONS
# =============================================================================

def evaluate(comb: WeightedComb, phi: TestFunction) -> complex:
    """
    μ(φ) = Σ_x w_x φ(x).

    Warns with TruncatedSupportWarning if supp(φ) is not inside the window.
    """
    _warn_if_truncated(phi.support(), comb, "evaluate")
    if len(comb) == 0:
        return 0j
    mask = phi.support().contains(comb.points, mode="closed")
    return complex(np.sum(comb.weights[mask] * phi(comb.points[mask])))


def total_variation_on(comb: WeightedComb, V: Box) -> float:
    """|μ|(V) = Σ_{x∈V} |w_x| for an open box V."""
    if len(comb) == 0:
        return 0.0
    mask = V.contains(comb.points, mode="open")
    return float(np.sum(np.abs(comb.weights[mask])))


def variation_by_test_functions(comb: WeightedComb, V: Box, levels: int = 12) -> float:
    """
    sup |μ(φ)| over φ with supp(φ) ⊂ V and ‖φ‖∞ ≤ 1, realized by phase-matched
    sums of tents around the points of V with plateaus shrinking by halves.

    Independent of ``total_variation_on``; the two agree for point measures.
    """
    if len(comb) == 0:
        return 0.0
    inside = V.contains(comb.points, mode="open")
    pts, w = comb.points[inside], comb.weights[inside]
    if len(pts) == 0:
        return 0.0
    to_boundary = np.min(np.minimum(pts - V.lo, V.hi - pts), axis=1)
    if len(pts) > 1:
        nearest, _ = cKDTree(pts).query(pts, k=2, p=np.inf)
        gap = nearest[:, 1]
    else:
        gap = np.full(1, np.inf)
    best = 0.0
    for level in range(levels):
        radius = np.minimum(2.0 ** -level, np.minimum(0.5 * gap, to_boundary))
        value = 0j
        for x, wx, r in zip(pts, w, radius):
            phase = np.conj(wx) / abs(wx) if wx != 0 else 1.0
            bump = TestFunction.tent(tuple(x), tuple(np.full(comb.dim, 0.999 * r)), phase)
            mask = bump.support().contains(comb.points, mode="closed")
            value += np.sum(comb.weights[mask] * bump(comb.points[mask]))
        best = max(best, abs(value))
    return best


@dataclass(frozen=True)
class TranslationBoundReport:
    bounded: bool
    worst_t: np.ndarray
    worst_value: float
    checked: int


def is_translation_bounded(comb: WeightedComb, bound: TranslationBound, t_step: float) -> TranslationBoundReport:
    """
    Checks |μ|(t + V) ≤ C on a grid of t covering window ⊖ V.

    Raises:
        WindowTooSmall: If window ⊖ V is empty.
    """
    region = comb.window.erode(bound.V)
    if region.is_empty("closed"):
        raise WindowTooSmall(f"❌ Window {comb.window.to_list()} cannot host V = {bound.V.to_list()}")
    axes = [np.append(np.arange(region.lo[i], region.hi[i], t_step), region.hi[i]) for i in range(comb.dim)]
    if comb.dim == 1:
        ts = axes[0].reshape(-1, 1)
    else:
        xx, yy = np.meshgrid(*axes, indexing="ij")
        ts = np.column_stack([xx.ravel(), yy.ravel()])

    if len(comb) == 0:
        return TranslationBoundReport(True, ts[0], 0.0, len(ts))

    if comb.dim == 1:
        xs = comb.points[:, 0]
        cum = np.concatenate([[0.0], np.cumsum(np.abs(comb.weights))])
        upper = np.searchsorted(xs, ts[:, 0] + bound.V.hi[0], side="left")
        lower = np.searchsorted(xs, ts[:, 0] + bound.V.lo[0], side="right")
        values = cum[upper] - cum[np.minimum(lower, upper)]
    else:
        values = np.array([total_variation_on(comb, bound.V.shift(t)) for t in ts])

    worst = int(np.argmax(values))
    return TranslationBoundReport(
        bool(np.all(values <= bound.C + 1e-12)), ts[worst], float(values[worst]), len(ts)
    )


def translate(comb: WeightedComb, t) -> WeightedComb:
    """α_t μ = δ_t ∗ μ: points and window shifted by +t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return WeightedComb(comb.points + t, comb.weights, comb.window.shift(t), comb.group)


def reflect(comb: WeightedComb) -> WeightedComb:
    """μ̃: points negated, weights conjugated, window negated."""
    return WeightedComb(-comb.points, np.conj(comb.weights), comb.window.negate(), comb.group)


def f_phi(phi: TestFunction, comb: WeightedComb) -> complex:
    """f_φ(μ) = (φ ∗ μ)(0) = Σ_x w_x φ(−x)."""
    return evaluate(comb, phi.reflected())


def f_phi_at(phi: TestFunction, comb: WeightedComb, t) -> np.ndarray | complex:
    """
    (φ ∗ ω)(t) = Σ_x w_x φ(t − x) = f_φ(α_{−t} ω), vectorized over t.

    Args:
        phi: Test function.
        comb: Comb ω (restricted to its window).
        t: A single point or an (m, d) array of points.

    Returns:
        complex for a single t, otherwise an array of length m.
    """
    ts = as_points(t, comb.dim)
    single = np.ndim(t) == 0 or (np.ndim(t) == 1 and comb.dim > 1 and len(ts) == 1)
    lo = ts.min(axis=0) - phi.c - phi.h
    hi = ts.max(axis=0) - phi.c + phi.h
    _warn_if_truncated(Box(tuple(lo), tuple(hi)), comb, "f_phi_at")

    qi, pj = neighbor_pairs(ts - phi.c, comb.points, phi.h)
    values = comb.weights[pj] * phi(ts[qi] - comb.points[pj])
    out = _accumulate(qi, values, len(ts))
    return complex(out[0]) if single else out


def convolve_finite(a: WeightedComb, b: WeightedComb) -> WeightedComb:
    """
    μ ∗ ν for finite combs: all sums x + y with multiplied weights, coincident
    sums (within 1e-12) merged by adding their weights.
    """
    if a.group != b.group:
        raise ValueError("❌ Cannot convolve combs on different groups")
    window = a.window.minkowski_sum(b.window)
    if len(a) == 0 or len(b) == 0:
        return WeightedComb.empty(window, a.group)

    sums = (a.points[:, None, :] + b.points[None, :, :]).reshape(-1, a.dim)
    prods = (a.weights[:, None] * b.weights[None, :]).reshape(-1)
    order = _sort_order(sums)
    sums, prods = sums[order], prods[order]

    new_group = np.ones(len(sums), dtype=bool)
    if a.dim == 1:
        new_group[1:] = np.diff(sums[:, 0]) > RESOLUTION
    else:
        new_group[1:] = np.any(np.abs(np.diff(sums, axis=0)) > RESOLUTION, axis=1)
    starts = np.flatnonzero(new_group)
    merged_points = sums[starts]
    merged_weights = np.add.reduceat(prods, starts)

    if a.dim > 1:
        # lexicographic order can separate coincident points; merge through a tree
        tree = cKDTree(merged_points)
        pairs = tree.query_pairs(RESOLUTION, p=np.inf, output_type="ndarray")
        if len(pairs):
            keep = np.ones(len(merged_points), dtype=bool)
            for i, j in sorted(map(tuple, pairs)):
                if keep[i] and keep[j]:
                    merged_weights[i] += merged_weights[j]
                    keep[j] = False
            merged_points, merged_weights = merged_points[keep], merged_weights[keep]
    return WeightedComb(merged_points, merged_weights, window, a.group)
