"""
Topology Module
Local rubber topology on windowed point sets: U_{K,V} relations, the vague
proxy metric on measures, repetitivity and FLC diagnostics, and the two
constructive conversions between U_{K,V} neighbourhoods and hit-and-miss
(Fell) basis elements.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.spatial import cKDTree

from src.errors import EmptyBasis, EmptyCoverWarning, KOutsideWindow, WindowTooSmall
from src.geometry import Box, BoxUnion, as_points
from src.measures import REAL_LINE, REAL_PLANE, TestFunction, WeightedComb, evaluate, neighbor_pairs


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True, eq=False)
class PointSetWindowed:
    """Finite proxy of a closed set: the points seen through a half-open window."""

    points: np.ndarray
    window: Box

    def __post_init__(self):
        pts = as_points(self.points, self.window.dim) if np.size(self.points) else np.zeros((0, self.window.dim))
        if len(pts):
            order = np.lexsort(pts.T[::-1])
            pts = pts[order]
            if not np.all(self.window.contains(pts)):
                raise ValueError("❌ Points must lie inside the window")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_comb(cls, comb: WeightedComb) -> "PointSetWindowed":
        return cls(comb.points, comb.window)

    @property
    def dim(self) -> int:
        return self.window.dim

    def __len__(self) -> int:
        return len(self.points)

    def translate(self, t) -> "PointSetWindowed":
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return PointSetWindowed(self.points + t, self.window.shift(t))

    def delta_image(self) -> WeightedComb:
        """δ(P) = Σ_{x∈P} δ_x."""
        group = REAL_LINE if self.dim == 1 else REAL_PLANE
        return WeightedComb(self.points, np.ones(len(self.points)), self.window, group)


@dataclass(frozen=True)
class UKVParams:
    """(K, V) of the relation U_{K,V}: K compact, V an open box centered at 0."""

    K: BoxUnion
    V: Box

    def __post_init__(self):
        K = self.K if isinstance(self.K, BoxUnion) else BoxUnion.of(self.K, "closed")
        if not K.boxes or K.is_empty():
            raise ValueError("❌ K must be a nonempty compact set")
        if K.dim != self.V.dim:
            raise ValueError("❌ K and V must share a dimension")
        if self.V.is_empty("open") or not np.allclose(self.V.lo, -self.V.hi):
            raise ValueError("❌ V must be a nonempty open box centered at 0")
        object.__setattr__(self, "K", K)

    @property
    def radius(self) -> np.ndarray:
        return self.V.hi


@dataclass(frozen=True)
class FellBasisElement:
    """Hit-and-miss basis set 𝒰(C, F) = {L closed : L ∩ C = ∅, L ∩ A ≠ ∅ ∀A ∈ F}."""

    C: BoxUnion
    F: tuple[Box, ...]

    def __post_init__(self):
        object.__setattr__(self, "F", tuple(self.F))
        for member in self.F:
            if member.is_empty("open"):
                raise ValueError("❌ Members of F must be nonempty open boxes")

    def contains(self, L: PointSetWindowed) -> bool:
        """Membership of the closed set L in 𝒰(C, F)."""
        if len(L) and self.C.boxes and np.any(self.C.contains(L.points)):
            return False
        return all(len(L) and np.any(A.contains(L.points, mode="open")) for A in self.F)


# =============================================================================
# U_{K,V}
# =============================================================================

def _covered(queries: np.ndarray, points: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """For each query a: does some b satisfy |a − b|_i < radius_i on every axis?"""
    if len(queries) == 0:
        return np.zeros(0, dtype=bool)
    if len(points) == 0:
        return np.zeros(len(queries), dtype=bool)
    distance, _ = cKDTree(points / radius).query(queries / radius, k=1, p=np.inf)
    return distance < 1.0


def ukv_related(P1: PointSetWindowed, P2: PointSetWindowed, u: UKVParams) -> bool:
    """
    (P1, P2) ∈ U_{K,V}: P1 ∩ K ⊂ P2 + V and P2 ∩ K ⊂ P1 + V.

    Raises:
        KOutsideWindow: If K is not inside both windows.
    """
    if not (u.K.within(P1.window) and u.K.within(P2.window)):
        raise KOutsideWindow(f"❌ K = {u.K.to_list()} is not covered by both windows")
    a = P1.points[u.K.contains(P1.points)] if len(P1) else P1.points
    b = P2.points[u.K.contains(P2.points)] if len(P2) else P2.points
    return bool(np.all(_covered(a, P2.points, u.radius)) and np.all(_covered(b, P1.points, u.radius)))


# =============================================================================
# VAGUE METRIC
# =============================================================================

def vague_family(depth: int, dim: int = 1) -> list[TestFunction]:
    """
    First ``depth`` tents of the fixed countable family.

    Level j has halfwidth 2^−j and centers 2^−j·Z^d ∩ [−2^j, 2^j]^d, ordered
    by level then lexicographically by center.
    """
    family: list[TestFunction] = []
    level = 0
    while len(family) < depth:
        step = 2.0 ** -level
        axis = np.arange(-(2 ** (2 * level)), 2 ** (2 * level) + 1) * step
        if dim == 1:
            centers = axis.reshape(-1, 1)
        else:
            xx, yy = np.meshgrid(axis, axis, indexing="ij")
            centers = np.column_stack([xx.ravel(), yy.ravel()])
        for c in centers:
            family.append(TestFunction.tent(tuple(c), step))
            if len(family) == depth:
                break
        level += 1
    return family


def vague_metric(mu: WeightedComb, nu: WeightedComb, depth: int = 40) -> float:
    """
    d(μ, ν) = Σ_{n=1..N} 2^−n |μ(φ_n) − ν(φ_n)| / (1 + |μ(φ_n) − ν(φ_n)|).

    Nondecreasing in N; the omitted tail is at most 2^−N.
    """
    if mu.group != nu.group:
        raise ValueError("❌ Measures on different groups")
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for n, phi in enumerate(vague_family(depth, mu.dim), start=1):
            diff = abs(evaluate(mu, phi) - evaluate(nu, phi))
            total += 2.0 ** -n * diff / (1.0 + diff)
    return total


def delta_counterexample(ns: Iterable[int], depth: int = 40) -> list[dict]:
    """
    Λ_n = {0, 1/n}: Λ_n → {0} in the rubber topology, while δ(Λ_n) → 2δ_0
    vaguely. Reports both distances per n.
    """
    window = Box.interval(-2.0, 2.0)
    origin = PointSetWindowed([0.0], window)
    rows = []
    for n in ns:
        lam = PointSetWindowed([0.0, 1.0 / n], window)
        u = UKVParams(BoxUnion.of(Box.interval(-1.0, 1.0)), Box.symmetric(2.0 / n))
        double = WeightedComb(np.array([[0.0]]), np.array([2.0]), window)
        rows.append({
            "n": int(n),
            "ukv_related": ukv_related(lam, origin, u),
            "vague_to_delta0": vague_metric(lam.delta_image(), origin.delta_image(), depth),
            "vague_to_2delta0": vague_metric(lam.delta_image(), double, depth),
        })
    return rows


# =============================================================================
# FELL BASIS CONVERSIONS
# =============================================================================

def fell_refines_ukv(H: PointSetWindowed, u: UKVParams) -> FellBasisElement:
    """
    Builds 𝒰(C, F) ⊂ U_{K,V}[H].

    W = V/2 (so W + W = V), C = K ∖ (H + W), F = {h + W : h ∈ K ∩ H}. Every
    closed L in 𝒰(C, F) is U_{K,V}-related to H.

    Raises:
        WindowTooSmall: If H's window does not contain K ⊕ V.
    """
    bbox = u.K.bounding_box()
    if not H.window.contains_box(bbox.minkowski_sum(u.V), other_closed=False):
        raise WindowTooSmall(f"❌ Window of H must contain K ⊕ V = {bbox.minkowski_sum(u.V).to_list()}")
    W = u.V.scale(0.5)

    inside = u.K.contains(H.points) if len(H) else np.zeros(0, dtype=bool)
    if not np.any(inside):
        warnings.warn(EmptyCoverWarning("⚠️ K ∩ H is empty: F = ∅ and C = K"), stacklevel=2)
        return FellBasisElement(u.K, ())

    near = H.points[np.any([
        np.all((H.points > b.lo + W.lo) & (H.points < b.hi + W.hi), axis=1) for b in u.K.boxes
    ], axis=0)]
    C = u.K
    for h in near:
        C = C.subtract(W.shift(h))
    F = tuple(W.shift(h) for h in H.points[inside])
    return FellBasisElement(C, F)


def _deepest_piece(A: Box, C: BoxUnion) -> tuple[np.ndarray, float]:
    """Center and depth (smallest half-width) of the deepest open piece of A ∖ C."""
    pieces = [A]
    for closed in C.boxes:
        pieces = [p for piece in pieces for p in piece.difference(closed, keep_faces=False)]
    if not pieces:
        raise EmptyBasis(f"❌ A ∖ C is empty for A = {A.to_list()}")
    ranked = sorted(pieces, key=lambda p: (-float(np.min(p.halfwidths)), tuple(p.center)))
    best = ranked[0]
    return best.center, float(np.min(best.halfwidths))


def ukv_refines_fell(b: FellBasisElement, shrink: float = 0.9) -> tuple[PointSetWindowed, UKVParams]:
    """
    Builds (H, K, V) with U_{K,V}[H] ⊂ 𝒰(C, F).

    x_A is the center of the deepest piece of A ∖ C, V = ±shrink·min depth
    (so x_A + cl V ⊆ A ∖ C), H = {x_A}, K = C ∪ (H ⊕ cl V).

    Raises:
        EmptyBasis: If some A ∖ C is empty.
    """
    dim = b.C.dim or (b.F[0].dim if b.F else 1)
    if not b.F:
        K = b.C if b.C.boxes else BoxUnion.of(Box(tuple(np.zeros(dim)), tuple(np.zeros(dim))))
        V = Box.symmetric(1.0, dim)
        window = K.bounding_box().expand(2.0)
        return PointSetWindowed(np.zeros((0, dim)), window), UKVParams(K, V)

    centers, depths = zip(*(_deepest_piece(A, b.C) for A in b.F))
    V = Box.symmetric(shrink * min(depths), dim)
    H_points = np.array(centers)
    K = b.C.union(BoxUnion(tuple(Box.centered(x, V.hi) for x in H_points), "closed"))
    window = K.bounding_box().expand(np.maximum(2 * V.hi, 1.0))
    return PointSetWindowed(H_points, window), UKVParams(K, V)


# =============================================================================
# REPETITIVITY & FLC
# =============================================================================

@dataclass(frozen=True)
class RepetitivityReport:
    dense: bool
    max_gap: float
    witnesses: np.ndarray


def _related_under_shifts(P: PointSetWindowed, u: UKVParams, shifts: np.ndarray) -> np.ndarray:
    """For each t: is translate(P, −t) U_{K,V}-related to P?"""
    points = P.points
    m = len(shifts)
    ok = np.ones(m, dtype=bool)
    if len(points) == 0:
        return ok
    tree = cKDTree(points / u.radius)

    # points of P − t inside K, i.e. p ∈ K + t, must lie within V of P
    for box in u.K.boxes:
        ti, pj = neighbor_pairs(shifts + box.center, points, box.halfwidths)
        if len(ti):
            distance, _ = tree.query((points[pj] - shifts[ti]) / u.radius, k=1, p=np.inf)
            bad = np.bincount(ti[distance >= 1.0], minlength=m) > 0
            ok &= ~bad

    # points of P inside K must lie within V of P − t
    anchors = points[u.K.contains(points)]
    if len(anchors):
        queries = (anchors[None, :, :] + shifts[:, None, :]).reshape(-1, P.dim)
        distance, _ = tree.query(queries / u.radius, k=1, p=np.inf)
        ok &= np.all(distance.reshape(m, len(anchors)) < 1.0, axis=1)
    return ok


def repetitivity_scan(P: PointSetWindowed, u: UKVParams, t_grid, R: float) -> RepetitivityReport:
    """
    Computes T = {t : translate(P, −t) and P are U_{K,V}-related} on a grid.

    dense is true iff consecutive witnesses are at most R apart (1D), or
    every grid point has a witness within R/2 (2D).

    Raises:
        WindowTooSmall: If some t + K leaves the window.
    """
    shifts = as_points(t_grid, P.dim)
    bbox = u.K.bounding_box()
    lo = shifts.min(axis=0) + bbox.lo
    hi = shifts.max(axis=0) + bbox.hi
    if not (P.window.contains_box(Box(tuple(lo), tuple(hi))) and u.K.within(P.window)):
        raise WindowTooSmall(f"❌ t + K leaves the window {P.window.to_list()} for some grid t")

    witnesses = shifts[_related_under_shifts(P, u, shifts)]
    if len(witnesses) < 2:
        return RepetitivityReport(False, float("inf"), witnesses)
    if P.dim == 1:
        max_gap = float(np.max(np.diff(np.sort(witnesses[:, 0]))))
    else:
        distance, _ = cKDTree(witnesses).query(shifts, k=1, p=np.inf)
        max_gap = 2.0 * float(np.max(distance))
    return RepetitivityReport(max_gap <= R, max_gap, witnesses)


@dataclass(frozen=True)
class FLCReport:
    flc: bool
    counts: list[int]
    windows: list[Box]


PREFIX_FRACTIONS = (0.125, 0.25, 0.5, 1.0)


def patch_classes(P: PointSetWindowed, radius: float, resolution: float, window: Box | None = None) -> int:
    """Number of translation classes of closed r-patches centered in ``window``."""
    window = window or P.window
    inner = window.expand(-radius)
    if inner.is_empty("closed") or len(P) == 0:
        return 0
    centers = P.points[inner.contains(P.points, mode="closed")]
    if len(centers) == 0:
        return 0
    qi, pj = neighbor_pairs(centers, P.points, radius)
    offsets = np.round((P.points[pj] - centers[qi]) / resolution).astype(np.int64)
    bounds = np.flatnonzero(np.diff(qi)) + 1
    keys = set()
    for group in np.split(offsets, bounds):
        keys.add(tuple(map(tuple, group[np.lexsort(group.T[::-1])])))
    return len(keys)


def flc_check(P: PointSetWindowed, radius: float, resolution: float) -> FLCReport:
    """
    Counts r-patch classes up to ``resolution`` over nested prefix windows.

    flc is true iff the count does not grow between the last two windows.
    """
    windows = [
        Box(P.window.lower, tuple(P.window.lo + f * P.window.widths)) for f in PREFIX_FRACTIONS
    ]
    counts = [patch_classes(P, radius, resolution, w) for w in windows]
    return FLCReport(counts[-1] == counts[-2], counts, windows)


# =============================================================================
# RANDOMIZED CONTRACT TRIALS
# =============================================================================

@dataclass(frozen=True)
class FellTrialReport:
    direction: str
    samples: int
    members: int
    failures: int

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.members > 0


def _fill_outside(rng: np.random.Generator, window: Box, avoid: BoxUnion, count: int) -> np.ndarray:
    """Up to ``count`` uniform points of the window missing ``avoid``."""
    draws = rng.uniform(window.lo[0], window.hi[0], size=4 * count + 4)
    draws = draws[~avoid.contains(draws.reshape(-1, 1))] if avoid.boxes else draws
    return draws[:count]


def _random_box(rng: np.random.Generator, lo: float, hi: float, max_width: float) -> Box:
    a = rng.uniform(lo, hi)
    return Box.interval(a, a + rng.uniform(0.05, max_width))


def _fell_refines_ukv_trial(rng: np.random.Generator, probes: int) -> tuple[int, int]:
    window = Box.interval(-5.0, 5.0)
    H = PointSetWindowed(np.unique(rng.uniform(-3.0, 3.0, size=rng.integers(0, 6))), window)
    a = rng.uniform(-2.0, 0.0)
    u = UKVParams(Box.interval(a, a + rng.uniform(0.5, 2.0)), Box.symmetric(rng.uniform(0.05, 0.5)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyCoverWarning)
        element = fell_refines_ukv(H, u)

    members = failures = 0
    for _ in range(probes):
        hits = [A.lo[0] + rng.uniform(0.05, 0.95) * A.widths[0] for A in element.F]
        extra = _fill_outside(rng, window, element.C, int(rng.integers(0, 8)))
        L = PointSetWindowed(np.unique(np.concatenate([hits, extra])), window)
        if not element.contains(L):
            continue
        members += 1
        failures += not ukv_related(L, H, u)
    return members, failures


def _ukv_refines_fell_trial(rng: np.random.Generator, probes: int) -> tuple[int, int]:
    C = BoxUnion.of([_random_box(rng, -3.0, 3.0, 1.0) for _ in range(rng.integers(0, 3))])
    F = [_random_box(rng, -3.0, 3.0, 1.5) for _ in range(rng.integers(1, 4))]
    element = FellBasisElement(C, tuple(F))
    try:
        H, u = ukv_refines_fell(element)
    except EmptyBasis:
        return 0, 0

    members = failures = 0
    radius = float(u.radius[0])
    for _ in range(probes):
        near = H.points[:, 0] + rng.uniform(-0.99, 0.99, size=len(H)) * radius
        extra = _fill_outside(rng, H.window, u.K, int(rng.integers(0, 8)))
        L = PointSetWindowed(np.unique(np.concatenate([near, extra])), H.window)
        if not ukv_related(L, H, u):
            continue
        members += 1
        failures += not element.contains(L)
    return members, failures


def fell_lemma_trials(direction: str, samples: int, rng: np.random.Generator,
                      probes: int = 10) -> FellTrialReport:
    """
    Randomized check of one Fell conversion contract in 1D.

    "fell-refines-ukv": every sampled L in 𝒰(C, F) built from (H, K, V) is
    U_{K,V}-related to H. "ukv-refines-fell": every sampled L that is
    U_{K,V}-related to the constructed H lies in 𝒰(C, F).

    Args:
        direction: "fell-refines-ukv" or "ukv-refines-fell".
        samples: Random instances.
        rng: Seeded generator.
        probes: Closed-set probes per instance.
    """
    trials = {"fell-refines-ukv": _fell_refines_ukv_trial, "ukv-refines-fell": _ukv_refines_fell_trial}
    if direction not in trials:
        raise ValueError(f"❌ Unknown direction '{direction}'. Valid directions: {list(trials)}")
    members = failures = 0
    for _ in range(samples):
        m, f = trials[direction](rng, probes)
        members += m
        failures += f
    return FellTrialReport(direction, samples, members, failures)
