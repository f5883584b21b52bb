"""
Autocorrelation Module
Van Hove averaging of reflect(ω_B) ∗ ω_B, boundary-term diagnostics, and the
closed formula γ_{σ,m} over an empirical hull measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from src.errors import NonFLCWithZeroBinning, RangeExceeded, SigmaNotNormalized
from src.generators import CombGenerator
from src.geometry import Box, as_points
from src.measures import (
    REAL_LINE,
    GroupSpec,
    TestFunction,
    WeightedComb,
    _accumulate,
    correlate_test_functions,
    f_phi_at,
    neighbor_pairs,
    translate,
)
from src.utils.workers import parallel_map

EXACT_RESOLUTION = 1e-9    # distance matching grid when ε = 0
DISTINCT_DISTANCE_LIMIT = 20.0  # distinct distances per unit range before ε = 0 is refused
BLOCK_SIZE = 2048          # x-partition size; fixed so reductions do not depend on workers
TIE_TOLERANCE = 1e-2       # relative slack between consecutive boundary terms


# =============================================================================
# VAN HOVE SEQUENCES
# =============================================================================

def boundary_ratio(B: Box, K: Box) -> float:
    """
    |∂ᴷB| / |B| for boxes, with ∂ᴷB = cl((B+K)∖B) ∪ ((cl(G∖B) − K) ∩ B).

    The outer part is (B+K) ∖ B, the inner part is B ∖ (B ⊖ K); both are
    differences of boxes, so the volume is exact.
    """
    volume = B.volume()
    if volume <= 0:
        raise ValueError("❌ B must have positive volume")
    grown = B.minkowski_sum(K)
    outer = grown.volume() - grown.intersect(B).volume()
    eroded = B.erode(K)
    inner = volume - (0.0 if eroded.is_empty("closed") else eroded.intersect(B).volume())
    return (outer + inner) / volume


@dataclass(frozen=True)
class VanHoveSequence:
    """Increasing boxes B_0 ⊂ B_1 ⊂ … with a probe K for boundary ratios."""

    boxes: tuple[Box, ...]
    probe: Box = field(default_factory=lambda: Box.interval(-1.0, 1.0))

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if not self.boxes:
            raise ValueError("❌ A van Hove sequence needs at least one box")
        for small, large in zip(self.boxes, self.boxes[1:]):
            if not (np.all(large.lo <= small.lo) and np.all(large.hi >= small.hi)) or large == small:
                raise ValueError("❌ Van Hove boxes must be strictly increasing")

    @classmethod
    def geometric(cls, base: float = 100.0, factor: float = 2.0, n_max: int = 8, dim: int = 1,
                  start: float = 0.0, probe: Box | None = None) -> "VanHoveSequence":
        """Boxes [start, start + base·factor^n)^d for n = 0..n_max."""
        boxes = tuple(
            Box(tuple([start] * dim), tuple([start + base * factor ** n] * dim)) for n in range(n_max + 1)
        )
        probe = probe or Box(tuple([-1.0] * dim), tuple([1.0] * dim))
        return cls(boxes, probe)

    def __len__(self) -> int:
        return len(self.boxes)

    @property
    def largest(self) -> Box:
        return self.boxes[-1]

    def ratios(self, probe: Box | None = None) -> list[float]:
        return [boundary_ratio(B, probe or self.probe) for B in self.boxes]


# =============================================================================
# AUTOCORRELATION
# =============================================================================

@dataclass(frozen=True, eq=False)
class Autocorrelation:
    """
    Coefficients z ↦ η(z) of a finite-volume autocorrelation.

    Support points are multiples of ``step`` (the binning width, the exact
    matching grid, or the lattice spacing), sorted lexicographically.
    """
    support: np.ndarray
    coefficients: np.ndarray
    epsilon: float
    range: float
    volume: float
    step: float
    n: int | None = None
    group: GroupSpec = REAL_LINE
    lattice_spacing: float | None = None
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        support = as_points(self.support, self.group.dim) if np.size(self.support) else np.zeros((0, self.group.dim))
        coefficients = np.asarray(self.coefficients, dtype=complex).reshape(-1)
        if len(support) != len(coefficients):
            raise ValueError("❌ Support and coefficients differ in length")
        order = np.lexsort(support.T[::-1]) if len(support) else np.zeros(0, dtype=int)
        support, coefficients = support[order], coefficients[order]
        support.setflags(write=False)
        coefficients.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coefficients", coefficients)
        keys = np.round(support / self.step).astype(np.int64)
        object.__setattr__(self, "_index", {tuple(k): i for i, k in enumerate(keys)})

    @classmethod
    def delta(cls, dim: int = 1, R: float = 1.0, group: GroupSpec = REAL_LINE) -> "Autocorrelation":
        """γ = δ_0."""
        return cls(np.zeros((1, dim)), np.ones(1), 0.0, R, 1.0, 1.0, None, group)

    @property
    def dim(self) -> int:
        return self.group.dim

    def __len__(self) -> int:
        return len(self.coefficients)

    def eta(self, z) -> np.ndarray:
        """η at the given displacements (0 where z carries no mass)."""
        zs = as_points(z, self.dim)
        keys = np.round(zs / self.step).astype(np.int64)
        out = np.zeros(len(zs), dtype=complex)
        tol = np.maximum(0.5 * self.epsilon, EXACT_RESOLUTION * (1.0 + np.max(np.abs(zs), axis=1)))
        for i, (key, zi) in enumerate(zip(keys, zs)):
            idx = self._index.get(tuple(key))
            if idx is not None and np.all(np.abs(self.support[idx] - zi) <= tol[i]):
                out[i] = self.coefficients[idx]
        return out

    def hermitian_defect(self) -> float:
        """max |η(−z) − conj(η(z))|."""
        if len(self) == 0:
            return 0.0
        return float(np.max(np.abs(self.eta(-self.support) - np.conj(self.coefficients))))

    def restricted(self, R: float) -> "Autocorrelation":
        mask = np.all(np.abs(self.support) <= R + EXACT_RESOLUTION, axis=1)
        return Autocorrelation(self.support[mask], self.coefficients[mask], self.epsilon, R,
                               self.volume, self.step, self.n, self.group, self.lattice_spacing)


def _lattice_autocorrelation(comb: WeightedComb, offset: np.ndarray, spacing: np.ndarray,
                             R: float, epsilon: float, n: int | None) -> Autocorrelation:
    """FFT path for lattice-supported combs; symmetrized so η(−z) = conj(η(z)) exactly."""
    idx = np.round((comb.points - offset) / spacing).astype(np.int64)
    shape = idx.max(axis=0) + 1
    lags = np.floor(R / spacing + 1e-9).astype(np.int64)
    padded = tuple(scipy.fft.next_fast_len(int(s + l + 1)) for s, l in zip(shape, lags))
    grid = np.zeros(tuple(shape), dtype=complex)
    grid[tuple(idx.T)] = comb.weights
    spectrum = scipy.fft.fftn(grid, s=padded)
    corr = scipy.fft.ifftn(np.conj(spectrum) * spectrum)

    axes = [np.arange(-l, l + 1) for l in lags]
    if comb.dim == 1:
        offsets = axes[0].reshape(-1, 1)
    else:
        xx, yy = np.meshgrid(*axes, indexing="ij")
        offsets = np.column_stack([xx.ravel(), yy.ravel()])
    forward = corr[tuple((offsets % np.array(padded)).T)]
    backward = corr[tuple((-offsets % np.array(padded)).T)]
    values = 0.5 * (forward + np.conj(backward)) / comb.volume
    step = float(spacing[0]) if comb.dim == 1 or spacing[0] == spacing[1] else float(np.min(spacing))
    return Autocorrelation(offsets * spacing, values, epsilon, R, comb.volume, step, n, comb.group, step)


def _pair_block(comb: WeightedComb, start: int, stop: int, reach: float, grid: float, R: float):
    """Binned pair contributions of x in points[start:stop] (keys, values)."""
    xs = comb.points[start:stop]
    qi, pj = neighbor_pairs(xs, comb.points, reach)
    diff = comb.points[pj] - xs[qi]
    keys = np.round(diff / grid).astype(np.int64)
    keep = np.all(np.abs(keys * grid) <= R + EXACT_RESOLUTION, axis=1)
    values = np.conj(comb.weights[start:stop][qi[keep]]) * comb.weights[pj[keep]]
    return keys[keep], values


def autocorrelation_of(comb: WeightedComb, epsilon: float, R: float, n: int | None = None,
                       workers: int | None = None) -> Autocorrelation:
    """
    η(z) = (1/|B|) Σ_{x,y ∈ B, y−x ∈ z ± ε/2} conj(w_x) w_y for |z| ≤ R.

    Lattice-supported combs (with ε below half the spacing) go through an
    FFT; the support is then the exact lattice displacements. Otherwise
    pairs are enumerated per x-partition and reduced in partition order.

    Raises:
        NonFLCWithZeroBinning: If ε = 0 and the distinct distances explode.
    """
    if epsilon < 0:
        raise ValueError(f"❌ Binning epsilon must be ≥ 0, got {epsilon}")
    if len(comb) == 0:
        return Autocorrelation(np.zeros((0, comb.dim)), np.zeros(0), epsilon, R, comb.volume,
                               epsilon or EXACT_RESOLUTION, n, comb.group)

    structure = comb.lattice_structure()
    if structure is not None and np.all(epsilon < 0.5 * structure[1]):
        return _lattice_autocorrelation(comb, structure[0], structure[1], R, epsilon, n)

    grid = epsilon if epsilon > 0 else EXACT_RESOLUTION
    reach = R + 0.5 * grid
    blocks = [(s, min(s + BLOCK_SIZE, len(comb))) for s in range(0, len(comb), BLOCK_SIZE)]
    parts = parallel_map(lambda b: _pair_block(comb, b[0], b[1], reach, grid, R), blocks, workers)
    keys = np.concatenate([p[0] for p in parts])
    values = np.concatenate([p[1] for p in parts])
    unique, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)

    if epsilon == 0:
        limit = DISTINCT_DISTANCE_LIMIT * max(1.0, comb.density()) * (2 * R + 1) ** comb.dim
        if len(unique) > limit:
            raise NonFLCWithZeroBinning(
                f"❌ {len(unique)} distinct distances within range {R}: the comb is not FLC, use ε > 0"
            )
    sums = _accumulate(inverse, values, len(unique)) / comb.volume
    return Autocorrelation(unique * grid, sums, epsilon, R, comb.volume, grid, n, comb.group)


def autocorr_van_hove(gen: CombGenerator, seq: VanHoveSequence, epsilon: float, R: float,
                      workers: int | None = None) -> list[Autocorrelation]:
    """
    γ_n for every box of the sequence.

    Raises:
        RangeExceeded: If R > diam(B_1)/2.
    """
    first = seq.boxes[1] if len(seq) > 1 else seq.boxes[0]
    if R > first.diameter / 2:
        raise RangeExceeded(f"❌ Range {R} exceeds diam(B_1)/2 = {first.diameter / 2}")
    return [
        autocorrelation_of(gen.produce(B), epsilon, R, n, workers) for n, B in enumerate(seq.boxes)
    ]


def cauchy_residuals(sequence: list[Autocorrelation]) -> list[float]:
    """sup_z |η_{n+1}(z) − η_n(z)| over the union of supports."""
    residuals = []
    for a, b in zip(sequence, sequence[1:]):
        support = np.concatenate([a.support, b.support]) if len(a) + len(b) else np.zeros((0, a.dim))
        if len(support) == 0:
            residuals.append(0.0)
            continue
        residuals.append(float(np.max(np.abs(b.eta(support) - a.eta(support)))))
    return residuals


def thue_morse_eta(z_max: int) -> np.ndarray:
    """Exact η(0..z_max) of the ±1 Thue–Morse comb from the doubling recursion."""
    eta = np.zeros(2 * z_max + 2)
    eta[0] = 1.0
    eta[1] = -1.0 / 3.0
    for z in range(2, len(eta)):
        half = z // 2
        eta[z] = eta[half] if z % 2 == 0 else -(eta[half] + eta[half + 1]) / 2.0
    return eta[: z_max + 1]


# =============================================================================
# BOUNDARY TERMS
# =============================================================================

def _materialize(measure, window: Box) -> WeightedComb:
    if isinstance(measure, CombGenerator):
        return measure.produce(window)
    return measure


def eberlein_boundary_check(mu, nu, B: Box, phi: TestFunction, reflected: bool = True) -> float:
    """
    Boundary term of van Hove averaging on B.

    With ``reflected`` (the form entering the autocorrelation argument):
    (1/|B|)|((μ_B)~ ∗ ν_B − μ̃ ∗ ν_B)(φ)| = (1/|B|)|Σ_{x∉B, y∈B} conj(w_x) v_y φ(y − x)|.
    Otherwise (1/|B|)|(μ_B ∗ ν_B − μ ∗ ν_B)(φ)| = (1/|B|)|Σ_{x∉B, y∈B} w_x v_y φ(x + y)|.

    Args:
        mu: CombGenerator or a comb already covering B ⊕ supp φ.
        nu: CombGenerator or comb covering B.
        B: Averaging box.
        phi: Test function.
        reflected: Which of the two forms to evaluate.
    """
    support = phi.support()
    reach = support.negate() if reflected else support
    outer = B.minkowski_sum(reach).expand(1e-9)
    full_mu = _materialize(mu, Box(tuple(np.minimum(outer.lo, B.lo)), tuple(np.maximum(outer.hi, B.hi))))
    inner_nu = _materialize(nu, B).restrict(B)
    outside = ~B.contains(full_mu.points)
    xs, wx = full_mu.points[outside], full_mu.weights[outside]
    if len(xs) == 0 or len(inner_nu) == 0:
        return 0.0
    ys, wy = inner_nu.points, inner_nu.weights

    if reflected:
        # y − x ∈ supp φ  ⇔  x ∈ y − c ± h
        qi, pj = neighbor_pairs(ys - phi.c, xs, phi.h)
        total = np.sum(np.conj(wx[pj]) * wy[qi] * phi(ys[qi] - xs[pj]))
    else:
        qi, pj = neighbor_pairs(phi.c - ys, xs, phi.h)
        total = np.sum(wx[pj] * wy[qi] * phi(xs[pj] + ys[qi]))
    return float(abs(total) / full_mu.group.haar(B))


@dataclass(frozen=True)
class BoundaryFit:
    values: list[float]
    ratios: list[float]
    constant: float
    decreasing: bool


def boundary_series(mu, nu, seq: VanHoveSequence, phi: TestFunction, first: int = 2) -> BoundaryFit:
    """
    Boundary terms along the sequence with the single constant c = max value/ratio.

    ``decreasing`` means non-increasing step to step up to TIE_TOLERANCE
    (relative) with a strict overall drop; an identically zero series
    counts as decreasing.
    """
    values = [eberlein_boundary_check(mu, nu, B, phi) for B in seq.boxes[first:]]
    ratios = [boundary_ratio(B, phi.support()) for B in seq.boxes[first:]]
    constant = max(v / r for v, r in zip(values, ratios)) if ratios else 0.0
    steps = all(b <= a * (1.0 + TIE_TOLERANCE) for a, b in zip(values, values[1:]))
    vanishing = not values or max(values) == 0.0
    decreasing = steps and (vanishing or values[-1] < values[0])
    return BoundaryFit(values, ratios, constant, decreasing)


# =============================================================================
# CLOSED FORMULA
# =============================================================================

def kronecker_shifts(count: int, dim: int = 1) -> np.ndarray:
    """
    Low-discrepancy points frac(i·α) in [0, 1)^dim for i = 1..count.

    α_j = g^{−(j+1)} with g the positive root of x^{dim+1} = x + 1, so the 1D
    case is the golden rotation.
    """
    g = 2.0
    for _ in range(64):
        g = (1.0 + g) ** (1.0 / (dim + 1))
    alpha = g ** -np.arange(1, dim + 1, dtype=float)
    i = np.arange(1, count + 1, dtype=float).reshape(-1, 1)
    return np.mod(i * alpha, 1.0)


@dataclass(frozen=True, eq=False)
class EmpiricalHullMeasure:
    """
    Uniform average over samples α_{−s_i} ω restricted to a sample window.

    When built from one master comb the translates are kept implicit
    (``master`` and ``shifts``); ``samples`` materializes them on demand.
    """
    sample_window: Box
    master: WeightedComb | None = None
    shifts: np.ndarray | None = None
    explicit: tuple[WeightedComb, ...] = ()

    @classmethod
    def from_generator(cls, gen: CombGenerator, length: float, count: int, sample_window: Box) -> "EmpiricalHullMeasure":
        """Translates of gen's comb at the Kronecker shifts s_i = frac(i·α)·length, i = 1..count."""
        shifts = kronecker_shifts(count, sample_window.dim) * length
        master_window = Box(tuple(sample_window.lo), tuple(sample_window.hi + length))
        return cls(sample_window, gen.produce(master_window), shifts)

    @classmethod
    def of_samples(cls, samples) -> "EmpiricalHullMeasure":
        samples = tuple(samples)
        if not samples:
            raise ValueError("❌ An empirical hull measure needs at least one sample")
        window = samples[0].window
        for s in samples:
            if s.group != samples[0].group or not np.allclose(s.window.widths, window.widths):
                raise ValueError("❌ All samples must share group and window shape")
        return cls(window, explicit=samples)

    @property
    def size(self) -> int:
        return len(self.shifts) if self.master is not None else len(self.explicit)

    @property
    def samples(self) -> tuple[WeightedComb, ...]:
        if self.master is None:
            return self.explicit
        return tuple(
            translate(self.master.restrict(self.sample_window.shift(s)), -s) for s in self.shifts
        )


def autocorr_closed_formula(m: EmpiricalHullMeasure, sigma: TestFunction, phi: TestFunction) -> complex:
    """
    γ_{σ,m}(φ) = (1/M) Σ_i Σ_{t∈ω_i} w_t σ(t) (φ ∗ ω̄_i)(t).

    Raises:
        SigmaNotNormalized: If ∫σ differs from 1 by more than 1e−9.
    """
    group = m.master.group if m.master is not None else m.explicit[0].group
    if abs(sigma.integral(group) - 1.0) > 1e-9:
        raise SigmaNotNormalized(f"❌ ∫σ = {sigma.integral(group)} (must be 1)")

    if m.master is None:
        total = 0j
        for sample in m.explicit:
            inside = sigma.support().contains(sample.points, mode="closed")
            ts = sample.points[inside]
            if len(ts) == 0:
                continue
            smeared = np.atleast_1d(f_phi_at(phi, sample.conjugate(), ts))
            total += np.sum(sample.weights[inside] * sigma(ts) * smeared)
        return complex(total / m.size)

    # Σ_i σ(t − s_i) over the master points, then one smearing pass.
    master = m.master
    qi, pj = neighbor_pairs(m.shifts + sigma.c, master.points, sigma.h)
    weight = _accumulate(pj, sigma(master.points[pj] - m.shifts[qi]).astype(complex), len(master))
    active = np.flatnonzero(weight != 0)
    if len(active) == 0:
        return 0j
    smeared = np.atleast_1d(f_phi_at(phi, master.conjugate(), master.points[active]))
    return complex(np.sum(master.weights[active] * weight[active] * smeared) / m.size)


# =============================================================================
# PAIRING
# =============================================================================

def pairing(gamma: Autocorrelation, phi: TestFunction, psi: TestFunction, t=0.0) -> np.ndarray | complex:
    """
    (φ̃ ∗ ψ ∗ γ)(t) = Σ_z η(z) (φ̃ ∗ ψ)(t − z), vectorized over t.

    Raises:
        RangeExceeded: If the needed z leave the range of γ.
    """
    ts = as_points(t, gamma.dim)
    single = np.ndim(t) == 0 or (np.ndim(t) == 1 and gamma.dim > 1 and len(ts) == 1)
    shift = psi.c - phi.c
    radius = phi.h + psi.h
    reach = np.max(np.abs(ts - shift), axis=0) + radius
    if np.any(reach > gamma.range + 1e-9):
        raise RangeExceeded(f"❌ Pairing needs |z| ≤ {reach.max()}, autocorrelation range is {gamma.range}")

    qi, zj = neighbor_pairs(ts - shift, gamma.support, radius)
    kernel = correlate_test_functions(phi, psi, ts[qi] - gamma.support[zj], gamma.group)
    values = _accumulate(qi, gamma.coefficients[zj] * kernel, len(ts))
    return complex(values[0]) if single else values


def quadratic_form(gamma: Autocorrelation, phi: TestFunction, ts, coefficients) -> float:
    """Σ_{i,j} c_i conj(c_j) (φ̃ ∗ φ ∗ γ)(t_i − t_j); real part of a positive semidefinite form."""
    ts = as_points(ts, gamma.dim)
    c = np.asarray(coefficients, dtype=complex)
    diffs = (ts[:, None, :] - ts[None, :, :]).reshape(-1, gamma.dim)
    matrix = np.asarray(pairing(gamma, phi, phi, diffs)).reshape(len(ts), len(ts))
    return float(np.real(c @ matrix @ np.conj(c)))
