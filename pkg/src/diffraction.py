"""
Diffraction Module
Structure factors, Bragg-atom extraction, the purity ratio, the Wiener
oracle and the spectral-mass checks that tie γ̂ to the dynamical spectrum.

Fourier convention: φ̂(k) = ∫ φ(x) e^{−2πik·x} dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from scipy import ndimage, optimize

from src.autocorrelation import Autocorrelation, VanHoveSequence, autocorrelation_of, pairing
from src.errors import AtomRejected, GridTooCoarse, RangeExceeded, ZeroDenominator
from src.generators import CombGenerator
from src.geometry import Box, as_points
from src.measures import TestFunction, WeightedComb
from src.quadratic import FIELDS, GOLDEN, ModuleMatch, dyadic_membership, module_membership
from src.utils.workers import parallel_map

# Gaussian gridding parameters (12 digits)
NUFFT_OVERSAMPLING = 2
NUFFT_SPREAD = 12
DIRECT_CHUNK = 1 << 22


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True)
class Atom:
    k: tuple[float, ...]
    intensity: float
    residual: float


@dataclass(frozen=True)
class DiffractionSpectrum:
    """Accepted Bragg atoms, sorted by intensity (descending), plus scan diagnostics."""

    atoms: tuple[Atom, ...]
    scan: dict = field(default_factory=dict)
    purity: float | None = None
    total_mass_proxy: float = 0.0
    density: float = 0.0

    def __post_init__(self):
        atoms = tuple(sorted(self.atoms, key=lambda a: (-a.intensity, a.k)))
        if any(a.intensity < 0 for a in atoms):
            raise ValueError("❌ Atom intensities must be nonnegative")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "total_mass_proxy", float(sum(a.intensity for a in atoms)))

    @property
    def dim(self) -> int:
        return len(self.atoms[0].k) if self.atoms else int(self.scan.get("dim", 1))

    @property
    def ks(self) -> np.ndarray:
        return np.array([a.k for a in self.atoms]).reshape(-1, self.dim)

    @property
    def intensities(self) -> np.ndarray:
        return np.array([a.intensity for a in self.atoms])

    def max_intensity(self) -> float:
        return float(self.intensities.max()) if self.atoms else 0.0

    def top(self, count: int) -> list[Atom]:
        return list(self.atoms[:count])

    def in_box(self, box: Box) -> list[Atom]:
        """Atoms with k in the half-open box."""
        if not self.atoms:
            return []
        mask = box.contains(self.ks)
        return [a for a, keep in zip(self.atoms, mask) if keep]

    def with_purity(self, value: float) -> "DiffractionSpectrum":
        return DiffractionSpectrum(self.atoms, self.scan, value, density=self.density)


@dataclass(frozen=True)
class SpectralMassReport:
    k: tuple[float, ...]
    lhs: float
    rhs: float
    rel_error: float


@dataclass(frozen=True)
class AtomEstimate:
    intensity: float
    residual: float
    accepted: bool
    history: tuple[float, ...]


# =============================================================================
# STRUCTURE FACTORS
# =============================================================================

def _direct_sums(points: np.ndarray, weights: np.ndarray, ks: np.ndarray) -> np.ndarray:
    """S(k) = Σ_x w_x e^{−2πik·x}, chunked over k."""
    out = np.empty(len(ks), dtype=complex)
    rows = max(1, DIRECT_CHUNK // max(1, len(points)))
    for start in range(0, len(ks), rows):
        block = ks[start:start + rows]
        phase = block @ points.T
        out[start:start + rows] = np.exp(-2j * np.pi * phase) @ weights
    return out


def _lattice_grid_sums(comb: WeightedComb, weights: np.ndarray, offset: np.ndarray, spacing: np.ndarray,
                       k0: np.ndarray, periods: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """
    S on the grid k0 + m/(spacing·P) (per axis) for a lattice-supported comb.

    One FFT of length P per axis covers a full period 1/spacing; the grid
    is then read periodically. Sites beyond P are folded (exact aliasing).
    """
    idx = np.round((comb.points - offset) / spacing).astype(np.int64)
    folded = np.zeros(tuple(periods), dtype=complex)
    phase = np.mod(idx * (k0 * spacing), 1.0)
    modulated = weights * np.exp(-2j * np.pi * np.sum(phase, axis=1))
    np.add.at(folded, tuple((idx % periods).T), modulated)
    spectrum = scipy.fft.fftn(folded)
    axes = [np.arange(c) % p for c, p in zip(counts, periods)]
    return spectrum[np.ix_(*axes)].reshape(-1)


def nufft_grid_sums(points: np.ndarray, weights: np.ndarray, k0: float, dk: float, count: int) -> np.ndarray:
    """
    S(k0 + m·dk), m = 0..count−1, for arbitrary 1D points by Gaussian gridding.

    The sum is rewritten as a type-1 non-uniform FFT centred at the middle
    frequency, spread onto an oversampled periodic grid with a Gaussian,
    transformed, and deconvolved.
    """
    x = points[:, 0]
    middle = count // 2
    kc = k0 + middle * dk
    c = weights * np.exp(-2j * np.pi * np.mod(kc * x, 1.0))
    xp = 2 * np.pi * np.mod(dk * x, 1.0)

    Mr = scipy.fft.next_fast_len(NUFFT_OVERSAMPLING * count)
    R = Mr / count
    tau = np.pi * NUFFT_SPREAD / (count * count * R * (R - 0.5))
    h = 2 * np.pi / Mr

    nearest = np.floor(xp / h).astype(np.int64)
    offsets = np.arange(-NUFFT_SPREAD + 1, NUFFT_SPREAD + 1)
    cells = nearest[:, None] + offsets[None, :]
    kernel = np.exp(-((cells * h - xp[:, None]) ** 2) / (4 * tau))
    contributions = (c[:, None] * kernel).reshape(-1)
    slots = np.mod(cells, Mr).reshape(-1)
    grid = np.bincount(slots, weights=contributions.real, minlength=Mr) + 1j * np.bincount(
        slots, weights=contributions.imag, minlength=Mr
    )

    transformed = scipy.fft.fft(grid) / Mr
    ell = np.arange(count) - middle
    return np.sqrt(np.pi / tau) * np.exp(ell * ell * tau) * transformed[np.mod(ell, Mr)]


def structure_factor(source, B: Box, k) -> np.ndarray | float:
    """
    I_B(k) = (1/|B|) |Σ_{x∈B} w_x e^{−2πik·x}|², vectorized over k.

    Args:
        source: CombGenerator (produced on B) or a WeightedComb (restricted to B).
        B: Box.
        k: One wave vector or an (m, d) array.
    """
    comb = source.produce(B) if isinstance(source, CombGenerator) else source.restrict(B)
    ks = as_points(k, comb.dim)
    single = np.ndim(k) == 0 or (np.ndim(k) == 1 and comb.dim > 1 and len(ks) == 1)
    values = np.abs(_direct_sums(comb.points, comb.weights, ks)) ** 2 / comb.volume
    return float(values[0]) if single else values


def atom_intensity(comb: WeightedComb, k) -> np.ndarray:
    """I_B(k)/|B| = |(1/|B|) Σ w_x e^{−2πik·x}|²."""
    ks = as_points(k, comb.dim)
    return np.abs(_direct_sums(comb.points, comb.weights, ks)) ** 2 / comb.volume ** 2


def _taper(comb: WeightedComb) -> np.ndarray:
    """Hann taper Π sin²(π(x − a)/L) over the window."""
    rel = (comb.points - comb.window.lo) / comb.window.widths
    return np.prod(np.sin(np.pi * rel) ** 2, axis=1)


def grid_intensity(comb: WeightedComb, k0, step, counts, tapered: bool = False,
                   method: str = "auto") -> tuple[np.ndarray, list[np.ndarray], str]:
    """
    Normalized intensities on a uniform k-grid.

    Args:
        comb: Comb on its window.
        k0: Lower grid corner (per axis).
        step: Requested grid step (per axis); the lattice path may refine it.
        counts: Grid points per axis.
        tapered: Use the Hann-tapered comb (suppresses side lobes).
        method: "auto", "lattice-fft", "nufft" or "direct".

    Returns:
        tuple: (intensities with shape counts, per-axis k coordinates, method used).
    """
    dim = comb.dim
    k0 = np.broadcast_to(np.asarray(k0, dtype=float), (dim,)).copy()
    step = np.broadcast_to(np.asarray(step, dtype=float), (dim,)).copy()
    counts = np.broadcast_to(np.asarray(counts, dtype=np.int64), (dim,)).copy()
    weights = comb.weights * _taper(comb) if tapered else comb.weights
    norm = comb.volume * (0.5 ** dim if tapered else 1.0)

    structure = comb.lattice_structure()
    if method == "auto":
        if structure is not None:
            method = "lattice-fft"
        elif dim == 1 and counts[0] >= 64:
            method = "nufft"
        else:
            method = "direct"

    if len(comb) == 0:
        axes = [k0[i] + step[i] * np.arange(counts[i]) for i in range(dim)]
        return np.zeros(tuple(counts)), axes, method

    if method == "lattice-fft":
        if structure is None:
            raise ValueError("❌ lattice-fft needs a lattice-supported comb")
        offset, spacing = structure
        periods = np.array([scipy.fft.next_fast_len(int(math.ceil(1.0 / (s * d) - 1e-9)))
                            for s, d in zip(spacing, step)])
        refined = 1.0 / (spacing * periods)
        counts = np.floor((counts - 1) * step / refined + 1e-9).astype(np.int64) + 1
        step = refined
        sums = _lattice_grid_sums(comb, weights, offset, spacing, k0, periods, counts)
    elif method == "nufft":
        sums = nufft_grid_sums(comb.points, weights, float(k0[0]), float(step[0]), int(counts[0]))
    else:
        axes = [k0[i] + step[i] * np.arange(counts[i]) for i in range(dim)]
        if dim == 1:
            ks = axes[0].reshape(-1, 1)
        else:
            xx, yy = np.meshgrid(*axes, indexing="ij")
            ks = np.column_stack([xx.ravel(), yy.ravel()])
        sums = _direct_sums(comb.points, weights, ks)

    axes = [k0[i] + step[i] * np.arange(counts[i]) for i in range(dim)]
    intensity = (np.abs(sums) ** 2 / norm ** 2).reshape(tuple(counts))
    return intensity, axes, method


# =============================================================================
# ATOMS
# =============================================================================

def _estimate(combs: list[WeightedComb], k: np.ndarray, tol: float, floor: float) -> AtomEstimate:
    history = tuple(float(atom_intensity(c, k)[0]) for c in combs)
    last = history[-1]
    changes = [abs(b - a) for a, b in zip(history, history[1:])]
    if last > 0:
        residual = max(changes) / last if changes else 0.0
    else:
        residual = 0.0 if not any(changes) else float("inf")
    return AtomEstimate(last, residual, residual <= tol and last >= floor, history)


def default_floor(gen: CombGenerator) -> float:
    return 1e-4 * gen.density ** 2


def atom_estimate(gen: CombGenerator, seq: VanHoveSequence, k, tol: float = 0.05,
                  floor: float | None = None) -> AtomEstimate:
    """
    Intensity I_{B_nmax}(k)/|B_nmax| and its stability over the last three boxes.

    Accepted iff the residual (max relative change) is ≤ tol and the
    intensity is ≥ floor (default 1e−4·density²).
    """
    k = as_points(k, gen.dim)
    floor = default_floor(gen) if floor is None else floor
    combs = [gen.produce(B) for B in seq.boxes[-3:]]
    return _estimate(combs, k, tol, floor)


def _local_maxima(values: np.ndarray) -> np.ndarray:
    if values.ndim == 1:
        inner = (values[1:-1] > values[:-2]) & (values[1:-1] >= values[2:])
        peaks = np.flatnonzero(inner) + 1
        edges = [i for i in (0, len(values) - 1) if len(values) > 1 and
                 values[i] > values[1 if i == 0 else i - 1]]
        return np.sort(np.concatenate([peaks, np.array(edges, dtype=np.int64)])).reshape(-1, 1)
    maxed = ndimage.maximum_filter(values, size=3, mode="nearest")
    return np.argwhere((values == maxed) & (values > 0))


def _refine(comb: WeightedComb, start: np.ndarray, step: np.ndarray, tol: float) -> np.ndarray:
    """Bounded scalar maximization of the untapered intensity around ``start``, axis by axis."""
    k = start.astype(float).copy()
    for _ in range(1 if comb.dim == 1 else 2):
        for axis in range(comb.dim):
            def negative(value, axis=axis):
                probe = k.copy()
                probe[axis] = value
                return -float(atom_intensity(comb, probe.reshape(1, -1))[0])

            result = optimize.minimize_scalar(
                negative,
                bounds=(start[axis] - step[axis], start[axis] + step[axis]),
                method="bounded",
                options={"xatol": tol},
            )
            if -result.fun >= -negative(k[axis]):
                k[axis] = result.x
    return k


def peak_scan(gen: CombGenerator, seq: VanHoveSequence, k_range, coarse_step: float | None = None,
              refine_tol: float = 1e-7, residual_tol: float = 0.05, floor: float | None = None,
              max_candidates: int = 400, workers: int | None = None) -> DiffractionSpectrum:
    """
    Bragg atoms of gen in ``k_range``.

    Coarse grid on the largest box (lattice FFT, Gaussian-gridding NUFFT or
    direct sums), local maxima of the Hann-tapered intensity as candidates,
    bounded refinement on the untapered intensity, acceptance by
    atom_estimate, deduplication within 2·refine_tol.

    Args:
        gen: Generator.
        seq: Van Hove sequence (at least three boxes).
        k_range: Box in k-space, or a (low, high) pair in 1D.
        coarse_step: Grid step; default 1/(4·diam(B_nmax)).
        refine_tol: Refinement tolerance in k.
        residual_tol: Atom acceptance residual.
        floor: Intensity floor (default 1e−4·density²).
        max_candidates: Strongest candidates kept for refinement.
        workers: Thread count for refinement.

    Raises:
        GridTooCoarse: If coarse_step > 1/(2·diam(B_nmax)).
    """
    if len(seq) < 3:
        raise ValueError("❌ Atom acceptance needs at least three van Hove boxes")
    if not isinstance(k_range, Box):
        k_range = Box.interval(*k_range)
    largest = seq.largest
    diam = largest.diameter
    step_limit = 1.0 / (2.0 * diam)
    coarse_step = coarse_step if coarse_step is not None else 1.0 / (4.0 * diam)
    if coarse_step > step_limit * (1 + 1e-12):
        raise GridTooCoarse(f"❌ Coarse step {coarse_step} exceeds 1/(2·diam) = {step_limit}")
    floor = default_floor(gen) if floor is None else floor

    combs = [gen.produce(B) for B in seq.boxes[-3:]]
    comb = combs[-1]
    counts = np.floor(k_range.widths / coarse_step + 1e-9).astype(np.int64) + 1
    tapered, axes, method = grid_intensity(comb, k_range.lo, coarse_step, counts, tapered=True)

    peaks = _local_maxima(tapered)
    values = tapered[tuple(peaks.T)] if len(peaks) else np.zeros(0)
    keep = values >= 0.25 * floor
    peaks, values = peaks[keep], values[keep]
    order = np.argsort(-values, kind="stable")[:max_candidates]
    peaks = peaks[order]
    grid_step = np.array([a[1] - a[0] if len(a) > 1 else coarse_step for a in axes])
    starts = [np.array([axes[i][p[i]] for i in range(comb.dim)]) for p in peaks]

    refined = parallel_map(lambda s: _refine(comb, s, grid_step, refine_tol), starts, workers)
    estimates = parallel_map(lambda k: _estimate(combs, k.reshape(1, -1), residual_tol, floor), refined, workers)

    accepted = [(k, e) for k, e in zip(refined, estimates)
                if e.accepted and k_range.contains(k.reshape(1, -1), mode="closed")[0]]
    accepted.sort(key=lambda item: tuple(item[0]))
    atoms: list[Atom] = []
    for k, e in accepted:
        if atoms and np.max(np.abs(np.array(atoms[-1].k) - k)) <= 2 * refine_tol:
            if e.intensity > atoms[-1].intensity:
                atoms[-1] = Atom(tuple(float(v) for v in k), e.intensity, e.residual)
            continue
        atoms.append(Atom(tuple(float(v) for v in k), e.intensity, e.residual))

    scan = {
        "k_range": k_range.to_list(),
        "coarse_step": float(grid_step.min()),
        "box": largest.to_list(),
        "method": method,
        "candidates": int(len(starts)),
        "max_candidate_intensity": float(max((e.intensity for e in estimates), default=0.0)),
        "floor": float(floor),
        "residual_tol": float(residual_tol),
        "dim": comb.dim,
    }
    return DiffractionSpectrum(tuple(atoms), scan, density=gen.density)


# =============================================================================
# PURITY & ORACLES
# =============================================================================

def purity(gamma: Autocorrelation, spectrum: DiffractionSpectrum, phi: TestFunction) -> float:
    """
    Σ_atoms |φ̂(k)|² I(k) / (φ̃ ∗ φ ∗ γ)(0).

    Raises:
        ZeroDenominator: If the denominator is ≤ 1e−12.
    """
    denominator = float(np.real(pairing(gamma, phi, phi, np.zeros((1, gamma.dim)))[0]))
    if denominator <= 1e-12:
        raise ZeroDenominator(f"❌ Purity denominator {denominator} is numerically zero")
    if not spectrum.atoms:
        return 0.0
    weights = np.abs(phi.fourier(spectrum.ks, gamma.group)) ** 2
    return float(np.sum(weights * spectrum.intensities) / denominator)


def wiener_oracle(gamma: Autocorrelation, N: int) -> float:
    """
    w_N = (1/(2N+1)) Σ_{|z|≤N} |η(z)|² over lattice displacements z.

    Raises:
        RangeExceeded: If γ does not reach N lattice steps.
    """
    if gamma.dim != 1:
        raise ValueError("❌ The Wiener oracle is implemented for 1D lattices")
    spacing = gamma.lattice_spacing
    if spacing is None:
        raise ValueError("❌ The Wiener oracle needs a lattice-supported autocorrelation")
    if gamma.range < N * spacing - 1e-9:
        raise RangeExceeded(f"❌ Wiener oracle needs range ≥ {N * spacing}, got {gamma.range}")
    keys = np.round(gamma.support[:, 0] / spacing).astype(np.int64)
    mask = np.abs(keys) <= N
    return float(np.sum(np.abs(gamma.coefficients[mask]) ** 2) / (2 * N + 1))


def wiener_cross_check(gen: CombGenerator, spectrum: DiffractionSpectrum, N: int,
                       box_length: float | None = None) -> dict:
    """
    Compares w_N (autocorrelation on a box of length ≫ N) with Σ intensity²
    over the atoms of one period [−1/(2s), 1/(2s)).
    """
    spacing = float(gen.spacing[0])
    box_length = box_length or 128.0 * N * spacing
    comb = gen.produce(Box.interval(0.0, box_length))
    gamma = autocorrelation_of(comb, 0.0, N * spacing)
    w = wiener_oracle(gamma, N)
    period = Box.interval(-0.5 / spacing, 0.5 / spacing)
    atom_sum = float(sum(a.intensity ** 2 for a in spectrum.in_box(period)))
    rel = abs(w - atom_sum) / max(abs(w), 1e-300)
    return {"wiener": w, "atom_sum": atom_sum, "rel_error": rel}


def module_report(spectrum: DiffractionSpectrum, field: str = "golden", bound: int = 20,
                  tol: float = 1e-4) -> list[tuple[float, ModuleMatch | None]]:
    """Exact Z[τ]/√disc membership of every atom (1D)."""
    quadratic = FIELDS.get(field, GOLDEN)
    return [(a.k[0], module_membership(a.k[0], quadratic, bound, tol)) for a in spectrum.atoms]


def dyadic_report(spectrum: DiffractionSpectrum, max_level: int = 10, tol: float = 1e-4) -> list:
    """Dyadic membership m/2^j of every atom (1D)."""
    return [(a.k[0], dyadic_membership(a.k[0], max_level, tol)) for a in spectrum.atoms]


# =============================================================================
# SPECTRAL MASSES
# =============================================================================

def spectral_mass_check(gen: CombGenerator, phi: TestFunction, k, seq: VanHoveSequence,
                        tol: float = 0.05) -> SpectralMassReport:
    """
    |φ̂(k)|²·γ̂({k}) against |W_B(k, φ)|² from Weyl sums on the largest box.

    Raises:
        AtomRejected: If k is not an accepted atom.
    """
    from src.dynamics import weyl_sum

    ks = as_points(k, gen.dim)
    estimate = atom_estimate(gen, seq, ks, tol)
    if not estimate.accepted:
        raise AtomRejected(
            f"❌ k = {ks[0].tolist()} is not an accepted atom (intensity {estimate.intensity:.3e}, "
            f"residual {estimate.residual:.3e})"
        )
    lhs = float(np.abs(phi.fourier(ks, gen.group)[0]) ** 2 * estimate.intensity)
    rhs = float(abs(weyl_sum(gen, phi, ks[0], seq.largest)) ** 2)
    scale = max(lhs, rhs)
    rel = abs(lhs - rhs) / scale if scale > 0 else 0.0
    return SpectralMassReport(tuple(float(v) for v in ks[0]), lhs, rhs, rel)


def approximate_unit_check(gen: CombGenerator, seq: VanHoveSequence, halfwidths, probe: Box,
                           spectrum: DiffractionSpectrum | None = None) -> list[dict]:
    """
    ρ_{f_{φ_j}} → γ̂ for normalized tents φ_j of shrinking halfwidth.

    Against a raised-cosine probe χ on k-space: lhs_j = Σ χ|φ̂_j|² I,
    rhs = Σ χ I over the atoms in the probe window.
    """
    spectrum = spectrum or peak_scan(gen, seq, probe)
    chi = TestFunction.raised_cosine(tuple(probe.center), tuple(probe.halfwidths))
    atoms = spectrum.in_box(probe)
    ks = np.array([a.k for a in atoms]).reshape(-1, gen.dim)
    intensity = np.array([a.intensity for a in atoms])
    weight = np.real(chi(ks)) if len(ks) else np.zeros(0)
    rhs = float(np.sum(weight * intensity))
    rows = []
    for h in halfwidths:
        phi = TestFunction.tent(tuple([0.0] * gen.dim), h).normalized()
        transform = np.abs(phi.fourier(ks)) ** 2 if len(ks) else np.zeros(0)
        lhs = float(np.sum(weight * transform * intensity))
        rows.append({"halfwidth": float(h), "lhs": lhs, "rhs": rhs, "difference": abs(rhs - lhs)})
    return rows


def spectral_mass_window(spectrum: DiffractionSpectrum, phi: TestFunction, window: Box) -> float:
    """Atomic part of ρ_{f_φ}(χ) = Σ_k χ(k)|φ̂(k)|² I(k), χ the raised cosine on ``window``."""
    atoms = spectrum.in_box(window)
    if not atoms:
        return 0.0
    ks = np.array([a.k for a in atoms]).reshape(-1, window.dim)
    chi = TestFunction.raised_cosine(tuple(window.center), tuple(window.halfwidths))
    weights = np.real(chi(ks)) * np.abs(phi.fourier(ks)) ** 2
    return float(np.sum(weights * np.array([a.intensity for a in atoms])))
