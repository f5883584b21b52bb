"""
Dynamics Module
The dynamical-spectrum side: ergodic correlation averages ⟨f_φ, T^t f_ψ⟩,
the Dworkin identity, Weyl sums, eigenvalue-group checks and spectral
masses of k-windows without atoms.

All averages are volume averages over a box B of the smeared comb
(φ ∗ ω)(v), sampled on a uniform v-grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from src.autocorrelation import VanHoveSequence, autocorrelation_of, pairing
from src.diffraction import DiffractionSpectrum, atom_intensity, default_floor, spectral_mass_window
from src.errors import NotPurePoint
from src.generators import CombGenerator
from src.geometry import Box, as_points
from src.measures import TestFunction, WeightedComb, f_phi_at
from src.utils.workers import parallel_map

STEP_FRACTION = 8          # v-grid step = min halfwidth / STEP_FRACTION
WEYL_MARGIN = 10.0         # eigenvalue threshold over the random-phase baseline
TRANSFORM_FLOOR = 1e-6     # |φ̂(k)|² below this fraction of |φ̂(0)|² cannot witness k
PURITY_GATE = 0.95
K_CHUNK = 4


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True)
class CorrelationCurve:
    """t ↦ ⟨f_φ, T^t f_ψ⟩ on a lag grid, averaged over ``box``."""

    ts: np.ndarray
    values: np.ndarray
    phi: TestFunction
    psi: TestFunction
    box: Box

    def at_zero(self) -> complex:
        return complex(self.values[int(np.argmin(np.abs(self.ts[:, 0])))])

    def tapered(self) -> np.ndarray:
        """Values times the Hann window cos²(πt/(2T))."""
        T = float(np.max(np.abs(self.ts)))
        return self.values * np.cos(np.pi * self.ts[:, 0] / (2 * T)) ** 2


@dataclass(frozen=True)
class WeylReport:
    k: tuple[float, ...]
    moduli: tuple[float, ...]
    accepted: bool
    phi: TestFunction
    threshold: float = 0.0


@dataclass(frozen=True)
class DworkinReport:
    max_rel_error: float
    ts: np.ndarray
    correlations: np.ndarray
    pairings: np.ndarray
    box: Box


@dataclass(frozen=True)
class EigenGroupReport:
    candidates: list[tuple[float, ...]]
    accepted: list[tuple[float, ...]]
    negation_rate: float
    sum_pairs: list[dict] = field(default_factory=list)
    sum_accept_rate: float = 1.0
    closure_rate: float = 1.0

    @property
    def negation_closed(self) -> bool:
        return self.negation_rate == 1.0


@dataclass(frozen=True)
class ZeroWindowReport:
    mass: float
    norm: float
    ratio: float
    max_lag: float
    window: Box
    predicted: float | None = None


# =============================================================================
# SAMPLING
# =============================================================================

def _source_comb(source, window: Box) -> WeightedComb:
    if isinstance(source, CombGenerator):
        return source.produce(window)
    return source


def _grid(B: Box, step: float, discrete: bool) -> tuple[list[np.ndarray], list[float]]:
    """Per-axis nodes covering B (integer points for discrete groups) and their spacing."""
    axes, steps = [], []
    for lo, hi in zip(B.lo, B.hi):
        if discrete:
            axes.append(np.arange(math.ceil(lo), math.ceil(hi), dtype=float))
            steps.append(1.0)
            continue
        n = max(1, int(math.ceil((hi - lo) / step - 1e-9)))
        delta = (hi - lo) / n
        axes.append(lo + delta * np.arange(n + 1))
        steps.append(delta)
    return axes, steps


def _trapezoid(axis: np.ndarray, delta: float, discrete: bool) -> np.ndarray:
    weights = np.full(len(axis), delta)
    if not discrete and len(axis) > 1:
        weights[0] = weights[-1] = 0.5 * delta
    return weights


def _mesh(axes: list[np.ndarray]) -> np.ndarray:
    if len(axes) == 1:
        return axes[0].reshape(-1, 1)
    xx, yy = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def _default_step(*functions: TestFunction) -> float:
    return float(min(np.min(f.h) for f in functions)) / STEP_FRACTION


def _data_window(B: Box, functions: list[TestFunction], lag) -> Box:
    """Box holding every comb point that touches (φ ∗ ω)(v − t) for v ∈ B, t ∈ ±lag."""
    reach = max(float(np.max(np.abs(f.c) + f.h)) for f in functions) + 1.0
    lag = np.abs(np.broadcast_to(np.asarray(lag, dtype=float), (B.dim,)))
    return Box(tuple(B.lo - lag - reach), tuple(B.hi + lag + reach))


# =============================================================================
# CORRELATIONS
# =============================================================================

def correlation(gen, phi: TestFunction, psi: TestFunction, t, B: Box, step: float | None = None) -> complex:
    """
    ⟨f_φ, T^t f_ψ⟩ ≈ (1/|B|) ∫_B conj((φ∗ω)(v − t)) (ψ∗ω)(v) dv (trapezoid rule).

    Args:
        gen: CombGenerator, or a comb covering B ⊕ supports ⊕ t.
        phi, psi: Test functions.
        t: Lag.
        B: Averaging box.
        step: v-grid step (default min halfwidth / 8).
    """
    t = as_points(t, B.dim)[0]
    group = gen.group
    step = step or _default_step(phi, psi)
    comb = _source_comb(gen, _data_window(B, [phi, psi], t))
    axes, steps = _grid(B, step, group.is_discrete)
    weights = _trapezoid(axes[0], steps[0], group.is_discrete)
    for axis, delta in zip(axes[1:], steps[1:]):
        weights = np.outer(weights, _trapezoid(axis, delta, group.is_discrete)).ravel()
    nodes = _mesh(axes)
    a = np.asarray(f_phi_at(phi, comb, nodes - t))
    b = np.asarray(f_phi_at(psi, comb, nodes))
    return complex(np.sum(weights * np.conj(a) * b) / group.haar(B))


def correlation_curve(gen, phi: TestFunction, psi: TestFunction, max_lag: float, B: Box,
                      step: float | None = None) -> CorrelationCurve:
    """
    ⟨f_φ, T^t f_ψ⟩ for every lag t = jΔ, |t| ≤ max_lag, in one cross-correlation (1D).

    (φ∗ω) is sampled on B extended by max_lag, (ψ∗ω) on B with trapezoid
    weights; the lag sums come from ``scipy.signal.correlate``.
    """
    if B.dim != 1:
        raise ValueError("❌ Correlation curves are implemented in dimension 1")
    group = gen.group
    step = step or _default_step(phi, psi)
    axes, steps = _grid(B, step, group.is_discrete)
    nodes, delta = axes[0], steps[0]
    J = int(math.ceil(max_lag / delta - 1e-9))
    comb = _source_comb(gen, _data_window(B, [phi, psi], J * delta))

    extended = nodes[0] + delta * np.arange(-J, len(nodes) + J)
    a = np.asarray(f_phi_at(phi, comb, extended.reshape(-1, 1)))
    b = np.asarray(f_phi_at(psi, comb, nodes.reshape(-1, 1))) * _trapezoid(nodes, delta, group.is_discrete)
    z = signal.correlate(a, b, mode="valid")
    lags = np.arange(-J, J + 1)
    values = np.conj(z[J - lags]) / group.haar(B)
    return CorrelationCurve((lags * delta).reshape(-1, 1), values, phi, psi, B)


def _on_lag_grid(ts: np.ndarray, B: Box, step: float, discrete: bool) -> bool:
    """True when every t is a multiple of the (unadjusted) v-grid step."""
    if B.dim != 1 or discrete:
        return False
    cells = B.widths[0] / step
    lags = ts[:, 0] / step
    return bool(abs(cells - round(cells)) < 1e-9 and np.all(np.abs(lags - np.round(lags)) < 1e-9))


def dworkin_identity_report(gen, phi: TestFunction, psi: TestFunction, t_grid, seq: VanHoveSequence,
                            epsilon: float = 0.0, step: float | None = None,
                            workers: int | None = None) -> DworkinReport:
    """
    max_t |⟨f_φ, T^t f_ψ⟩ − (φ̃ ∗ ψ ∗ γ)(t)| / (|(φ̃ ∗ ψ ∗ γ)(t)| + 1e−12) on the largest box.

    γ is the finite-volume autocorrelation of ω restricted to the largest
    box; the correlation side averages the smeared comb over the same box.
    """
    B = seq.largest
    ts = as_points(t_grid, B.dim)
    reach = float(np.max(np.abs(ts)) + np.max(np.abs(psi.c - phi.c)) + np.max(phi.h + psi.h)) + 1e-6
    comb = _source_comb(gen, B).restrict(B)
    gamma = autocorrelation_of(comb, epsilon, reach, workers=workers)
    pairings = np.asarray(pairing(gamma, phi, psi, ts))

    step = step or _default_step(phi, psi)
    if _on_lag_grid(ts, B, step, gen.group.is_discrete):
        curve = correlation_curve(gen, phi, psi, float(np.max(np.abs(ts))), B, step)
        index = np.round(ts[:, 0] / step).astype(np.int64) + len(curve.ts) // 2
        correlations = curve.values[index]
    else:
        correlations = np.array(parallel_map(lambda t: correlation(gen, phi, psi, t, B, step), list(ts), workers))

    errors = np.abs(correlations - pairings) / (np.abs(pairings) + 1e-12)
    return DworkinReport(float(np.max(errors)), ts, correlations, pairings, B)


# =============================================================================
# WEYL SUMS
# =============================================================================

def _end_weight(theta: np.ndarray) -> np.ndarray:
    """∫_0^1 (1 − s) e^{iθs} ds."""
    small = np.abs(theta) < 1e-3
    safe = np.where(small, 1.0, theta)
    exact = 1j / safe - (np.exp(1j * safe) - 1.0) / safe ** 2
    series = 0.5 + 1j * theta / 6.0 - theta ** 2 / 24.0
    return np.where(small, series, exact)


def _filon_weights(axis: np.ndarray, delta: float, k: np.ndarray, discrete: bool) -> np.ndarray:
    """
    Weights c_n(k) with Σ c_n e^{2πik v_n} f_n = ∫ e^{2πikv} (hat interpolant of f) dv.

    Shape (len(k), len(axis)).
    """
    phase = np.exp(2j * np.pi * np.mod(np.outer(k, axis), 1.0))
    if discrete:
        return phase
    weights = np.repeat((delta * np.sinc(k * delta) ** 2)[:, None], len(axis), axis=1).astype(complex)
    end = _end_weight(2 * np.pi * k * delta) * delta
    weights[:, 0] = end
    weights[:, -1] = np.conj(end)
    return weights * phase


class WeylSampler:
    """(φ ∗ ω) sampled once on B; Weyl sums for many k reuse the samples."""

    def __init__(self, gen, phi: TestFunction, B: Box, step: float | None = None):
        self.phi = phi
        self.box = B
        self.group = gen.group
        step = step or _default_step(phi)
        comb = _source_comb(gen, _data_window(B, [phi], 0.0))
        self.axes, self.steps = _grid(B, step, self.group.is_discrete)
        values = np.asarray(f_phi_at(phi, comb, _mesh(self.axes)))
        self.samples = values.reshape(tuple(len(a) for a in self.axes))
        self.volume = self.group.haar(B)

    def at(self, k) -> np.ndarray:
        """W_B(k, φ) = (1/|B|) ∫_B e^{+2πik·v} (φ∗ω)(v) dv for every row of k."""
        ks = as_points(k, self.box.dim)
        out = np.empty(len(ks), dtype=complex)
        discrete = self.group.is_discrete
        for start in range(0, len(ks), K_CHUNK):
            block = ks[start:start + K_CHUNK]
            first = _filon_weights(self.axes[0], self.steps[0], block[:, 0], discrete)
            if len(self.axes) == 1:
                out[start:start + K_CHUNK] = first @ self.samples
            else:
                second = _filon_weights(self.axes[1], self.steps[1], block[:, 1], discrete)
                out[start:start + K_CHUNK] = np.einsum("kn,nm,km->k", first, self.samples, second)
        return out / self.volume


def weyl_sum(gen, phi: TestFunction, k, B: Box, step: float | None = None) -> complex:
    """W_B(k, φ) by Filon-corrected trapezoid integration of the sampled (φ ∗ ω)."""
    return complex(WeylSampler(gen, phi, B, step).at(k)[0])


def _weyl_threshold(eta0: float, transform: float, volume: float) -> float:
    return WEYL_MARGIN * eta0 * transform / volume


def weyl_report(gen: CombGenerator, phi: TestFunction, k, seq: VanHoveSequence) -> WeylReport:
    """|W_{B_n}(k, φ)| along the sequence; accepted against the random-phase baseline at the largest box."""
    ks = as_points(k, gen.dim)
    moduli = tuple(abs(weyl_sum(gen, phi, ks, B)) for B in seq.boxes)
    comb = gen.produce(seq.largest)
    eta0 = float(np.sum(np.abs(comb.weights) ** 2) / comb.volume)
    transform = float(np.abs(phi.fourier(ks, gen.group)[0]) ** 2)
    threshold = _weyl_threshold(eta0, transform, comb.volume)
    witness = transform >= TRANSFORM_FLOOR * float(np.abs(phi.fourier(np.zeros((1, gen.dim)), gen.group)[0]) ** 2)
    accepted = witness and moduli[-1] ** 2 >= threshold
    return WeylReport(tuple(float(v) for v in ks[0]), moduli, bool(accepted), phi, threshold)


# =============================================================================
# EIGENVALUE GROUP
# =============================================================================

def _combinations(ks: np.ndarray, M: int) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(-M, M + 1)] * len(ks), indexing="ij")
    coefficients = np.column_stack([g.ravel() for g in grids])
    return coefficients @ ks


def _dedupe(ks: np.ndarray, tol: float) -> np.ndarray:
    if len(ks) == 0:
        return ks
    keys = np.round(ks / tol).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return ks[np.sort(first)]


def eigenvalue_group_check(spectrum: DiffractionSpectrum, gen: CombGenerator, phis: list[TestFunction],
                           M: int = 1, tol: float = 1e-6, top: int = 5,
                           purity_value: float | None = None) -> EigenGroupReport:
    """
    Tests integer combinations of the top atoms for being eigenvalues.

    A combination k is accepted when, for at least one probe φ,
    |W_B(k, φ)|² ≥ 10·η(0)·|φ̂(k)|²/|B| and |φ̂(k)|² ≥ 1e−6·|φ̂(0)|².
    Closure is then checked under negation (every accepted combination)
    and under pairwise sums of accepted top atoms inside the scan range
    (accepted, or below the diffraction floor).

    Raises:
        NotPurePoint: If the purity gate (≥ 0.95) fails or purity is unknown.
    """
    value = spectrum.purity if purity_value is None else purity_value
    if value is None or value < PURITY_GATE:
        raise NotPurePoint(f"❌ Eigenvalue generation needs purity ≥ {PURITY_GATE}, got {value}")

    B = Box.from_list(spectrum.scan["box"]) if "box" in spectrum.scan else None
    if B is None:
        raise ValueError("❌ The spectrum does not record its scan box")
    k_range = Box.from_list(spectrum.scan["k_range"])
    comb = gen.produce(B)
    eta0 = float(np.sum(np.abs(comb.weights) ** 2) / comb.volume)
    samplers = [WeylSampler(gen, phi, B) for phi in phis]

    def accepted_mask(ks: np.ndarray) -> np.ndarray:
        mask = np.zeros(len(ks), dtype=bool)
        for phi, sampler in zip(phis, samplers):
            transform = np.abs(phi.fourier(ks, gen.group)) ** 2
            origin = float(np.abs(phi.fourier(np.zeros((1, gen.dim)), gen.group)[0]) ** 2)
            power = np.abs(sampler.at(ks)) ** 2
            mask |= (transform >= TRANSFORM_FLOOR * origin) & (power >= _weyl_threshold(eta0, transform, comb.volume))
        return mask

    tops = spectrum.ks[:top]
    candidates = _dedupe(_combinations(tops, M), tol) if len(tops) else np.zeros((0, gen.dim))
    candidates = candidates[k_range.contains(candidates, mode="closed")]
    mask = accepted_mask(candidates)
    accepted = candidates[mask]

    negated = accepted_mask(-accepted) if len(accepted) else np.zeros(0, dtype=bool)
    negation_rate = float(np.mean(negated)) if len(accepted) else 1.0

    top_accepted = tops[accepted_mask(tops)] if len(tops) else tops
    pairs = [(i, j) for i in range(len(top_accepted)) for j in range(i, len(top_accepted))]
    sums = np.array([top_accepted[i] + top_accepted[j] for i, j in pairs]).reshape(-1, gen.dim)
    inside = k_range.contains(sums, mode="closed") if len(sums) else np.zeros(0, dtype=bool)
    sums = sums[inside]
    sum_ok = accepted_mask(sums) if len(sums) else np.zeros(0, dtype=bool)
    below = atom_intensity(comb, sums) < default_floor(gen) if len(sums) else np.zeros(0, dtype=bool)
    records = [
        {"k": [float(v) for v in s], "accepted": bool(a), "below_floor": bool(b)}
        for s, a, b in zip(sums, sum_ok, below)
    ]
    return EigenGroupReport(
        candidates=[tuple(map(float, k)) for k in candidates],
        accepted=[tuple(map(float, k)) for k in accepted],
        negation_rate=negation_rate,
        sum_pairs=records,
        sum_accept_rate=float(np.mean(sum_ok)) if len(sums) else 1.0,
        closure_rate=float(np.mean(sum_ok | below)) if len(sums) else 1.0,
    )


# =============================================================================
# SPECTRAL MASS OF A WINDOW
# =============================================================================

def spectral_measure_zero_check(gen, phi: TestFunction, window: Box, seq: VanHoveSequence,
                                max_lag: float | None = None,
                                spectrum: DiffractionSpectrum | None = None) -> ZeroWindowReport:
    """
    Spectral mass of f_φ against a raised-cosine k-window χ on ``window``.

    mass = Σ_t C(t)·χ̂(t)·Δt over the Hann-tapered correlation curve
    C(t) = ⟨f_φ, T^t f_φ⟩, |t| ≤ max_lag. Reported with ‖f_φ‖² = C(0) and,
    given a spectrum, the mass its atoms predict for the same window.
    """
    B = seq.largest
    if max_lag is None:
        max_lag = min(0.25 * B.diameter, 20.0 / float(np.min(window.halfwidths)))
    curve = correlation_curve(gen, phi, phi, max_lag, B)
    chi = TestFunction.raised_cosine(tuple(window.center), tuple(window.halfwidths))
    delta = float(curve.ts[1, 0] - curve.ts[0, 0]) if len(curve.ts) > 1 else 1.0
    mass = float(np.real(np.sum(curve.tapered() * chi.fourier(curve.ts)) * delta))
    norm = float(np.real(curve.at_zero()))
    ratio = mass / norm if norm > 0 else 0.0
    predicted = spectral_mass_window(spectrum, phi, window) if spectrum is not None else None
    return ZeroWindowReport(mass, norm, ratio, float(max_lag), window, predicted)
