"""
Comb Generators
Deterministic, window-parameterized producers of the canonical example
classes: crystals, model sets, substitution combs and perturbed lattices.

Every generator is a rule on an index set (lattice sites, pairs (m, n) of
Z[τ], letter positions), so the comb on a window is the set of indices whose
position falls in the window. Two windows therefore agree exactly on their
intersection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Literal

import numpy as np

from src.errors import DegenerateWindow, EpsilonTooLarge
from src.geometry import Box
from src.measures import GroupSpec, REAL_LINE, TranslationBound, WeightedComb
from src.quadratic import FIELDS

GOLDEN_RATIO = (1 + 5 ** 0.5) / 2
SILVER_RATIO = 1 + 2 ** 0.5

# Float slopes used at layout time; exact arithmetic lives in src.quadratic.
SLOPES = {"golden": GOLDEN_RATIO, "silver": SILVER_RATIO}

GeneratorKind = Literal["lattice", "cut-and-project-1d", "substitution", "perturbed-lattice", "bernoulli-lattice"]
KINDS = ("lattice", "cut-and-project-1d", "substitution", "perturbed-lattice", "bernoulli-lattice")

RULES = {
    "fibonacci": {"a": "ab", "b": "a"},
    "thue-morse": {"a": "ab", "b": "ba"},
    "period-doubling": {"a": "ab", "b": "aa"},
}
DEFAULT_LENGTHS = {
    "fibonacci": {"a": GOLDEN_RATIO, "b": 1.0},
    "thue-morse": {"a": 1.0, "b": 1.0},
    "period-doubling": {"a": 1.0, "b": 1.0},
}
DEFAULT_WEIGHTS = {
    "fibonacci": {"a": 1.0, "b": 1.0},
    "thue-morse": {"a": 1.0, "b": -1.0},
    "period-doubling": {"a": 1.0, "b": 0.5},
}

QUASIPERIODIC_FREQUENCY = 2 ** 0.5 - 1


# =============================================================================
# HASHING
# =============================================================================

_MASK64 = (1 << 64) - 1


def _mix_seed(seed: int) -> int:
    z = (seed * 0x9E3779B97F4A7C15 + 0x632BE59BD9B4E019) & _MASK64
    z ^= z >> 31
    return z


def hash_uniform(seed: int, n: np.ndarray) -> np.ndarray:
    """
    SplitMix64 hash of (seed, n) mapped to [0, 1), vectorized over n.

    The value for a site depends only on (seed, n), never on the window.
    """
    z = np.ascontiguousarray(np.atleast_1d(n), dtype=np.int64).view(np.uint64)
    z = z * np.uint64(0x9E3779B97F4A7C15) + np.uint64(_mix_seed(int(seed) & _MASK64))
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


# =============================================================================
# GENERATOR
# =============================================================================

def _as_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def _jsonable_weight(w: complex):
    w = complex(w)
    return w.real if w.imag == 0 else [w.real, w.imag]


@dataclass(frozen=True, eq=False)
class CombGenerator:
    """
    A deterministic rule producing the comb restricted to any requested box.

    Attributes:
        kind: Generator family.
        params: Kind-specific, JSON-serializable parameters.
        seed: 64-bit seed (only the random families use it).
        group: Ambient group of the produced combs.
    """
    kind: GeneratorKind
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    group: GroupSpec = REAL_LINE

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"❌ Unknown generator kind '{self.kind}'. Valid kinds: {KINDS}")
        if not 0 <= int(self.seed) <= _MASK64:
            raise ValueError(f"❌ Seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.kind != "lattice" and self.group.dim != 1:
            raise ValueError(f"❌ Generator '{self.kind}' only exists in dimension 1")
        getattr(self, f"_validate_{self.kind.replace('-', '_')}")()

    # -------------------------------------------------------------------------
    # Validation
    # -------------------------------------------------------------------------

    def _validate_lattice(self):
        spacing = self.spacing
        if np.any(spacing <= 0):
            raise ValueError(f"❌ Lattice spacing must be positive, got {spacing}")
        if self.params.get("weightfn", "constant") not in ("constant", "alternating"):
            raise ValueError("❌ weightfn must be 'constant' or 'alternating'")
        if self.group.is_discrete and np.any(spacing != np.round(spacing)):
            raise ValueError("❌ Integer-group lattices need integer spacing")

    def _validate_cut_and_project_1d(self):
        name = self.params.get("field", "golden")
        if name not in FIELDS:
            raise ValueError(f"❌ Unknown quadratic field '{name}'. Valid fields: {list(FIELDS)}")
        w0, w1 = self.window_star
        if not w1 > w0:
            raise DegenerateWindow(f"❌ Acceptance window [{w0}, {w1}) has empty interior")

    def _validate_substitution(self):
        rule = self.params.get("rule")
        if rule not in RULES:
            raise ValueError(f"❌ Unknown substitution rule '{rule}'. Valid rules: {list(RULES)}")
        if any(v <= 0 for v in self.letter_lengths.values()):
            raise ValueError("❌ Letter lengths must be positive")
        if self.group.is_discrete and any(v != round(v) for v in self.letter_lengths.values()):
            raise ValueError("❌ Integer-group substitutions need integer letter lengths")

    def _validate_perturbed_lattice(self):
        spacing = float(self.params.get("spacing", 1.0))
        epsilon = float(self.params.get("epsilon", 0.0))
        if spacing <= 0 or epsilon < 0:
            raise ValueError("❌ Perturbed lattice needs spacing > 0 and epsilon ≥ 0")
        if epsilon >= spacing / 2:
            raise EpsilonTooLarge(f"❌ epsilon = {epsilon} must be < spacing/2 = {spacing / 2}")
        if self.params.get("rule", "iid") not in ("iid", "quasiperiodic"):
            raise ValueError("❌ Displacement rule must be 'iid' or 'quasiperiodic'")

    def _validate_bernoulli_lattice(self):
        spacing = float(self.params.get("spacing", 1.0))
        p = float(self.params.get("p", 0.5))
        if spacing <= 0 or not 0 < p <= 1:
            raise ValueError("❌ Bernoulli lattice needs spacing > 0 and 0 < p ≤ 1")

    # -------------------------------------------------------------------------
    # Parameters
    # -------------------------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.group.dim

    @property
    def spacing(self) -> np.ndarray:
        s = np.atleast_1d(np.asarray(self.params.get("spacing", 1.0), dtype=float))
        return np.repeat(s, self.dim) if s.size == 1 else s

    @property
    def slope(self) -> float:
        return SLOPES[self.params.get("field", "golden")]

    @property
    def conjugate_slope(self) -> float:
        return FIELDS[self.params.get("field", "golden")].p - self.slope

    @property
    def window_star(self) -> tuple[float, float]:
        if "window_star" in self.params:
            w0, w1 = self.params["window_star"]
            return float(w0), float(w1)
        if self.params.get("field", "golden") == "golden":
            return -1.0, self.slope - 1.0
        return 0.0, 1.0

    @property
    def letter_lengths(self) -> dict[str, float]:
        rule = self.params.get("rule")
        lengths = dict(DEFAULT_LENGTHS.get(rule, {}))
        lengths.update({k: float(v) for k, v in self.params.get("lengths", {}).items()})
        return lengths

    @property
    def letter_weights(self) -> dict[str, complex]:
        rule = self.params.get("rule")
        weights = {k: complex(v) for k, v in DEFAULT_WEIGHTS.get(rule, {}).items()}
        weights.update({k: _as_complex(v) for k, v in self.params.get("weights", {}).items()})
        return weights

    # -------------------------------------------------------------------------
    # Published quantities
    # -------------------------------------------------------------------------

    @property
    def density(self) -> float:
        """Expected points per unit volume."""
        if self.kind == "lattice":
            return float(1.0 / np.prod(self.spacing))
        if self.kind == "cut-and-project-1d":
            w0, w1 = self.window_star
            return (w1 - w0) / abs(self.slope - self.conjugate_slope)
        if self.kind == "substitution":
            freqs = letter_frequencies(self.params["rule"])
            mean_length = sum(freqs[a] * self.letter_lengths[a] for a in freqs)
            return 1.0 / mean_length
        if self.kind == "perturbed-lattice":
            return 1.0 / float(self.params.get("spacing", 1.0))
        return float(self.params.get("p", 0.5)) / float(self.params.get("spacing", 1.0))

    @property
    def max_weight(self) -> float:
        if self.kind == "lattice":
            return 1.0
        if self.kind == "substitution":
            return max(abs(w) for w in self.letter_weights.values())
        return 1.0

    @property
    def bound(self) -> TranslationBound:
        """A (C, V) pair the produced combs satisfy."""
        C = 2.0 * self.max_weight
        if self.kind in ("lattice", "bernoulli-lattice"):
            return TranslationBound(C, Box.symmetric(self.spacing / 2, self.dim))
        if self.kind == "cut-and-project-1d":
            return TranslationBound(C, Box.symmetric(self.minimal_gap() / 2))
        if self.kind == "substitution":
            return TranslationBound(C, Box.symmetric(min(self.letter_lengths.values()) / 2))
        spacing = float(self.params.get("spacing", 1.0))
        epsilon = float(self.params.get("epsilon", 0.0))
        return TranslationBound(C, Box.symmetric((spacing - 2 * epsilon) / 2))

    def minimal_gap(self) -> float:
        """Smallest distance between consecutive points of a model set."""
        w0, w1 = self.window_star
        span = 20.0 * (w1 - w0) / self.density + 20.0
        points = self.produce(Box.interval(0.0, span)).points[:, 0]
        return float(np.min(np.diff(points)))

    # -------------------------------------------------------------------------
    # Production
    # -------------------------------------------------------------------------

    def produce(self, window: Box) -> WeightedComb:
        """
        Produces ω restricted to ``window`` (half-open box).

        Args:
            window: Requested box, same dimension as the group.

        Returns:
            WeightedComb: Bit-identical to restricting any larger production.
        """
        if window.dim != self.dim:
            raise ValueError(f"❌ Window dimension {window.dim} does not match generator dimension {self.dim}")
        producer = getattr(self, f"_produce_{self.kind.replace('-', '_')}")
        points, weights = producer(window)
        mask = window.contains(points)
        return WeightedComb(points[mask], weights[mask], window, self.group)

    def _site_range(self, lo: float, hi: float, spacing: float, margin: float = 0.0) -> np.ndarray:
        first = math.floor((lo - margin) / spacing) - 1
        last = math.ceil((hi + margin) / spacing) + 1
        return np.arange(first, last + 1, dtype=np.int64)

    def _produce_lattice(self, window: Box):
        spacing = self.spacing
        axes = [self._site_range(window.lo[i], window.hi[i], spacing[i]) for i in range(self.dim)]
        if self.dim == 1:
            sites = axes[0].reshape(-1, 1)
        else:
            xx, yy = np.meshgrid(*axes, indexing="ij")
            sites = np.column_stack([xx.ravel(), yy.ravel()])
        points = sites * spacing
        if self.params.get("weightfn", "constant") == "alternating":
            weights = np.where(np.sum(sites, axis=1) % 2 == 0, 1.0, -1.0).astype(complex)
        else:
            weights = np.ones(len(sites), dtype=complex)
        return points, weights

    def _produce_cut_and_project_1d(self, window: Box):
        tau, tau_c = self.slope, self.conjugate_slope
        w0, w1 = self.window_star
        a, b = window.lo[0], window.hi[0]
        gap = tau - tau_c
        # x − x* = n(τ − τ'), with x in [a, b) and x* in [w0, w1)
        n = np.arange(math.floor((a - w1) / gap) - 1, math.ceil((b - w0) / gap) + 2, dtype=np.int64)
        m_lo = np.floor(np.maximum(a - n * tau, w0 - n * tau_c)).astype(np.int64) - 1
        m_hi = np.ceil(np.minimum(b - n * tau, w1 - n * tau_c)).astype(np.int64) + 1
        counts = np.maximum(m_hi - m_lo + 1, 0)
        nn = np.repeat(n, counts)
        offsets = np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts)
        mm = np.repeat(m_lo, counts) + offsets
        star = mm + nn * tau_c
        x = mm + nn * tau
        keep = (star >= w0) & (star < w1)
        points = np.sort(x[keep]).reshape(-1, 1)
        return points, np.ones(len(points), dtype=complex)

    def _produce_substitution(self, window: Box):
        rule = self.params["rule"]
        letters = sorted(RULES[rule])
        lengths = np.array([self.letter_lengths[a] for a in letters])
        weights = np.array([self.letter_weights[a] for a in letters], dtype=complex)
        target = max(window.hi[0], 0.0)

        for iteration in range(1, 200):
            word = fixed_point(rule, iteration)
            counts = np.bincount(word, minlength=len(letters))
            if float(np.dot(counts, lengths)) > target:
                break
        positions = letter_positions(word, lengths)
        return positions.reshape(-1, 1), weights[word]

    def _produce_perturbed_lattice(self, window: Box):
        spacing = float(self.params.get("spacing", 1.0))
        epsilon = float(self.params.get("epsilon", 0.0))
        n = self._site_range(window.lo[0], window.hi[0], spacing, margin=epsilon)
        if self.params.get("rule", "iid") == "iid":
            displacement = epsilon * (2.0 * hash_uniform(self.seed, n) - 1.0)
        else:
            phase = float(hash_uniform(self.seed, np.zeros(1))[0])
            displacement = epsilon * np.sin(2 * np.pi * (n * QUASIPERIODIC_FREQUENCY + phase))
        points = (n * spacing + displacement).reshape(-1, 1)
        return points, np.ones(len(points), dtype=complex)

    def _produce_bernoulli_lattice(self, window: Box):
        spacing = float(self.params.get("spacing", 1.0))
        p = float(self.params.get("p", 0.5))
        n = self._site_range(window.lo[0], window.hi[0], spacing)
        occupied = hash_uniform(self.seed, n) < p
        points = (n[occupied] * spacing).reshape(-1, 1)
        return points, np.ones(len(points), dtype=complex)

    # -------------------------------------------------------------------------
    # Serialization
    # -------------------------------------------------------------------------

    def to_spec(self) -> dict:
        """JSON generator spec ``{kind, params, seed, group}``."""
        return {"kind": self.kind, "params": dict(self.params), "seed": int(self.seed), "group": self.group.kind}

    @classmethod
    def from_spec(cls, spec: dict) -> "CombGenerator":
        try:
            return cls(
                kind=spec["kind"],
                params=dict(spec.get("params", {})),
                seed=int(spec.get("seed", 0)),
                group=GroupSpec(spec.get("group", "real-line")),
            )
        except KeyError as e:
            raise ValueError(f"❌ Generator spec is missing the key {e}") from e

    def describe(self) -> str:
        if self.kind == "substitution":
            return f"substitution:{self.params['rule']}"
        if self.kind == "cut-and-project-1d":
            return f"cut-and-project:{self.params.get('field', 'golden')}"
        return self.kind


# =============================================================================
# SUBSTITUTION HELPERS
# =============================================================================

def _rule_table(rule: str) -> tuple[np.ndarray, np.ndarray]:
    letters = sorted(RULES[rule])
    index = {a: i for i, a in enumerate(letters)}
    images = [RULES[rule][a] for a in letters]
    width = max(len(img) for img in images)
    table = np.zeros((len(letters), width), dtype=np.int8)
    sizes = np.array([len(img) for img in images], dtype=np.int64)
    for i, img in enumerate(images):
        table[i, : len(img)] = [index[c] for c in img]
    return table, sizes


@lru_cache(maxsize=128)
def fixed_point(rule: str, iterations: int) -> np.ndarray:
    """σ^iterations(a) as letter indices; a prefix of the one-sided fixed point."""
    if iterations <= 0:
        word = np.zeros(1, dtype=np.int8)
    else:
        previous = fixed_point(rule, iterations - 1)
        table, sizes = _rule_table(rule)
        repeats = sizes[previous]
        starts = np.repeat(np.cumsum(repeats) - repeats, repeats)
        slot = np.arange(int(repeats.sum())) - starts
        word = table[np.repeat(previous, repeats), slot]
    word.setflags(write=False)
    return word


def letter_positions(word: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """
    Left endpoints of the geometric realization starting at 0.

    Each position is Σ_letters (count before j)·length, one product per
    letter, so a position never depends on how long the word is.
    """
    positions = np.zeros(len(word))
    for letter, length in enumerate(lengths):
        before = np.concatenate([[0], np.cumsum(word == letter)[:-1]])
        positions = positions + before * length
    return positions


def substitution_matrix(rule: str) -> np.ndarray:
    """M[i, j] = number of letters i in σ(j)."""
    table, sizes = _rule_table(rule)
    matrix = np.zeros((len(sizes), len(sizes)))
    for j, size in enumerate(sizes):
        for i in table[j, :size]:
            matrix[i, j] += 1
    return matrix


def letter_frequencies(rule: str) -> dict[str, float]:
    """Perron–Frobenius letter frequencies of a primitive rule."""
    eigenvalues, eigenvectors = np.linalg.eig(substitution_matrix(rule))
    leading = np.abs(eigenvectors[:, int(np.argmax(eigenvalues.real))].real)
    leading = leading / leading.sum()
    return {a: float(f) for a, f in zip(sorted(RULES[rule]), leading)}


# =============================================================================
# FACTORIES
# =============================================================================

def lattice(spacing=1.0, weightfn: str = "constant", group: GroupSpec = REAL_LINE) -> CombGenerator:
    """Crystal spacing·Z^d with constant or alternating (±1) weights."""
    spacing_list = np.atleast_1d(np.asarray(spacing, dtype=float)).tolist()
    params = {"spacing": spacing_list[0] if len(spacing_list) == 1 else spacing_list, "weightfn": weightfn}
    return CombGenerator("lattice", params, group=group)


def cut_and_project_1d(field: str = "golden", window_star: tuple[float, float] | None = None) -> CombGenerator:
    """
    Model set {m + nτ : m + nτ' ∈ W*} for a quadratic irrational τ.

    With the golden field and the default W* = [−1, τ − 1) this is the
    Fibonacci chain, gaps {1, τ}.
    """
    params: dict[str, Any] = {"field": field}
    if window_star is not None:
        params["window_star"] = [float(window_star[0]), float(window_star[1])]
    return CombGenerator("cut-and-project-1d", params)


def substitution(rule: str, lengths: dict[str, float] | None = None,
                 weights: dict[str, complex] | None = None, group: GroupSpec = REAL_LINE) -> CombGenerator:
    """Left-endpoint comb of the one-sided substitution fixed point from 'a'."""
    params: dict[str, Any] = {"rule": rule}
    if lengths:
        params["lengths"] = {k: float(v) for k, v in lengths.items()}
    if weights:
        params["weights"] = {k: _jsonable_weight(v) for k, v in weights.items()}
    return CombGenerator("substitution", params, group=group)


def perturbed_lattice(spacing: float = 1.0, epsilon: float = 0.1, rule: str = "iid", seed: int = 0) -> CombGenerator:
    """Sites n·spacing + d_n, |d_n| ≤ ε, d_n a function of (seed, n)."""
    return CombGenerator("perturbed-lattice", {"spacing": float(spacing), "epsilon": float(epsilon), "rule": rule}, seed)


def bernoulli_lattice(spacing: float = 1.0, p: float = 0.5, seed: int = 0) -> CombGenerator:
    """Lattice sites kept independently with probability p."""
    return CombGenerator("bernoulli-lattice", {"spacing": float(spacing), "p": float(p)}, seed)


EXAMPLES = {
    "lattice": lambda: lattice(1.0),
    "fibonacci": lambda: cut_and_project_1d("golden"),
    "silver": lambda: cut_and_project_1d("silver"),
    "fibonacci-substitution": lambda: substitution("fibonacci"),
    "thue-morse": lambda: substitution("thue-morse"),
    "period-doubling": lambda: substitution("period-doubling"),
    "perturbed": lambda: perturbed_lattice(1.0, 0.1, "iid"),
    "bernoulli": lambda: bernoulli_lattice(1.0, 0.5),
}


def example(name: str) -> CombGenerator:
    """Canonical generator by name (see EXAMPLES)."""
    if name not in EXAMPLES:
        raise ValueError(f"❌ Unknown example '{name}'. Valid examples: {list(EXAMPLES)}")
    return EXAMPLES[name]()
