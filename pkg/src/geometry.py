"""
Geometry Module
Axis-aligned boxes and finite box unions in R^d (d in {1, 2}).

Boxes are stored as lower/upper corner tuples. Whether a box is half-open
[a, b), open (a, b) or closed [a, b] is a property of how it is *used*; the
membership test takes the semantics explicitly. Data windows are half-open,
neighbourhoods V are open, compact sets K and C are closed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

Mode = Literal["half-open", "open", "closed"]


def as_points(points, dim: int | None = None) -> np.ndarray:
    """
    Normalizes point data to a float array of shape (n, d).

    Args:
        points: Scalars, a flat sequence (1D points) or an (n, d) array.
        dim: Expected dimension, inferred when omitted.

    Returns:
        np.ndarray: Array of shape (n, d).
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        if dim is None or dim == 1:
            arr = arr.reshape(-1, 1)
        else:
            arr = arr.reshape(-1, dim)
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"❌ Expected {dim}-dimensional points, got shape {arr.shape}")
    return arr


def _per_axis(value, dim: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size == 1:
        arr = np.repeat(arr, dim)
    if arr.size != dim:
        raise ValueError(f"❌ Expected a scalar or {dim} values, got {arr.size}")
    return arr


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with corners ``lower`` and ``upper``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lower) != len(upper):
            raise ValueError("❌ Box corners must have the same dimension")
        if len(lower) not in (1, 2):
            raise ValueError(f"❌ Only dimensions 1 and 2 are supported, got {len(lower)}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    # -------------------------------------------------------------------------
    # Constructors
    # -------------------------------------------------------------------------

    @classmethod
    def interval(cls, a: float, b: float) -> "Box":
        return cls((a,), (b,))

    @classmethod
    def centered(cls, center, halfwidth) -> "Box":
        """Box center ± halfwidth (halfwidth scalar or per axis)."""
        c = np.atleast_1d(np.asarray(center, dtype=float))
        h = _per_axis(halfwidth, c.size)
        return cls(tuple(c - h), tuple(c + h))

    @classmethod
    def symmetric(cls, radius, dim: int = 1) -> "Box":
        """Box (−r, r)^d, the usual neighbourhood of 0."""
        r = _per_axis(radius, dim)
        return cls(tuple(-r), tuple(r))

    @classmethod
    def parse(cls, text: str) -> "Box":
        """Parses ``a,b`` (1D) or ``a,b,c,d`` (2D as x-range then y-range)."""
        values = [float(v) for v in text.split(",") if v.strip()]
        if len(values) == 2:
            return cls.interval(values[0], values[1])
        if len(values) == 4:
            return cls((values[0], values[2]), (values[1], values[3]))
        raise ValueError(f"❌ Cannot parse box from '{text}' (expected a,b or a,b,c,d)")

    # -------------------------------------------------------------------------
    # Basic properties
    # -------------------------------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper)

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def halfwidths(self) -> np.ndarray:
        return 0.5 * self.widths

    @property
    def diameter(self) -> float:
        """Euclidean length of the diagonal."""
        return float(np.linalg.norm(np.maximum(self.widths, 0.0)))

    def is_empty(self, mode: Mode = "half-open") -> bool:
        if mode == "closed":
            return bool(np.any(self.hi < self.lo))
        return bool(np.any(self.hi <= self.lo))

    def volume(self) -> float:
        """Lebesgue measure."""
        return float(np.prod(np.maximum(self.widths, 0.0)))

    def lattice_count(self) -> int:
        """Number of points of Z^d in the half-open box."""
        counts = np.maximum(np.ceil(self.hi) - np.ceil(self.lo), 0.0)
        return int(np.prod(counts))

    # -------------------------------------------------------------------------
    # Membership
    # -------------------------------------------------------------------------

    def contains(self, points, mode: Mode = "half-open") -> np.ndarray:
        """
        Vectorized membership test.

        Args:
            points: Array of shape (n, d) (or flat for d = 1).
            mode: "half-open" [a, b), "open" (a, b) or "closed" [a, b].

        Returns:
            np.ndarray: Boolean mask of length n.
        """
        pts = as_points(points, self.dim)
        lo, hi = self.lo, self.hi
        if mode == "half-open":
            inside = (pts >= lo) & (pts < hi)
        elif mode == "open":
            inside = (pts > lo) & (pts < hi)
        elif mode == "closed":
            inside = (pts >= lo) & (pts <= hi)
        else:
            raise ValueError(f"❌ Unknown membership mode '{mode}'")
        return np.all(inside, axis=1)

    def contains_box(self, other: "Box", other_closed: bool = True) -> bool:
        """Inclusion of ``other`` in this half-open box."""
        if other.is_empty("closed" if other_closed else "open"):
            return True
        if np.any(other.lo < self.lo):
            return False
        if other_closed:
            return bool(np.all(other.hi < self.hi))
        return bool(np.all(other.hi <= self.hi))

    # -------------------------------------------------------------------------
    # Set arithmetic
    # -------------------------------------------------------------------------

    def shift(self, t) -> "Box":
        t = _per_axis(t, self.dim)
        return Box(tuple(self.lo + t), tuple(self.hi + t))

    def negate(self) -> "Box":
        return Box(tuple(-self.hi), tuple(-self.lo))

    def minkowski_sum(self, other: "Box") -> "Box":
        return Box(tuple(self.lo + other.lo), tuple(self.hi + other.hi))

    def expand(self, margin) -> "Box":
        m = _per_axis(margin, self.dim)
        return Box(tuple(self.lo - m), tuple(self.hi + m))

    def scale(self, factor: float) -> "Box":
        return Box(tuple(self.lo * factor), tuple(self.hi * factor))

    def intersect(self, other: "Box") -> "Box":
        return Box(tuple(np.maximum(self.lo, other.lo)), tuple(np.minimum(self.hi, other.hi)))

    def erode(self, other: "Box") -> "Box":
        """Minkowski difference self ⊖ other = {t : t + other ⊆ self}."""
        return Box(tuple(self.lo - other.lo), tuple(self.hi - other.hi))

    def difference(self, other: "Box", keep_faces: bool) -> list["Box"]:
        """
        Decomposes self minus other into at most 2d boxes.

        Corner coordinates are copied, never recomputed, so the pieces share
        boundaries exactly with the inputs. For a closed self minus an open
        other, pieces are closed and degenerate faces are meaningful
        (``keep_faces=True``); for an open self minus a closed other, pieces
        are open and zero-width pieces are dropped.
        """
        lo, hi = list(self.lower), list(self.upper)
        olo, ohi = other.lower, other.upper
        overlap = all(
            max(lo[i], olo[i]) < min(hi[i], ohi[i]) for i in range(self.dim)
        )
        if not overlap:
            return [self]

        pieces: list[Box] = []
        for axis in range(self.dim):
            if olo[axis] > lo[axis] or (keep_faces and olo[axis] >= lo[axis]):
                below_hi = list(hi)
                below_hi[axis] = min(hi[axis], olo[axis])
                pieces.append(Box(tuple(lo), tuple(below_hi)))
            if ohi[axis] < hi[axis] or (keep_faces and ohi[axis] <= hi[axis]):
                above_lo = list(lo)
                above_lo[axis] = max(lo[axis], ohi[axis])
                pieces.append(Box(tuple(above_lo), tuple(hi)))
            lo[axis] = max(lo[axis], olo[axis])
            hi[axis] = min(hi[axis], ohi[axis])

        mode: Mode = "closed" if keep_faces else "open"
        return [p for p in pieces if not p.is_empty(mode)]

    def grid(self, step) -> np.ndarray:
        """Regular grid of points lo + step·n inside the half-open box."""
        step = _per_axis(step, self.dim)
        axes = [
            self.lo[i] + step[i] * np.arange(int(np.ceil(self.widths[i] / step[i] - 1e-12)))
            for i in range(self.dim)
        ]
        if self.dim == 1:
            return axes[0].reshape(-1, 1)
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    def to_list(self) -> list[list[float]]:
        return [list(self.lower), list(self.upper)]

    @classmethod
    def from_list(cls, data: Sequence[Sequence[float]]) -> "Box":
        return cls(tuple(data[0]), tuple(data[1]))


@dataclass(frozen=True)
class BoxUnion:
    """Finite union of boxes sharing one membership semantics."""

    boxes: tuple[Box, ...]
    mode: Mode = "closed"

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        dims = {b.dim for b in self.boxes}
        if len(dims) > 1:
            raise ValueError("❌ All boxes of a union must share a dimension")

    @classmethod
    def of(cls, boxes: Iterable[Box] | Box, mode: Mode = "closed") -> "BoxUnion":
        if isinstance(boxes, Box):
            boxes = [boxes]
        return cls(tuple(boxes), mode)

    @property
    def dim(self) -> int | None:
        return self.boxes[0].dim if self.boxes else None

    def is_empty(self) -> bool:
        return all(b.is_empty(self.mode) for b in self.boxes)

    def contains(self, points) -> np.ndarray:
        if not self.boxes:
            return np.zeros(len(as_points(points)), dtype=bool)
        pts = as_points(points, self.dim)
        mask = np.zeros(len(pts), dtype=bool)
        for box in self.boxes:
            mask |= box.contains(pts, self.mode)
        return mask

    def union(self, other: "BoxUnion") -> "BoxUnion":
        return BoxUnion(self.boxes + other.boxes, self.mode)

    def minkowski_sum(self, other: Box) -> "BoxUnion":
        return BoxUnion(tuple(b.minkowski_sum(other) for b in self.boxes), self.mode)

    def subtract(self, other: Box) -> "BoxUnion":
        """Removes ``other`` (with the complementary semantics) from every member."""
        keep_faces = self.mode == "closed"
        pieces: list[Box] = []
        for box in self.boxes:
            pieces.extend(box.difference(other, keep_faces=keep_faces))
        return BoxUnion(tuple(pieces), self.mode)

    def bounding_box(self) -> Box | None:
        if not self.boxes:
            return None
        lo = np.min([b.lo for b in self.boxes], axis=0)
        hi = np.max([b.hi for b in self.boxes], axis=0)
        return Box(tuple(lo), tuple(hi))

    def within(self, window: Box) -> bool:
        """True if every member (closed) lies in the half-open window."""
        return all(window.contains_box(b, other_closed=True) for b in self.boxes)

    def to_list(self) -> list[list[list[float]]]:
        return [b.to_list() for b in self.boxes]
