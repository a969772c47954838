"""Initial traces: singular interval sets plus integer-weighted atoms.

A trace is the pair (lambda, mu): ``lambda`` is a finite union of closed
intervals (points allowed) carrying infinite local particle density, and
``mu`` is an atomic measure with positive integer weights living off
``lambda``.  This module also provides the ternary-Cantor prefix family,
Minkowski sausage measures and sausage-based dimension estimates.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, ParameterError
from .fitting import PowerFit, loglog_ols

__all__ = [
    "IntervalSet",
    "AtomicMeasure",
    "InitialTrace",
    "make_cantor",
    "sausage_measure",
    "minkowski_dim_fit",
    "trace_leq",
]

CANTOR_DIMENSION = math.log(2.0) / math.log(3.0)

_MAX_CANTOR_DEPTH = 40


def _merge_intervals(pairs) -> tuple[tuple[float, float], ...]:
    """Sort closed intervals and merge overlapping or touching ones."""
    items = sorted((float(a), float(b)) for a, b in pairs)
    merged: list[list[float]] = []
    for a, b in items:
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ParameterError(f"interval endpoints must be finite, got [{a}, {b}]")
        if b < a:
            raise ParameterError(f"interval [{a}, {b}] has negative length")
        if merged and a <= merged[-1][1]:
            if b > merged[-1][1]:
                merged[-1][1] = b
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


@dataclass(frozen=True)
class IntervalSet:
    """Disjoint, sorted union of closed intervals (degenerate ones are points).

    Canonicalization (sorting, merging touching intervals) happens at
    construction, so equality and containment are well defined.  Instances
    are immutable and safe to share across threads.
    """

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", _merge_intervals(self.intervals))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def point(cls, x: float) -> "IntervalSet":
        return cls(((x, x),))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def total_length(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    @property
    def bounds(self) -> tuple[float, float] | None:
        if not self.intervals:
            return None
        return (self.intervals[0][0], self.intervals[-1][1])

    @property
    def lefts(self) -> np.ndarray:
        return np.array([a for a, _ in self.intervals], dtype=float)

    @property
    def rights(self) -> np.ndarray:
        return np.array([b for _, b in self.intervals], dtype=float)

    def contains_point(self, x: float) -> bool:
        i = bisect_right([a for a, _ in self.intervals], x) - 1
        return i >= 0 and x <= self.intervals[i][1]

    def contains_interval(self, a: float, b: float) -> bool:
        """True iff [a, b] lies inside a single stored interval."""
        i = bisect_right([lo for lo, _ in self.intervals], a) - 1
        return i >= 0 and b <= self.intervals[i][1]

    def issubset(self, other: "IntervalSet") -> bool:
        return all(other.contains_interval(a, b) for a, b in self.intervals)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def distance_to_points(self, x: np.ndarray) -> np.ndarray:
        """Distance from each point of ``x`` to the set (0 inside)."""
        x = np.asarray(x, dtype=float)
        if not self.intervals:
            return np.full(x.shape, np.inf)
        lo = self.lefts
        hi = self.rights
        i = np.searchsorted(lo, x, side="right") - 1
        d_prev = np.where(i >= 0, x - hi[np.clip(i, 0, len(hi) - 1)], np.inf)
        d_prev = np.maximum(d_prev, 0.0)
        j = np.clip(i + 1, 0, len(lo) - 1)
        d_next = np.where(i + 1 < len(lo), lo[j] - x, np.inf)
        d_next = np.maximum(d_next, 0.0)
        return np.minimum(d_prev, d_next)

    def min_gap(self) -> float:
        """Smallest gap between consecutive intervals; inf if fewer than two."""
        if len(self.intervals) < 2:
            return math.inf
        gaps = [self.intervals[k + 1][0] - self.intervals[k][1] for k in range(len(self.intervals) - 1)]
        return float(min(gaps))


@dataclass(frozen=True)
class AtomicMeasure:
    """Atoms (position, integer weight >= 1) with strictly increasing positions.

    Duplicated positions passed to the constructor are merged by summing
    weights.  Total mass is always finite here; unbounded configurations are
    producible only by a caller-side schedule, never stored.
    """

    atoms: tuple[tuple[float, int], ...] = ()

    def __post_init__(self):
        merged: dict[float, int] = {}
        for x, w in self.atoms:
            x = float(x)
            w = int(w)
            if not math.isfinite(x):
                raise ParameterError(f"atom position must be finite, got {x}")
            if w < 1:
                raise ParameterError(f"atom weight must be a positive integer, got {w}")
            merged[x] = merged.get(x, 0) + w
        object.__setattr__(self, "atoms", tuple(sorted(merged.items())))

    @classmethod
    def empty(cls) -> "AtomicMeasure":
        return cls(())

    @classmethod
    def from_positions(cls, positions) -> "AtomicMeasure":
        return cls(tuple((float(x), 1) for x in positions))

    @property
    def is_empty(self) -> bool:
        return not self.atoms

    @property
    def positions(self) -> np.ndarray:
        return np.array([x for x, _ in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=np.int64)

    @property
    def total_mass(self) -> int:
        return int(sum(w for _, w in self.atoms))

    def mass_at(self, x: float) -> int:
        for px, w in self.atoms:
            if px == x:
                return w
        return 0


@dataclass(frozen=True)
class InitialTrace:
    """The pair (lambda, mu); mu must live off lambda."""

    lam: IntervalSet = field(default_factory=IntervalSet.empty)
    mu: AtomicMeasure = field(default_factory=AtomicMeasure.empty)

    def __post_init__(self):
        for x, _ in self.mu.atoms:
            if self.lam.contains_point(x):
                raise ParameterError(f"atom at {x} lies inside the singular set")

    @property
    def is_empty(self) -> bool:
        return self.lam.is_empty and self.mu.is_empty

    def support_bounds(self) -> tuple[float, float] | None:
        los: list[float] = []
        his: list[float] = []
        if not self.lam.is_empty:
            lo, hi = self.lam.bounds
            los.append(lo)
            his.append(hi)
        if not self.mu.is_empty:
            los.append(self.mu.atoms[0][0])
            his.append(self.mu.atoms[-1][0])
        if not los:
            return None
        return (min(los), max(his))

    def to_json(self) -> str:
        doc = {
            "lambda": [[a, b] for a, b in self.lam.intervals],
            "mu": [[x, w] for x, w in self.mu.atoms],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "InitialTrace":
        doc = json.loads(text)
        lam = IntervalSet(tuple((float(a), float(b)) for a, b in doc.get("lambda", [])))
        mu = AtomicMeasure(tuple((float(x), int(w)) for x, w in doc.get("mu", [])))
        return cls(lam, mu)


def make_cantor(depth: int) -> IntervalSet:
    """Depth-th prefix of the ternary Cantor construction on [0, 1].

    Returns 2**depth closed intervals of length 3**-depth.  Depth is capped
    at 40 to guard against interval-count blowup.
    """
    depth = int(depth)
    if depth < 0:
        raise ParameterError(f"depth must be nonnegative, got {depth}")
    if depth > _MAX_CANTOR_DEPTH:
        raise ParameterError(f"depth {depth} exceeds the maximum of {_MAX_CANTOR_DEPTH}")
    intervals = [(0.0, 1.0)]
    for _ in range(depth):
        third = [(b - a) / 3.0 for a, b in intervals]
        intervals = [piece for (a, b), w in zip(intervals, third) for piece in ((a, a + w), (b - w, b))]
    return IntervalSet(tuple(intervals))


def sausage_measure(iset: IntervalSet, r: float) -> float:
    """Lebesgue measure of the open r-neighborhood A + (-r, r).

    Each interval inflates to (a - r, b + r); overlaps are merged by a sweep
    over sorted endpoints, so the result is exact up to rounding.
    """
    r = float(r)
    if r <= 0.0:
        raise ParameterError(f"inflation radius must be positive, got {r}")
    if iset.is_empty:
        return 0.0
    total = 0.0
    cur_lo = cur_hi = None
    for a, b in iset.intervals:
        lo, hi = a - r, b + r
        if cur_hi is None:
            cur_lo, cur_hi = lo, hi
        elif lo <= cur_hi:
            if hi > cur_hi:
                cur_hi = hi
        else:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
    total += cur_hi - cur_lo
    return total


def minkowski_dim_fit(iset: IntervalSet, r_values) -> PowerFit:
    """Estimate Minkowski dimension from the sausage-measure scaling.

    Fits log lambda(A + rB) against log r by least squares over the given
    decreasing radii and returns a PowerFit whose ``exponent`` field holds
    the dimension estimate 1 - slope.  Radii must number at least 4, span at
    least two decades, and stay at or above the finest construction scale of
    the set (its smallest inter-interval gap), where the prefix still scales
    like the ideal set.
    """
    r = np.asarray(list(r_values), dtype=float)
    if r.ndim != 1 or r.size < 4:
        raise ParameterError(f"need at least 4 radii, got {r.size}")
    if np.any(r <= 0):
        raise ParameterError("radii must be positive")
    if not np.all(np.diff(r) < 0):
        raise ParameterError("radii must be strictly decreasing")
    if r[0] / r[-1] < 100.0 * (1.0 - 1e-12):
        raise ParameterError("radii must span at least two decades")
    finest = iset.min_gap()
    if math.isfinite(finest) and r[-1] < finest * (1.0 - 1e-12):
        raise ParameterError(
            f"smallest radius {r[-1]:g} is below the finest construction scale {finest:g}"
        )
    if iset.is_empty:
        raise ParameterError("cannot fit a dimension to the empty set")
    lam = np.array([sausage_measure(iset, ri) for ri in r])
    if np.allclose(lam, lam[0], rtol=1e-14, atol=0.0):
        raise FitError("sausage measure is constant over the window; fit is degenerate")
    slope, intercept, r2 = loglog_ols(r, lam)
    return PowerFit(
        exponent=float(1.0 - slope),
        log_prefactor=float(intercept),
        r_squared=float(r2),
        window=(float(r[-1]), float(r[0])),
    )


def trace_leq(a: InitialTrace, b: InitialTrace) -> bool:
    """Partial order: a.lam inside b.lam and a's atoms dominated off b.lam.

    Atom positions are compared exactly; atoms of ``a`` that fall inside
    ``b``'s singular set are absorbed by it.
    """
    if not a.lam.issubset(b.lam):
        return False
    for x, w in a.mu.atoms:
        if b.lam.contains_point(x):
            continue
        if b.mu.mass_at(x) < w:
            return False
    return True
