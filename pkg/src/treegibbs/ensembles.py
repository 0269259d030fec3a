"""Domain types for Gibbs ensembles of degree-bounded trees.

Two ensemble kinds are supported:

* ``Kind.LABELED``: labeled trees on N vertices, every vertex degree in
  ``1..D``.  Vertex classes are degrees, the feasible degree sum is
  ``2N - 2`` and frequency vectors concentrate on the manifold
  ``{sum p_k = 1, sum k p_k = 2}``.
* ``Kind.PLANE``: rooted ordered trees, every branching (child count) in
  ``0..D``.  Classes are child counts, the feasible class sum is
  ``N - 1`` and the manifold constraint is ``sum k p_k = 1``.

All types are immutable value objects and safe to share between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BadEnergyTable, BoundTooSmall, KindMismatch, OffManifold

#: Absolute tolerance for both linear manifold constraints.
MANIFOLD_TOL = 1e-12


class Kind(Enum):
    LABELED = "labeled"
    PLANE = "plane"


@dataclass(frozen=True)
class EnsembleSpec:
    """Ensemble parameters: kind, class bound D, inverse temperature, energies.

    ``c[i]`` is the energy of class ``k_min + i``, i.e. degrees ``1..D`` for
    labeled trees and child counts ``0..D`` for plane trees.
    """

    kind: Kind
    D: int
    beta: float
    c: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "D", int(self.D))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))

    @property
    def k_min(self) -> int:
        return 1 if self.kind is Kind.LABELED else 0

    @property
    def n_classes(self) -> int:
        return self.D - self.k_min + 1

    @property
    def mean_target(self) -> float:
        """Manifold mean-class constraint: 2 for labeled, 1 for plane."""
        return 2.0 if self.kind is Kind.LABELED else 1.0

    def classes(self) -> np.ndarray:
        return np.arange(self.k_min, self.D + 1)

    def energies(self) -> np.ndarray:
        return np.asarray(self.c, dtype=np.float64)

    @classmethod
    def labeled(cls, D: int, beta: float = 0.0, c=None) -> "EnsembleSpec":
        if c is None:
            c = (0.0,) * D
        return cls(Kind.LABELED, D, beta, tuple(c))

    @classmethod
    def plane(cls, D: int, beta: float = 0.0, c=None) -> "EnsembleSpec":
        if c is None:
            c = (0.0,) * (D + 1)
        return cls(Kind.PLANE, D, beta, tuple(c))


def validate_spec(spec: EnsembleSpec) -> EnsembleSpec:
    """Check all EnsembleSpec invariants, returning the spec unchanged.

    Raises BoundTooSmall when D is below the minimum for the kind (2 for
    labeled, 1 for plane) and BadEnergyTable when the energy table has the
    wrong length or non-finite entries.  beta may have either sign but must
    be finite.
    """
    if not isinstance(spec.kind, Kind):
        raise KindMismatch(f"unknown ensemble kind: {spec.kind!r}")
    d_min = 2 if spec.kind is Kind.LABELED else 1
    if spec.D < d_min:
        raise BoundTooSmall(
            f"{spec.kind.value} ensembles need D >= {d_min}, got D={spec.D}"
        )
    if len(spec.c) != spec.n_classes:
        raise BadEnergyTable(
            f"energy table must have {spec.n_classes} entries for "
            f"{spec.kind.value} D={spec.D}, got {len(spec.c)}"
        )
    if not all(math.isfinite(v) for v in spec.c):
        raise BadEnergyTable("energy table entries must be finite")
    if not math.isfinite(spec.beta):
        raise ValueError("beta must be finite")
    return spec


@dataclass(frozen=True)
class CountVector:
    """Integer vertex counts per class (degree or child count)."""

    kind: Kind
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = tuple(int(v) for v in self.counts)
        if any(v < 0 for v in counts):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def N(self) -> int:
        return sum(self.counts)

    @property
    def k_min(self) -> int:
        return 1 if self.kind is Kind.LABELED else 0

    def classes(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_min + len(self.counts))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    def weighted_sum(self) -> int:
        """sum_k k * counts_k, in exact integer arithmetic."""
        return sum(int(k) * v for k, v in zip(self.classes(), self.counts))


def is_feasible(n: CountVector, spec: EnsembleSpec) -> bool:
    """True iff ``n`` can be the class profile of a tree under ``spec``.

    Labeled trees need ``sum k n_k = 2N - 2``; plane trees need
    ``sum k n_k = N - 1``.  The total-count constraint holds by
    construction of CountVector.
    """
    if n.kind is not spec.kind:
        raise KindMismatch(
            f"count vector kind {n.kind.value} does not match spec {spec.kind.value}"
        )
    if len(n.counts) != spec.n_classes:
        raise ValueError(
            f"count vector has {len(n.counts)} classes, spec needs {spec.n_classes}"
        )
    N = n.N
    target = 2 * N - 2 if spec.kind is Kind.LABELED else N - 1
    return n.weighted_sum() == target


@dataclass(frozen=True, eq=False)
class FrequencyVector:
    """Real class-frequency vector; entries in [0, 1].

    Not necessarily on the manifold: empirical frequencies ``chi/N`` miss
    the mean constraint by exactly ``2/N`` (labeled) or ``1/N`` (plane).
    """

    kind: Kind
    p: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.p, dtype=np.float64, copy=True)
        if p.ndim != 1:
            raise ValueError("frequency vector must be one-dimensional")
        if np.any(p < -MANIFOLD_TOL) or np.any(p > 1.0 + 1e-9):
            raise ValueError("frequencies must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def k_min(self) -> int:
        return 1 if self.kind is Kind.LABELED else 0

    @property
    def D(self) -> int:
        return self.k_min + self.p.size - 1

    def classes(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_min + self.p.size)

    def mean_class(self) -> float:
        return float(self.classes() @ self.p)

    def mass(self) -> float:
        return float(self.p.sum())

    def l1(self, other: "FrequencyVector") -> float:
        return float(np.abs(self.p - other.p).sum())

    def on_manifold(self, tol: float = MANIFOLD_TOL) -> bool:
        target = 2.0 if self.kind is Kind.LABELED else 1.0
        return abs(self.mass() - 1.0) <= tol and abs(self.mean_class() - target) <= tol

    def require_on_manifold(self, tol: float = MANIFOLD_TOL) -> "FrequencyVector":
        if not self.on_manifold(tol):
            target = 2.0 if self.kind is Kind.LABELED else 1.0
            raise OffManifold(
                f"frequency vector off manifold: mass={self.mass()!r}, "
                f"mean={self.mean_class()!r} (target {target})"
            )
        return self


def freq_from_counts(n: CountVector) -> FrequencyVector:
    """Empirical frequencies ``n / N``.  Requires N >= 1."""
    N = n.N
    if N < 1:
        raise ValueError("count vector is empty")
    return FrequencyVector(n.kind, n.as_array() / float(N))


def as_frequency(spec: EnsembleSpec, p) -> FrequencyVector:
    """Coerce an array-like (or pass through a FrequencyVector) for ``spec``."""
    if isinstance(p, FrequencyVector):
        if p.kind is not spec.kind:
            raise KindMismatch("frequency vector kind does not match spec")
        if p.p.size != spec.n_classes:
            raise ValueError("frequency vector length does not match spec")
        return p
    arr = np.asarray(p, dtype=np.float64)
    if arr.size != spec.n_classes:
        raise ValueError("frequency vector length does not match spec")
    return FrequencyVector(spec.kind, arr)
