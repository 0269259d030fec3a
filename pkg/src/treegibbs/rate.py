"""The explicit rate function and its minimizer.

On the constrained manifold M (probability vectors with mean class 2 for
labeled trees, 1 for plane trees) define

    J(p) = -h(p) + beta * E(p) + G(p)        (labeled)
    J(p) = -h(p) + beta * E(p)               (plane)

with entropy h(p) = -sum p_k ln p_k, mean energy E(p) = sum p_k c(k), and
the combinatorial term G(p) = sum p_k ln((k-1)!) that only labeled trees
carry.  J is strictly convex on M, so it has a unique minimizer p*, and the
rate function is I(p) = J(p) - J(p*).

p* is found through the exponential tilt family p_k(x) ~ w_k x^k with
w_k = exp(-beta c(k)) / (k-1)! (labeled) or exp(-beta c(k)) (plane): the
stationarity conditions of J under the two linear constraints are solved
exactly by some member of this family, and the mean class is strictly
increasing in x, so the constraint reduces to monotone one-dimensional
root finding in ln x.  When the target mean sits on the closed end of the
achievable range (labeled D = 2, plane D = 1, where M degenerates to a
single point) the minimizer is the boundary vertex of M and the context
carries a boundary flag instead of a tilt parameter.

A brute-force lattice oracle (grid_minimize_J) cross-checks the tilt
solution by direct minimization over a fine grid on M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .combinatorics import log_factorials
from .ensembles import (
    EnsembleSpec,
    FrequencyVector,
    Kind,
    as_frequency,
    validate_spec,
)
from .errors import KindMismatch, LatticeTooLarge

#: Default ceiling on grid points enumerated by the lattice oracle.
DEFAULT_MAX_GRID = 20_000_000

_TILT_TOL = 1e-13
_TILT_MAX_ITER = 200
_BRACKET = 60.0


def _xlogx(v: np.ndarray) -> np.ndarray:
    return np.where(v > 0.0, v * np.log(np.where(v > 0.0, v, 1.0)), 0.0)


def entropy(p) -> float:
    """Shannon entropy -sum p_k ln p_k with the 0 ln 0 = 0 convention."""
    arr = p.p if isinstance(p, FrequencyVector) else np.asarray(p, dtype=np.float64)
    if np.any(arr < -1e-12):
        raise ValueError("entropy needs nonnegative entries")
    return float(-_xlogx(np.clip(arr, 0.0, None)).sum())


def energy_mean(p, c) -> float:
    """Mean energy E(p) = sum p_k c(k)."""
    arr = p.p if isinstance(p, FrequencyVector) else np.asarray(p, dtype=np.float64)
    cv = np.asarray(c, dtype=np.float64)
    if arr.size != cv.size:
        raise ValueError("frequency and energy vectors differ in length")
    return float(arr @ cv)


def g_term(p: FrequencyVector) -> float:
    """Combinatorial term G(p) = sum p_k ln((k-1)!), labeled kind only.

    Identically zero when D <= 2 since ln 0! = ln 1! = 0.
    """
    if p.kind is not Kind.LABELED:
        raise KindMismatch("G(p) is only defined for labeled ensembles")
    return float(p.p @ log_factorials(p.classes() - 1))


def _g_weights(spec: EnsembleSpec) -> np.ndarray:
    if spec.kind is Kind.LABELED:
        return log_factorials(spec.classes() - 1)
    return np.zeros(spec.n_classes)


def j_values(spec: EnsembleSpec, pmat: np.ndarray) -> np.ndarray:
    """Vectorized J over rows of ``pmat`` (no manifold checks)."""
    pmat = np.asarray(pmat, dtype=np.float64)
    single = pmat.ndim == 1
    if single:
        pmat = pmat[None, :]
    vals = (
        _xlogx(pmat).sum(axis=1)
        + spec.beta * (pmat @ spec.energies())
        + pmat @ _g_weights(spec)
    )
    return vals[0] if single else vals


def J_value(p, spec: EnsembleSpec) -> float:
    """J(p) for an on-manifold frequency vector; raises OffManifold otherwise."""
    validate_spec(spec)
    fv = as_frequency(spec, p)
    fv.require_on_manifold()
    return float(j_values(spec, fv.p))


def _tilt_base(spec: EnsembleSpec) -> np.ndarray:
    """ln w_k for the tilt family."""
    base = -spec.beta * spec.energies()
    if spec.kind is Kind.LABELED:
        base = base - gammaln(spec.classes().astype(np.float64))
    return base


def _tilt_probs(spec: EnsembleSpec, log_x: float) -> np.ndarray:
    lp = _tilt_base(spec) + spec.classes() * log_x
    lp -= lp.max()
    p = np.exp(lp)
    return p / p.sum()


def tilt_frequencies(x: float, spec: EnsembleSpec) -> FrequencyVector:
    """Normalized tilt member p_k(x) ~ w_k x^k; generally off-manifold."""
    if x <= 0:
        raise ValueError("tilt parameter must be positive")
    validate_spec(spec)
    return FrequencyVector(spec.kind, _tilt_probs(spec, float(np.log(x))))


def tilt_mean(x: float, spec: EnsembleSpec) -> float:
    """Mean class under p(x); strictly increasing in x."""
    if x <= 0:
        raise ValueError("tilt parameter must be positive")
    validate_spec(spec)
    return float(spec.classes() @ _tilt_probs(spec, float(np.log(x))))


@dataclass(frozen=True, eq=False)
class RateContext:
    """Solved minimizer: p*, J(p*), and the tilt parameter or boundary flag."""

    spec: EnsembleSpec
    pstar: FrequencyVector
    Jstar: float
    tilt_x: float | None
    boundary: bool
    stationarity_residual: float


def _stationarity_residual(spec: EnsembleSpec, p: np.ndarray) -> float:
    """Max deviation of ln p_k + beta c(k) + ln (k-1)! from an affine law in k."""
    ks = spec.classes().astype(np.float64)
    y = np.log(p) + spec.beta * spec.energies() + _g_weights(spec)
    coef = np.polyfit(ks, y, 1)
    return float(np.abs(y - np.polyval(coef, ks)).max())


def solve_pstar(spec: EnsembleSpec) -> RateContext:
    """Minimize J over M via the tilt family.

    Interior targets are solved by bisection over ln x on [-60, 60]
    (expanded geometrically when needed) until the mean-class residual
    drops below 1e-13.  When the target mean coincides with the achievable
    supremum (labeled D = 2, plane D = 1) the minimizer is the boundary
    point mass at class D and the boundary flag is set.
    """
    validate_spec(spec)
    target = spec.mean_target
    k_min, k_max = spec.k_min, spec.D

    if target >= k_max - 1e-9 or target <= k_min + 1e-9:
        p = np.zeros(spec.n_classes)
        p[-1 if target >= k_max - 1e-9 else 0] = 1.0
        fv = FrequencyVector(spec.kind, p)
        return RateContext(
            spec=spec,
            pstar=fv,
            Jstar=float(j_values(spec, p)),
            tilt_x=None,
            boundary=True,
            stationarity_residual=float("nan"),
        )

    def mean_at(t: float) -> float:
        return float(spec.classes() @ _tilt_probs(spec, t))

    lo, hi = -_BRACKET, _BRACKET
    for _ in range(60):
        if mean_at(lo) < target:
            break
        lo *= 2.0
    for _ in range(60):
        if mean_at(hi) > target:
            break
        hi *= 2.0

    t = 0.5 * (lo + hi)
    for _ in range(_TILT_MAX_ITER):
        t = 0.5 * (lo + hi)
        mu = mean_at(t)
        if abs(mu - target) <= _TILT_TOL:
            break
        if mu < target:
            lo = t
        else:
            hi = t

    p = _tilt_probs(spec, t)
    fv = FrequencyVector(spec.kind, p)
    return RateContext(
        spec=spec,
        pstar=fv,
        Jstar=float(j_values(spec, p)),
        tilt_x=float(np.exp(t)),
        boundary=False,
        stationarity_residual=_stationarity_residual(spec, p),
    )


def rate_value(p, ctx: RateContext) -> float:
    """I(p) = J(p) - J(p*); requires p on-manifold."""
    return J_value(p, ctx.spec) - ctx.Jstar


# ---------------------------------------------------------------------------
# manifold parameterization and the grid oracle

# M is parameterized by the free coordinates p_k for k >= k_min + 2; the two
# lowest classes follow from the constraints:
#   labeled (k_min = 1):  p_1 = sum (k-2) u_k,   p_2 = 1 - sum (k-1) u_k
#   plane   (k_min = 0):  p_0 = sum (k-1) u_k,   p_1 = 1 - sum k u_k


def free_classes(spec: EnsembleSpec) -> np.ndarray:
    return np.arange(spec.k_min + 2, spec.D + 1)


def from_free_coordinates(spec: EnsembleSpec, u: np.ndarray) -> np.ndarray:
    """Manifold points from free coordinates; rows may have negative pinned
    entries when u leaves the feasible polytope."""
    u = np.asarray(u, dtype=np.float64)
    single = u.ndim == 1
    if single:
        u = u[None, :]
    ks = free_classes(spec).astype(np.float64)
    if spec.kind is Kind.LABELED:
        p_low = u @ (ks - 2.0)
        p_next = 1.0 - u @ (ks - 1.0)
    else:
        p_low = u @ (ks - 1.0)
        p_next = 1.0 - u @ ks
    out = np.empty((u.shape[0], spec.n_classes))
    out[:, 0] = p_low
    out[:, 1] = p_next
    out[:, 2:] = u
    return out[0] if single else out


def to_free_coordinates(spec: EnsembleSpec, p) -> np.ndarray:
    arr = p.p if isinstance(p, FrequencyVector) else np.asarray(p, dtype=np.float64)
    return arr[2:].copy()


def j_free_gradient(spec: EnsembleSpec, p) -> np.ndarray:
    """Analytic gradient of J in the free-coordinate chart of M.

    Requires an interior point (all p_k > 0).  dJ/du_j collects the chain
    rule through the two pinned coordinates.
    """
    validate_spec(spec)
    fv = as_frequency(spec, p)
    fv.require_on_manifold()
    arr = fv.p
    if np.any(arr <= 0.0):
        raise ValueError("gradient needs an interior point (all p_k > 0)")
    dJdp = np.log(arr) + 1.0 + spec.beta * spec.energies() + _g_weights(spec)
    ks = free_classes(spec).astype(np.float64)
    if spec.kind is Kind.LABELED:
        a_low, a_next = ks - 2.0, -(ks - 1.0)
    else:
        a_low, a_next = ks - 1.0, -ks
    return a_low * dJdp[0] + a_next * dJdp[1] + dJdp[2:]


def manifold_grid(
    spec: EnsembleSpec, resolution: int, *, max_points: int = DEFAULT_MAX_GRID
) -> np.ndarray:
    """Lattice of M at free-coordinate spacing 1/resolution.

    Returns an (M, n_classes) float matrix; raises LatticeTooLarge when the
    raw free-coordinate box exceeds ``max_points``.
    """
    validate_spec(spec)
    if resolution < 10:
        raise ValueError("resolution must be >= 10")
    n_free = spec.n_classes - 2
    if n_free == 0:
        p = np.zeros((1, spec.n_classes))
        p[0, -1] = 1.0
        return p
    if float(resolution + 1) ** n_free > max_points:
        raise LatticeTooLarge(
            f"grid would hold {(resolution + 1) ** n_free} points, cap is {max_points}"
        )
    axes = [np.arange(resolution + 1) / resolution] * n_free
    mesh = np.meshgrid(*axes, indexing="ij")
    u = np.stack([m.ravel() for m in mesh], axis=1)
    pts = from_free_coordinates(spec, u)
    keep = (pts[:, 0] >= -1e-12) & (pts[:, 1] >= -1e-12)
    pts = pts[keep]
    np.clip(pts[:, :2], 0.0, None, out=pts[:, :2])
    return pts


def grid_minimize_J(
    spec: EnsembleSpec, resolution: int, *, max_points: int = DEFAULT_MAX_GRID
) -> FrequencyVector:
    """Brute-force oracle for p*: best grid point of M at 1/resolution."""
    pts = manifold_grid(spec, resolution, max_points=max_points)
    vals = j_values(spec, pts)
    return FrequencyVector(spec.kind, pts[int(np.argmin(vals))])
