"""Shared test helpers: enumeration-based Gibbs oracles and chi-square checks.

The oracles here deliberately avoid the library's DP/closed-form paths:
tree laws come from exhaustive enumeration plus per-tree energies, so they
stay independent of the code they verify.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import chi2

from treegibbs import (
    EnsembleSpec,
    Kind,
    chi_of,
    energy_of,
    enumerate_labeled_trees,
    enumerate_plane_trees,
    prufer_encode,
)


def tree_key(tree, spec: EnsembleSpec) -> tuple[int, ...]:
    """Canonical hashable identity: the Prufer code or the child-count row."""
    if spec.kind is Kind.LABELED:
        return prufer_encode(tree)
    return tree.child_counts


def gibbs_tree_law(spec: EnsembleSpec, N: int) -> dict[tuple[int, ...], float]:
    """Exact Gibbs law over individual trees by exhaustive enumeration."""
    if spec.kind is Kind.LABELED:
        trees = [
            t for t in enumerate_labeled_trees(N) if int(t.degrees().max()) <= spec.D
        ]
    else:
        trees = list(enumerate_plane_trees(N, spec.D))
    weights = {tree_key(t, spec): math.exp(-spec.beta * energy_of(t, spec)) for t in trees}
    z = sum(weights.values())
    return {k: w / z for k, w in weights.items()}


def gibbs_profile_law(spec: EnsembleSpec, N: int) -> dict[tuple[int, ...], float]:
    """Exact law of the class profile by exhaustive enumeration."""
    if spec.kind is Kind.LABELED:
        trees = [
            t for t in enumerate_labeled_trees(N) if int(t.degrees().max()) <= spec.D
        ]
    else:
        trees = list(enumerate_plane_trees(N, spec.D))
    weights: dict[tuple[int, ...], float] = {}
    for t in trees:
        key = chi_of(t, spec).counts
        weights[key] = weights.get(key, 0.0) + math.exp(-spec.beta * energy_of(t, spec))
    z = sum(weights.values())
    return {k: w / z for k, w in weights.items()}


def brute_force_log_partition(spec: EnsembleSpec, N: int) -> float:
    """ln sum_T exp(-beta H(T)) by exhaustive enumeration."""
    if spec.kind is Kind.LABELED:
        trees = [
            t for t in enumerate_labeled_trees(N) if int(t.degrees().max()) <= spec.D
        ]
    else:
        trees = list(enumerate_plane_trees(N, spec.D))
    energies = np.array([energy_of(t, spec) for t in trees])
    scaled = -spec.beta * energies
    m = scaled.max()
    return float(m + np.log(np.exp(scaled - m).sum()))


def iter_profiles(k_min: int, D: int, total: int, weighted: int):
    """Independent enumeration of class profiles with the two linear
    constraints sum n = total and sum k n_k = weighted (pruned recursion)."""
    results: list[tuple[int, ...]] = []

    def rec(k: int, rem_t: int, rem_w: int, acc: list[int]) -> None:
        if k == k_min:
            if rem_w == k_min * rem_t and rem_t >= 0 and rem_w >= 0:
                results.append(tuple([rem_t] + acc))
            return
        top = rem_t if k == 0 else min(rem_t, rem_w // k)
        for m in range(top + 1):
            rec(k - 1, rem_t - m, rem_w - k * m, [m] + acc)

    rec(D, total, weighted, [])
    return results


def iter_feasible_profiles(spec: EnsembleSpec, N: int):
    target = 2 * N - 2 if spec.kind is Kind.LABELED else N - 1
    return iter_profiles(spec.k_min, spec.D, N, target)


def chi_square_check(
    observed: dict, expected_probs: dict, total: int, significance: float = 0.001
) -> tuple[float, float]:
    """Goodness-of-fit statistic and its rejection threshold.

    Categories with expected count below 5 are pooled into one bin so the
    asymptotic chi-square distribution applies.  Returns (statistic,
    critical value at the given significance); the test passes when
    statistic < critical.
    """
    keys = sorted(expected_probs)
    exp = np.array([expected_probs[k] * total for k in keys])
    obs = np.array([observed.get(k, 0) for k in keys], dtype=np.float64)
    unseen = set(observed) - set(keys)
    assert not unseen, f"observed categories outside the support: {sorted(unseen)[:3]}"
    big = exp >= 5.0
    if big.all():
        exp_bins, obs_bins = exp, obs
    else:
        exp_bins = np.append(exp[big], exp[~big].sum())
        obs_bins = np.append(obs[big], obs[~big].sum())
    assert exp_bins.min() > 0
    stat = float(((obs_bins - exp_bins) ** 2 / exp_bins).sum())
    dof = exp_bins.size - 1
    critical = float(chi2.ppf(1.0 - significance, dof))
    return stat, critical


def random_manifold_point(
    spec: EnsembleSpec, rng: np.random.Generator, interior_floor: float = 0.0
) -> np.ndarray:
    """Rejection-sample a point of M through the free-coordinate chart."""
    from treegibbs.rate import from_free_coordinates

    n_free = spec.n_classes - 2
    if n_free == 0:
        p = np.zeros(spec.n_classes)
        p[-1] = 1.0
        return p
    while True:
        u = rng.random(n_free) * (0.9 / max(1, n_free))
        p = from_free_coordinates(spec, u)
        if p.min() >= interior_floor:
            return p
