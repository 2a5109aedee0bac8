"""Maximization linear assignment: production solver, exhaustive oracle, projection.

The solver maximizes the Frobenius inner product ``<W, P> = sum_i W[i, sigma(i)]``
over permutation matrices. It is backed by scipy's shortest-augmenting-path
assignment (Jonker-Volgenant family, O(n^3)), which is deterministic for a
given input; on fully tied inputs it yields the lexicographically smallest
assignment. The factorial oracle is kept for testing and never shares code
with the solver.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["lap_bruteforce", "lap_value", "project_to_permutation", "solve_lap_max"]

_BRUTEFORCE_MAX_N = 9
_perm_cache: dict[int, np.ndarray] = {}


def solve_lap_max(W) -> np.ndarray:
    """Return sigma maximizing ``sum_i W[i, sigma(i)]`` (global optimum)."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("assignment weights must be square")
    if not np.isfinite(W).all():
        raise ValueError("assignment weights must be finite")
    _, cols = linear_sum_assignment(W, maximize=True)
    return cols


def lap_value(W, sigma) -> float:
    """Assignment value ``sum_i W[i, sigma(i)]``."""
    W = np.asarray(W, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.intp)
    return float(W[np.arange(sigma.size), sigma].sum())


def _all_perms(n: int) -> np.ndarray:
    if n not in _perm_cache:
        _perm_cache[n] = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    return _perm_cache[n]


def lap_bruteforce(W) -> np.ndarray:
    """Exhaustive assignment maximizer for n <= 9 (testing oracle).

    Enumerates all n! permutations; ties resolve to the lexicographically
    smallest sigma.
    """
    W = np.asarray(W, dtype=np.float64)
    n = W.shape[0]
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("assignment weights must be square")
    if n > _BRUTEFORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {_BRUTEFORCE_MAX_N}, got n={n}")
    perms = _all_perms(n)
    values = W[np.arange(n), perms].sum(axis=1)
    return perms[int(np.argmax(values))].copy()


def project_to_permutation(D) -> np.ndarray:
    """Nearest permutation to a doubly stochastic matrix, as ``argmax_P <D, P>``."""
    return solve_lap_max(np.asarray(D, dtype=np.float64))
