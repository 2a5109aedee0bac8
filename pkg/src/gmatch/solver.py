"""Frank-Wolfe graph matching: the relaxed-objective ascent loop and its variants.

The solver maximizes ``trace(A D B D^T)`` (optionally plus a linear term)
over doubly stochastic matrices by repeatedly solving a linear assignment
problem on the exact gradient, taking an exact line-search step along the
segment to the chosen permutation, and stopping on the Frank-Wolfe gap or
on stalled iterates. Step size 1 is applied as an exact copy of the
direction vertex, so convergence *at* a permutation is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import as_adjacency, is_permutation_matrix, require_doubly_stochastic
from .dsinit import random_doubly_stochastic
from .lap import solve_lap_max

__all__ = [
    "FaqOptions",
    "MatchResult",
    "TrajectoryPoint",
    "TwoStepResult",
    "error_breakdown",
    "faq",
    "faq_hard_seeded",
    "faq_with_similarity",
    "line_search_alpha",
    "random_restart_probe",
    "two_step_check",
]


@dataclass(frozen=True)
class FaqOptions:
    """Stopping rule and bookkeeping knobs for the ascent loop.

    The loop stops when the Frank-Wolfe gap falls to ``obj_tol`` relative
    to the current objective, when an accepted step moves the iterate by
    less than ``d_tol`` in Frobenius norm, or after ``max_iter`` steps.
    """

    max_iter: int = 100
    obj_tol: float = 1e-10
    d_tol: float = 1e-8
    record_trajectory: bool = True
    project_final: bool = True
    record_iterates: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.obj_tol <= 0 or self.d_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class TrajectoryPoint:
    """State at the start of one iteration, plus the step taken from it.

    ``alpha`` and ``direction_trace`` are NaN on the terminal row (no step
    was taken from the final state; the direction may still be reported
    when it was computed for the stopping test).
    """

    iteration: int
    trace: float
    accuracy: float
    objective: float
    alpha: float
    direction_trace: float


@dataclass
class MatchResult:
    """Outcome of one solver run."""

    sigma: np.ndarray
    D_final: np.ndarray
    trajectory: list[TrajectoryPoint]
    iterations: int
    converged_at_permutation: bool
    final_objective: float
    iterates: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def accuracy(self) -> float:
        """Fraction of vertices mapped to themselves by the returned permutation."""
        return float(np.count_nonzero(self.sigma == np.arange(self.sigma.size)) / self.sigma.size)

    @property
    def P_star(self) -> np.ndarray:
        P = np.zeros((self.sigma.size, self.sigma.size))
        P[np.arange(self.sigma.size), self.sigma] = 1.0
        return P

    def to_json_dict(self) -> dict:
        return {
            "sigma": self.sigma.tolist(),
            "accuracy": self.accuracy,
            "objective": self.final_objective,
            "iterations": self.iterations,
            "converged_at_permutation": self.converged_at_permutation,
            "trajectory": [
                {
                    "iter": p.iteration,
                    "trace": p.trace,
                    "accuracy": p.accuracy,
                    "objective": p.objective,
                    "alpha": None if np.isnan(p.alpha) else p.alpha,
                }
                for p in self.trajectory
            ],
        }


def _quad_coeffs(A, B, ADB, D, P_cols, linear):
    """Quadratic/linear coefficients of f(alpha) along D + alpha (P - D).

    Returns (a, b) with f(alpha) = a alpha^2 + b alpha + f(D). Uses
    APB = A[:, inv(sigma)] @ B so only one extra matrix product is needed.
    """
    n = D.shape[0]
    rows = np.arange(n)
    inv = np.empty(n, dtype=np.intp)
    inv[P_cols] = rows
    APB = A[:, inv] @ B
    lin_P = APB[rows, P_cols].sum()  # <APB, P>
    a = lin_P - (APB * D).sum() - ADB[rows, P_cols].sum() + (ADB * D).sum()
    b = 2.0 * (ADB[rows, P_cols].sum() - (ADB * D).sum())
    if linear is not None:
        b += linear[rows, P_cols].sum() - (linear * D).sum()
    return float(a), float(b)


def _maximize_quadratic(a: float, b: float) -> float:
    """Maximizer of a x^2 + b x on [0, 1]; endpoint ties break to 1."""
    if a < 0:
        return float(min(1.0, max(0.0, -b / (2.0 * a))))
    # Convex (or linear) along the segment: an endpoint is optimal.
    return 1.0 if a + b >= 0 else 0.0


def line_search_alpha(A, B, D, P):
    """Exact line search along the segment from D to a permutation matrix P.

    Returns ``(alpha, new_objective)`` maximizing
    ``trace(A D_a B D_a^T)`` with ``D_a = D + alpha (P - D)`` over [0, 1].
    """
    from .core import _as_sigma

    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    cols = _as_sigma(P)
    ADB = A @ D @ B
    c = float((ADB * D).sum())
    a, b = _quad_coeffs(A, B, ADB, D, cols, None)
    alpha = _maximize_quadratic(a, b)
    return alpha, a * alpha**2 + b * alpha + c


def _fw_core(A, B, D0, linear, opts: FaqOptions):
    """Shared ascent loop; ``linear`` adds <linear, D> to the objective."""
    n = A.shape[0]
    rows = np.arange(n)
    D = np.array(D0, dtype=np.float64)
    trajectory: list[TrajectoryPoint] = []
    iterates: list[np.ndarray] = []
    k = 0

    def record(iteration, Dk, objective, alpha, dir_trace):
        if opts.record_trajectory:
            trajectory.append(
                TrajectoryPoint(
                    iteration=iteration,
                    trace=float(np.trace(Dk)),
                    accuracy=float(np.trace(Dk) / n),
                    objective=objective,
                    alpha=alpha,
                    direction_trace=dir_trace,
                )
            )

    if opts.record_iterates:
        iterates.append(D.copy())

    while True:
        ADB = A @ D @ B
        f = float((ADB * D).sum())
        if linear is not None:
            f += float((linear * D).sum())
            G = 2.0 * ADB + linear
        else:
            G = 2.0 * ADB
        cols = solve_lap_max(G)
        dir_trace = float(np.count_nonzero(cols == rows))
        gap = float(G[rows, cols].sum() - (G * D).sum())
        if gap <= opts.obj_tol * max(1.0, abs(f)) or k >= opts.max_iter:
            record(k, D, f, np.nan, dir_trace)
            break
        a, b = _quad_coeffs(A, B, ADB, D, cols, linear)
        alpha = _maximize_quadratic(a, b)
        record(k, D, f, alpha, dir_trace)
        if alpha == 1.0:
            D_new = np.zeros_like(D)
            D_new[rows, cols] = 1.0
        else:
            P = np.zeros_like(D)
            P[rows, cols] = 1.0
            D_new = D + alpha * (P - D)
        step_norm = float(np.linalg.norm(D_new - D))
        D = D_new
        k += 1
        if opts.record_iterates:
            iterates.append(D.copy())
        if step_norm < opts.d_tol:
            f_new = a * alpha**2 + b * alpha + f
            record(k, D, f_new, np.nan, np.nan)
            break

    f_final = float((A @ D @ B * D).sum())
    if linear is not None:
        f_final += float((linear * D).sum())
    return D, k, f_final, trajectory, iterates


def _finish(D, steps, f_final, trajectory, iterates, opts: FaqOptions) -> MatchResult:
    at_perm = is_permutation_matrix(D)
    if opts.project_final:
        sigma = solve_lap_max(D)
    elif at_perm:
        sigma = np.argmax(D, axis=1)
    else:
        sigma = solve_lap_max(D)
    return MatchResult(
        sigma=sigma,
        D_final=D,
        trajectory=trajectory,
        iterations=steps,
        converged_at_permutation=at_perm,
        final_objective=f_final,
        iterates=iterates,
    )


def faq(A, B, D0, opts: FaqOptions | None = None) -> MatchResult:
    """Match two graphs by Frank-Wolfe ascent from the initialization D0."""
    opts = opts or FaqOptions()
    A = as_adjacency(A)
    B = as_adjacency(B)
    if A.shape != B.shape:
        raise ValueError("A and B must have the same size")
    D0 = require_doubly_stochastic(D0, 1e-8)
    if D0.shape != A.shape:
        raise ValueError("D0 must match the graph size")
    return _finish(*_fw_core(A, B, D0, None, opts), opts)


def faq_with_similarity(A, B, S, D0, opts: FaqOptions | None = None) -> MatchResult:
    """Match with a similarity bonus: maximize trace(A D B D^T) + trace(S D)."""
    opts = opts or FaqOptions()
    A = as_adjacency(A)
    B = as_adjacency(B)
    S = np.asarray(S, dtype=np.float64)
    if A.shape != B.shape or S.shape != A.shape:
        raise ValueError("A, B, S must share one size")
    D0 = require_doubly_stochastic(D0, 1e-8)
    if D0.shape != A.shape:
        raise ValueError("D0 must match the graph size")
    # trace(S D) = <S^T, D>, so the gradient contribution is S^T.
    return _finish(*_fw_core(A, B, D0, S.T.copy(), opts), opts)


def faq_hard_seeded(A, B, s: int, D0_nonseed, opts: FaqOptions | None = None) -> MatchResult:
    """Match with the first ``s`` vertices fixed to the identity correspondence.

    Callers pre-permute so seeds occupy indices 0..s-1 of both graphs. The
    free block is optimized over doubly stochastic matrices of size n-s
    with the seed-information linear term; the returned permutation is the
    identity on the seed block. The reported objective and trajectory
    describe the free-block problem.
    """
    opts = opts or FaqOptions()
    A = as_adjacency(A)
    B = as_adjacency(B)
    if A.shape != B.shape:
        raise ValueError("A and B must have the same size")
    n = A.shape[0]
    if not 0 <= s < n:
        raise ValueError("seed count must satisfy 0 <= s < n")
    if s == 0:
        return faq(A, B, D0_nonseed, opts)
    A12 = A[:s, s:]
    B12 = B[:s, s:]
    A22 = A[s:, s:]
    B22 = B[s:, s:]
    D0 = require_doubly_stochastic(D0_nonseed, 1e-8)
    if D0.shape[0] != n - s:
        raise ValueError("D0_nonseed must have size n - s")
    linear = 2.0 * (A12.T @ B12)
    D_sub, steps, f_final, trajectory, iterates = _fw_core(A22, B22, D0, linear, opts)
    sub = _finish(D_sub, steps, f_final, trajectory, iterates, opts)
    sigma = np.concatenate([np.arange(s), s + sub.sigma])
    D_full = np.zeros((n, n))
    D_full[:s, :s] = np.eye(s)
    D_full[s:, s:] = D_sub
    return MatchResult(
        sigma=sigma,
        D_final=D_full,
        trajectory=sub.trajectory,
        iterations=sub.iterations,
        converged_at_permutation=sub.converged_at_permutation,
        final_objective=sub.final_objective,
        iterates=sub.iterates,
    )


def error_breakdown(P, partition_a, partition_b):
    """Classify mismatched vertices as within- or between-part for two partitions.

    For each vertex ``i`` with ``sigma(i) != i``, the error is "within"
    a partition if ``i`` and ``sigma(i)`` share a part and "between"
    otherwise. Returns ``(within_a, between_a, within_b, between_b)``.
    """
    from .core import _as_sigma

    sigma = _as_sigma(P)
    n = sigma.size
    counts = []
    for parts in (partition_a, partition_b):
        label = np.empty(n, dtype=np.intp)
        for lbl, part in enumerate(parts):
            label[np.asarray(list(part), dtype=np.intp)] = lbl
        moved = sigma != np.arange(n)
        within = int(np.count_nonzero(moved & (label == label[sigma])))
        between = int(np.count_nonzero(moved)) - within
        counts.extend([within, between])
    return tuple(counts)


@dataclass(frozen=True)
class TwoStepResult:
    reached_identity: bool
    steps_used: int
    thresholds: object | None = None


def two_step_check(A, B, D0, thresholds=None) -> TwoStepResult:
    """Run at most two ascent steps and test for exact arrival at the identity.

    ``thresholds`` is carried through for reporting; it plays no role in
    the check itself.
    """
    opts = FaqOptions(max_iter=2, project_final=False)
    res = faq(A, B, D0, opts)
    reached = bool(np.array_equal(res.D_final, np.eye(res.D_final.shape[0])))
    return TwoStepResult(reached_identity=reached, steps_used=res.iterations, thresholds=thresholds)


def random_restart_probe(A, B, restarts: int, opts: FaqOptions | None, rng: np.random.Generator, method: str = "sinkhorn-of-uniform"):
    """Run the solver from random starts; results sorted by objective, best first.

    A clearly separated best objective is evidence the global maximum was
    found; near-ties among distinct permutations suggest symmetric local
    maxima. Returns a list of ``(MatchResult, objective)`` pairs.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    A = as_adjacency(A)
    n = A.shape[0]
    runs = []
    for _ in range(restarts):
        D0 = random_doubly_stochastic(n, method, rng)
        res = faq(A, B, D0, opts)
        runs.append((res, res.final_objective))
    runs.sort(key=lambda t: -t[1])
    return runs
