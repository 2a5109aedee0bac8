import itertools

import numpy as np
import pytest

from gmatch.core import perm_to_matrix, trace_objective, validate_doubly_stochastic
from gmatch.dsinit import barycenter, block_diag_barycenter, blocks_partition
from gmatch.randgraphs import hom_params, sample_corr_er
from gmatch.solver import (
    FaqOptions,
    error_breakdown,
    faq,
    faq_hard_seeded,
    faq_with_similarity,
    line_search_alpha,
    random_restart_probe,
    two_step_check,
)

from conftest import random_graph


def bruteforce_best_permutation(A, B, linear=None):
    """Exhaustive maximizer of trace(A P B P^T) (+ trace(linear P^T) term)."""
    n = A.shape[0]
    best_val, best_perms = -np.inf, []
    for perm in itertools.permutations(range(n)):
        P = perm_to_matrix(np.array(perm))
        val = float(np.trace(A @ P @ B @ P.T))
        if linear is not None:
            val += float((linear * P).sum())
        if val > best_val + 1e-12:
            best_val, best_perms = val, [perm]
        elif abs(val - best_val) <= 1e-12:
            best_perms.append(perm)
    return best_val, best_perms


class TestFaqBasics:
    def test_equal_graphs_identity_start_is_fixed_point(self, rng):
        for _ in range(50):
            n = int(rng.integers(5, 16))
            A = random_graph(n, 0.5, rng)
            res = faq(A, A, np.eye(n))
            assert res.iterations == 0
            assert np.array_equal(res.sigma, np.arange(n))
            assert res.accuracy == 1.0
            assert res.converged_at_permutation

    def test_objective_bounded_by_bruteforce(self, rng):
        for _ in range(15):
            n = int(rng.integers(4, 7))
            A = random_graph(n, 0.5, rng)
            B = random_graph(n, 0.5, rng)
            best_val, best_perms = bruteforce_best_permutation(A, B)
            res = faq(A, B, barycenter(n))
            assert res.final_objective <= best_val + 1e-9
            # started at an exhaustive argmax, the solver must stay there
            start = perm_to_matrix(np.array(best_perms[0]))
            res_at_max = faq(A, B, start)
            assert res_at_max.final_objective == pytest.approx(best_val, abs=1e-9)
            assert res_at_max.converged_at_permutation
            assert tuple(res_at_max.sigma) in best_perms

    def test_converged_permutation_at_max_is_in_argmax_set(self, rng):
        hits = 0
        for _ in range(40):
            n = 6
            A = random_graph(n, 0.5, rng)
            B = random_graph(n, 0.5, rng)
            best_val, best_perms = bruteforce_best_permutation(A, B)
            res = faq(A, B, barycenter(n))
            if res.converged_at_permutation and abs(res.final_objective - best_val) <= 1e-9:
                assert tuple(res.sigma) in best_perms
                hits += 1
        assert hits > 0

    def test_large_correlated_pair_recovers_identity(self, rng):
        params = hom_params(300, 0.5, 0.5)
        for _ in range(3):
            A, B = sample_corr_er(params, rng)
            res = faq(A, B, block_diag_barycenter(300, 83))
            assert res.accuracy == 1.0
            assert res.iterations <= 5

    def test_input_validation(self, rng):
        A = random_graph(5, 0.5, rng)
        with pytest.raises(ValueError):
            faq(A, random_graph(6, 0.5, rng), barycenter(5))
        with pytest.raises(ValueError):
            faq(A, A, np.ones((5, 5)))


class TestFaqInvariants:
    def _random_instance(self, rng):
        n = 50
        kind = rng.integers(0, 3)
        if kind == 0:
            params = hom_params(n, 0.5, 0.5)
        elif kind == 1:
            from gmatch.randgraphs import sbm_params

            params = sbm_params([10] * 5, 0.5, 0.1, 0.5)
        else:
            from gmatch.randgraphs import rdpg_params, sample_dirichlet_positions

            params = rdpg_params(sample_dirichlet_positions(n, rng), 0.5)
        return sample_corr_er(params, rng)

    def test_monotone_ascent_and_feasible_iterates(self, rng):
        opts = FaqOptions(record_iterates=True)
        for _ in range(20):
            A, B = self._random_instance(rng)
            s = int(rng.integers(1, 20))
            res = faq(A, B, block_diag_barycenter(50, s), opts)
            objs = [p.objective for p in res.trajectory]
            assert all(b >= a - 1e-9 for a, b in zip(objs, objs[1:]))
            for D in res.iterates:
                assert validate_doubly_stochastic(D, 1e-7)

    def test_trace_identity_per_iteration(self, rng):
        A, B = self._random_instance(rng)
        res = faq(A, B, block_diag_barycenter(50, 5))
        traj = res.trajectory
        for prev, nxt in zip(traj, traj[1:]):
            if np.isnan(prev.alpha):
                break
            expect = (1 - prev.alpha) * prev.trace + prev.alpha * prev.direction_trace
            assert nxt.trace == pytest.approx(expect, abs=1e-9)

    def test_trajectory_iterations_strictly_increasing(self, rng):
        A, B = self._random_instance(rng)
        res = faq(A, B, barycenter(50))
        iters = [p.iteration for p in res.trajectory]
        assert iters == list(range(len(iters)))

    def test_objective_matches_trace_objective(self, rng):
        A, B = self._random_instance(rng)
        res = faq(A, B, barycenter(50))
        assert res.final_objective == pytest.approx(trace_objective(A, B, res.D_final), rel=1e-12)


class TestLineSearch:
    def test_full_step_when_direction_dominates(self, rng):
        # a > 0 and f(1) > f(0) forces the endpoint alpha = 1
        n = 8
        A = random_graph(n, 0.5, rng)
        D = barycenter(n)
        # the LAP direction from the barycenter is an ascent direction
        from gmatch.lap import solve_lap_max

        G = 2.0 * A @ D @ A
        P = perm_to_matrix(solve_lap_max(G))
        alpha, new_obj = line_search_alpha(A, A, D, P)
        f0 = trace_objective(A, A, D)
        f1 = trace_objective(A, A, P)
        assert new_obj >= max(f0, f1) - 1e-9
        if f1 > f0:
            assert alpha > 0

    def test_reconstructs_quadratic_on_grid(self, rng):
        n = 7
        A = random_graph(n, 0.5, rng)
        B = random_graph(n, 0.5, rng)
        D = barycenter(n)
        P = perm_to_matrix(rng.permutation(n))
        alpha_star, obj_star = line_search_alpha(A, B, D, P)
        grid = np.linspace(0, 1, 11)
        vals = [trace_objective(A, B, D + a * (P - D)) for a in grid]
        # the reported maximum dominates the grid and matches f at alpha*
        direct = trace_objective(A, B, D + alpha_star * (P - D))
        assert obj_star == pytest.approx(direct, rel=1e-9, abs=1e-9)
        assert obj_star >= max(vals) - 1e-9
        # and the quadratic model itself reproduces the grid values
        f0, fh, f1 = vals[0], trace_objective(A, B, D + 0.5 * (P - D)), vals[-1]
        c = f0
        a = 2 * f1 + 2 * f0 - 4 * fh
        b = f1 - c - a
        for g, v in zip(grid, vals):
            assert a * g * g + b * g + c == pytest.approx(v, rel=1e-9, abs=1e-9)

    def test_descent_direction_stays_put(self, rng):
        # moving from an exhaustive argmax toward any other vertex cannot help
        n = 5
        A = random_graph(n, 0.5, rng)
        B = random_graph(n, 0.5, rng)
        _, best_perms = bruteforce_best_permutation(A, B)
        D = perm_to_matrix(np.array(best_perms[0]))
        other = perm_to_matrix(rng.permutation(n))
        while np.array_equal(other, D):
            other = perm_to_matrix(rng.permutation(n))
        alpha, obj = line_search_alpha(A, B, D, other)
        assert obj >= trace_objective(A, B, D) - 1e-12
        assert obj <= trace_objective(A, B, D) + 1e-9

    def test_flat_segment_ties_to_full_step(self):
        # empty graphs: f is identically zero along the segment; tie -> alpha = 1
        n = 4
        A = np.zeros((n, n))
        D = barycenter(n)
        P = np.eye(n)
        alpha, obj = line_search_alpha(A, A, D, P)
        assert alpha == 1.0
        assert obj == 0.0


class TestHardSeeded:
    def test_single_free_vertex(self, rng):
        n = 6
        A = random_graph(n, 0.5, rng)
        B = random_graph(n, 0.5, rng)
        res = faq_hard_seeded(A, B, n - 1, np.array([[1.0]]))
        assert np.array_equal(res.sigma, np.arange(n))
        assert res.accuracy == 1.0

    def test_matches_bruteforce_on_seeded_objective(self, rng):
        # maximize 2 trace(A12 D B12^T) + trace(A22 D B22 D^T) over the free block
        for _ in range(10):
            n, s = 8, 2
            A = random_graph(n, 0.5, rng)
            B = random_graph(n, 0.5, rng)
            A12, B12 = A[:s, s:], B[:s, s:]
            A22, B22 = A[s:, s:], B[s:, s:]
            m = n - s
            best = -np.inf
            for perm in itertools.permutations(range(m)):
                P = perm_to_matrix(np.array(perm))
                val = 2 * float(np.trace(A12 @ P @ B12.T)) + float(np.trace(A22 @ P @ B22 @ P.T))
                best = max(best, val)
            res = faq_hard_seeded(A, B, s, barycenter(m))
            assert res.final_objective <= best + 1e-9
            if res.converged_at_permutation:
                sub = res.sigma[s:] - s
                P = perm_to_matrix(sub)
                val = 2 * float(np.trace(A12 @ P @ B12.T)) + float(np.trace(A22 @ P @ B22 @ P.T))
                assert res.final_objective == pytest.approx(val, abs=1e-9)

    def test_zero_seeds_equals_plain_faq(self, rng):
        n = 10
        A = random_graph(n, 0.5, rng)
        B = random_graph(n, 0.5, rng)
        res_a = faq_hard_seeded(A, B, 0, barycenter(n))
        res_b = faq(A, B, barycenter(n))
        assert np.array_equal(res_a.sigma, res_b.sigma)
        assert res_a.final_objective == res_b.final_objective

    def test_seed_block_fixed_to_identity(self, rng):
        n, s = 12, 4
        A = random_graph(n, 0.5, rng)
        B = random_graph(n, 0.5, rng)
        res = faq_hard_seeded(A, B, s, barycenter(n - s))
        assert np.array_equal(res.sigma[:s], np.arange(s))
        assert validate_doubly_stochastic(res.D_final, 1e-8)

    def test_rejects_bad_seed_count(self, rng):
        A = random_graph(5, 0.5, rng)
        with pytest.raises(ValueError):
            faq_hard_seeded(A, A, 5, np.array([[1.0]]))


class TestWithSimilarity:
    def test_huge_diagonal_bonus_forces_identity(self, rng):
        n = 10
        A = random_graph(n, 0.5, rng)
        B = random_graph(n, 0.5, rng)
        S = 1e6 * np.eye(n)
        res = faq_with_similarity(A, B, S, barycenter(n))
        assert np.array_equal(res.sigma, np.arange(n))

    def test_zero_similarity_equals_plain_faq(self, rng):
        n = 9
        A = random_graph(n, 0.5, rng)
        B = random_graph(n, 0.5, rng)
        res_a = faq_with_similarity(A, B, np.zeros((n, n)), barycenter(n))
        res_b = faq(A, B, barycenter(n))
        assert np.array_equal(res_a.sigma, res_b.sigma)
        assert res_a.final_objective == res_b.final_objective

    def test_objective_bounded_by_bruteforce(self, rng):
        for _ in range(10):
            n = 6
            A = random_graph(n, 0.5, rng)
            B = random_graph(n, 0.5, rng)
            S = rng.random((n, n))
            # brute force of trace(A P B P^T) + trace(S P): trace(S P) = <S^T, P>
            best = -np.inf
            for perm in itertools.permutations(range(n)):
                P = perm_to_matrix(np.array(perm))
                best = max(best, float(np.trace(A @ P @ B @ P.T) + np.trace(S @ P)))
            res = faq_with_similarity(A, B, S, barycenter(n))
            assert res.final_objective <= best + 1e-9


class TestErrorBreakdown:
    def test_identity_has_no_errors(self):
        parts = blocks_partition([5, 5])
        assert error_breakdown(np.arange(10), parts, parts) == (0, 0, 0, 0)

    def test_within_part_swap(self):
        parts = blocks_partition([5, 5])
        sigma = np.arange(10)
        sigma[[0, 1]] = [1, 0]
        assert error_breakdown(sigma, parts, parts) == (2, 0, 2, 0)

    def test_cross_part_errors(self):
        parts_a = blocks_partition([2, 2])
        parts_b = [[0, 2], [1, 3]]
        sigma = np.array([1, 0, 3, 2])  # swaps inside parts_a, across parts_b
        assert error_breakdown(sigma, parts_a, parts_b) == (4, 0, 0, 4)

    def test_random_alignment_expectations(self, rng):
        # n=300, K=5: a uniform alignment has ~299 errors, ~59 within block
        n, K = 300, 5
        parts = blocks_partition([n // K] * K)
        within = np.empty(300)
        between = np.empty(300)
        for k in range(300):
            w, b, _, _ = error_breakdown(rng.permutation(n), parts, parts)
            within[k] = w
            between[k] = b
        assert abs(within.mean() - 59) < 3
        assert abs(between.mean() - 240) < 4
        assert abs((within + between).mean() - 299) < 2


class TestTwoStep:
    def test_identity_start(self, rng):
        params = hom_params(60, 0.5, 0.5)
        A, B = sample_corr_er(params, rng)
        res = two_step_check(A, B, np.eye(60))
        assert res.reached_identity
        assert res.steps_used == 0

    def test_barycenter_start_typically_fails(self, rng):
        params = hom_params(100, 0.5, 0.5)
        A, B = sample_corr_er(params, rng)
        res = two_step_check(A, B, barycenter(100))
        assert not res.reached_identity

    def test_high_trace_mixture_succeeds(self, rng):
        n = 200
        params = hom_params(n, 0.5, 0.5)
        w = (150 - 1) / (n - 1)
        D0 = w * np.eye(n) + (1 - w) * barycenter(n)
        hits = 0
        for _ in range(5):
            A, B = sample_corr_er(params, rng)
            hits += two_step_check(A, B, D0).reached_identity
        assert hits >= 4

    def test_thresholds_passthrough(self, rng):
        params = hom_params(20, 0.5, 0.5)
        A, B = sample_corr_er(params, rng)
        marker = object()
        assert two_step_check(A, B, np.eye(20), thresholds=marker).thresholds is marker


class TestRestartProbe:
    def test_best_restart_attains_global_on_small_instances(self, rng):
        n = 6
        A = random_graph(n, 0.6, rng)
        best_val, _ = bruteforce_best_permutation(A, A)
        runs = random_restart_probe(A, A, 20, None, rng)
        objectives = [obj for _, obj in runs]
        assert objectives == sorted(objectives, reverse=True)
        assert objectives[0] == pytest.approx(best_val, abs=1e-9)
        assert all(o <= best_val + 1e-9 for o in objectives)

    def test_identity_recovery_has_top_objective(self, rng):
        params = hom_params(100, 0.5, 0.8)
        A, B = sample_corr_er(params, rng)
        runs = random_restart_probe(A, B, 10, None, rng)
        recovered = [obj for res, obj in runs if res.accuracy == 1.0]
        others = [obj for res, obj in runs if res.accuracy < 1.0]
        if recovered and others:
            assert min(recovered) > max(others)

    def test_requires_at_least_one_restart(self, rng):
        A = random_graph(5, 0.5, rng)
        with pytest.raises(ValueError):
            random_restart_probe(A, A, 0, None, rng)


class TestResultSerialization:
    def test_json_schema(self, rng):
        A = random_graph(8, 0.5, rng)
        B = random_graph(8, 0.5, rng)
        res = faq(A, B, barycenter(8))
        doc = res.to_json_dict()
        assert set(doc) == {
            "sigma",
            "accuracy",
            "objective",
            "iterations",
            "converged_at_permutation",
            "trajectory",
        }
        assert sorted(doc["sigma"]) == list(range(8))
        for row in doc["trajectory"]:
            assert set(row) == {"iter", "trace", "accuracy", "objective", "alpha"}
        assert doc["trajectory"][-1]["alpha"] is None

    def test_options_validation(self):
        with pytest.raises(ValueError):
            FaqOptions(max_iter=0)
        with pytest.raises(ValueError):
            FaqOptions(obj_tol=0.0)
