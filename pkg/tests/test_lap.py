import itertools

import numpy as np
import pytest

from gmatch.lap import lap_bruteforce, lap_value, project_to_permutation, solve_lap_max


class TestSolveLapMax:
    def test_identity_weights(self):
        sigma = solve_lap_max(np.eye(6))
        assert np.array_equal(sigma, np.arange(6))
        assert lap_value(np.eye(6), sigma) == 6.0

    def test_dominant_permutation_pattern(self, rng):
        n = 8
        target = rng.permutation(n)
        W = rng.random((n, n))
        W[np.arange(n), target] += 10.0
        assert np.array_equal(solve_lap_max(W), target)

    def test_matches_bruteforce_on_random_instances(self, rng):
        for _ in range(100):
            W = rng.standard_normal((7, 7))
            fast = solve_lap_max(W)
            slow = lap_bruteforce(W)
            assert lap_value(W, fast) == pytest.approx(lap_value(W, slow), abs=1e-12)

    def test_rejects_nonfinite(self):
        W = np.eye(3)
        W[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            solve_lap_max(W)
        with pytest.raises(ValueError, match="square"):
            solve_lap_max(np.zeros((2, 3)))

    def test_optimality_certificate_mixed_distributions(self, rng):
        # uniform, gaussian, and degenerate tied weights at several sizes
        count = 0
        for n in range(3, 9):
            for kind in ("uniform", "gaussian", "tied"):
                for _ in range(30):
                    if kind == "uniform":
                        W = rng.random((n, n))
                    elif kind == "gaussian":
                        W = rng.standard_normal((n, n))
                    else:
                        W = rng.integers(0, 3, (n, n)).astype(float)
                    assert lap_value(W, solve_lap_max(W)) == pytest.approx(
                        lap_value(W, lap_bruteforce(W)), abs=1e-12
                    )
                    count += 1
        assert count == 540

    def test_row_column_shift_invariance(self, rng):
        n = 6
        W = rng.standard_normal((n, n))
        base_sigma = solve_lap_max(W)
        base_value = lap_value(W, base_sigma)
        shifted = W.copy()
        shifted[2, :] += 5.0
        shifted[:, 4] -= 3.0
        sigma = solve_lap_max(shifted)
        # value tracks the constants and the result remains optimal
        assert lap_value(shifted, sigma) == pytest.approx(base_value + 5.0 - 3.0, abs=1e-9)
        assert lap_value(shifted, sigma) == pytest.approx(
            lap_value(shifted, lap_bruteforce(shifted)), abs=1e-12
        )

    def test_beats_random_permutations(self, rng):
        n = 20
        W = rng.standard_normal((n, n))
        best = lap_value(W, solve_lap_max(W))
        for _ in range(1000):
            assert best >= lap_value(W, rng.permutation(n)) - 1e-12


class TestBruteforce:
    def test_agrees_with_solver_at_four(self, rng):
        for _ in range(100):
            W = rng.standard_normal((4, 4))
            assert lap_value(W, lap_bruteforce(W)) == pytest.approx(
                lap_value(W, solve_lap_max(W)), abs=1e-12
            )

    def test_negated_identity_prefers_derangement(self):
        sigma = lap_bruteforce(-np.eye(3))
        assert not np.any(sigma == np.arange(3))
        assert lap_value(-np.eye(3), sigma) == 0.0

    def test_constant_weights(self):
        W = np.full((4, 4), 2.5)
        sigma = lap_bruteforce(W)
        assert lap_value(W, sigma) == pytest.approx(4 * 2.5)

    def test_size_limit(self):
        with pytest.raises(ValueError, match="brute force"):
            lap_bruteforce(np.zeros((10, 10)))

    def test_tie_break_is_lexicographic(self):
        sigma = lap_bruteforce(np.zeros((4, 4)))
        assert np.array_equal(sigma, np.arange(4))


class TestProjection:
    def test_permutation_projects_to_itself(self, rng):
        sigma = rng.permutation(7)
        P = np.zeros((7, 7))
        P[np.arange(7), sigma] = 1.0
        assert np.array_equal(project_to_permutation(P), sigma)

    def test_near_identity_mixture(self):
        n = 5
        shift = np.roll(np.eye(n), 1, axis=1)
        D = 0.9 * np.eye(n) + 0.1 * shift
        assert np.array_equal(project_to_permutation(D), np.arange(n))
        # brute force over all 120 permutations confirms the identity is optimal
        best = max(
            itertools.permutations(range(n)),
            key=lambda p: lap_value(D, np.array(p)),
        )
        assert lap_value(D, np.array(best)) == pytest.approx(lap_value(D, np.arange(n)))

    def test_barycenter_ties_break_to_identity(self):
        D = np.full((6, 6), 1 / 6)
        sigma = project_to_permutation(D)
        assert np.array_equal(sigma, np.arange(6))
        assert lap_value(D, sigma) == pytest.approx(1.0)
