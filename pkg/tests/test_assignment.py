import numpy as np
import pytest

from paneval import ValidationError, brute_force_assignment, solve_assignment


class TestSolveAssignment:
    def test_single_entry(self):
        result = solve_assignment([[0.3]])
        assert result.pairs == ((0, 0),)
        assert result.total_cost == 0.3

    def test_symmetry_forced(self):
        result = solve_assignment([[0, 1], [1, 0]])
        assert set(result.pairs) == {(0, 0), (1, 1)}
        assert result.total_cost == 0.0

    def test_rectangular_matches_smaller_side(self):
        result = solve_assignment([[0.2, 0.1, 0.9]])
        assert len(result.pairs) == 1
        assert result.total_cost == 0.1

    def test_empty_matrix(self):
        with pytest.raises(ValidationError) as err:
            solve_assignment(np.zeros((0, 3)))
        assert err.value.code == "empty-matrix"

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            solve_assignment([[np.nan]])


class TestBruteForce:
    def test_two_by_two(self):
        # The two permutations cost 1+0=1 and 2+3=5.
        result = brute_force_assignment([[1, 2], [3, 0]])
        assert result.total_cost == 1.0
        assert set(result.pairs) == {(0, 0), (1, 1)}

    def test_row_argmin(self):
        result = brute_force_assignment([[0.2, 0.1, 0.9]])
        assert result.pairs == ((0, 1),)
        assert result.total_cost == 0.1

    def test_tall_matrix(self):
        result = brute_force_assignment([[0.9], [0.1], [0.5]])
        assert result.pairs == ((1, 0),)
        assert result.total_cost == 0.1

    def test_size_limit(self):
        with pytest.raises(ValidationError) as err:
            brute_force_assignment(np.zeros((9, 9)))
        assert err.value.code == "size-limit"


class TestEquivalenceAndProperties:
    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            c = rng.random((4, 6))
            fast = solve_assignment(c)
            slow = brute_force_assignment(c)
            assert abs(fast.total_cost - slow.total_cost) <= 1e-12
            for result in (fast, slow):
                assert len(result.pairs) == 4
                assert len({i for i, _ in result.pairs}) == 4
                assert len({j for _, j in result.pairs}) == 4

    def test_permutation_invariance(self):
        rng = np.random.default_rng(77)
        for _ in range(25):
            c = rng.random((5, 7))
            base = solve_assignment(c).total_cost
            rows = rng.permutation(5)
            cols = rng.permutation(7)
            shuffled = solve_assignment(c[np.ix_(rows, cols)]).total_cost
            assert abs(base - shuffled) <= 1e-12

    def test_constant_shift(self):
        rng = np.random.default_rng(78)
        for _ in range(25):
            c = rng.random((3, 5))
            k = float(rng.uniform(0.1, 2.0))
            base = solve_assignment(c).total_cost
            shifted = solve_assignment(c + k).total_cost
            assert abs(shifted - (base + 3 * k)) <= 1e-9
