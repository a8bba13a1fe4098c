"""Assignment solving against brute force, metrics, and swap diagnostics."""

import itertools
import math

import numpy as np
import pytest

from rigalign.generate import FeatureMatrix
from rigalign.matching import (
    align_features,
    align_linear,
    alignment_error,
    count_swap_events,
    feature_error,
    invert_permutation,
    lap_solve,
    validate_permutation,
)


def brute_force_lap(cost):
    """Exhaustive minimum over all permutations; returns (best_perms, objective)."""
    n = cost.shape[0]
    best, best_perms = math.inf, []
    for perm in itertools.permutations(range(n)):
        value = sum(cost[i, perm[i]] for i in range(n))
        if value < best - 1e-12:
            best, best_perms = value, [perm]
        elif abs(value - best) <= 1e-12:
            best_perms.append(perm)
    return best_perms, best


class TestLapSolve:
    def test_identity_favoring_matrix(self):
        n = 6
        cost = 1.0 - np.eye(n)
        perm, objective = lap_solve(cost)
        assert np.array_equal(perm, np.arange(n))
        assert objective == 0.0

    def test_three_by_three_known_value(self):
        cost = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
        perms, want = brute_force_lap(cost)
        assert want == 5.0
        perm, objective = lap_solve(cost)
        assert objective == 5.0
        assert tuple(perm) in perms

    @pytest.mark.parametrize("n", [7, 8])
    def test_random_matrices_match_brute_force(self, n):
        rng = np.random.default_rng(60 + n)
        for _ in range(100):
            cost = rng.uniform(0, 10, size=(n, n))
            _, want = brute_force_lap(cost)
            _, got = lap_solve(cost)
            assert got == pytest.approx(want, rel=1e-12)

    def test_row_column_shift_invariance(self):
        rng = np.random.default_rng(61)
        cost = rng.uniform(0, 5, size=(6, 6))
        perm0, obj0 = lap_solve(cost)
        shift = 3.7
        for shifted in (cost + np.eye(6)[2][:, None] * shift,  # row 2
                        cost + np.eye(6)[4][None, :] * shift):  # column 4
            perm1, obj1 = lap_solve(shifted)
            assert obj1 == pytest.approx(obj0 + shift, rel=1e-12)
            # optimum is generically unique for continuous costs
            perms, _ = brute_force_lap(cost)
            if len(perms) == 1:
                assert np.array_equal(perm0, perm1)

    def test_unique_optimum_reproduced_after_shift(self):
        rng = np.random.default_rng(62)
        found_unique = 0
        for _ in range(20):
            cost = rng.uniform(0, 5, size=(5, 5))
            perms, _ = brute_force_lap(cost)
            if len(perms) != 1:
                continue
            found_unique += 1
            perm0, _ = lap_solve(cost)
            perm1, _ = lap_solve(cost + 2.5)
            assert tuple(perm0) == perms[0]
            assert np.array_equal(perm0, perm1)
        assert found_unique > 10

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            lap_solve(np.zeros((3, 4)))
        with pytest.raises(ValueError):
            lap_solve(np.array([[1.0, np.inf], [0.0, 1.0]]))

    def test_deterministic(self):
        rng = np.random.default_rng(63)
        cost = rng.integers(0, 3, size=(40, 40)).astype(float)  # many ties
        first = lap_solve(cost)
        for _ in range(3):
            perm, objective = lap_solve(cost.copy())
            assert np.array_equal(perm, first[0])
            assert objective == first[1]


class TestAlignFeatures:
    def test_recovers_row_permutation(self):
        rng = np.random.default_rng(64)
        dense = np.unique((rng.random((40, 24)) < 0.3).astype(np.uint8), axis=0)
        z = FeatureMatrix.from_dense(dense)
        rho = rng.permutation(z.n)
        z_prime = z.permute_rows(rho)
        result = align_features(z, z_prime, truth=rho)
        assert np.array_equal(result.perm, rho)
        assert result.objective == 0.0
        assert result.error == 0.0

    def test_tied_rows_cost_zero(self):
        dense = np.array([[1, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=np.uint8)
        z = FeatureMatrix.from_dense(dense)
        rho = np.array([2, 3, 0, 1])
        z_prime = z.permute_rows(rho)
        result = align_features(z, z_prime, truth=rho)
        assert result.objective == 0.0
        # matched rows are equal even when the tie resolves the other way
        matched = z.dense()[result.perm]
        assert np.array_equal(matched, z_prime.dense())
        # rows outside the identical pair are matched correctly
        for i in range(4):
            if rho[i] not in (0, 1):
                assert result.perm[i] == rho[i]

    def test_objective_matches_brute_force(self):
        rng = np.random.default_rng(65)
        for _ in range(20):
            a = FeatureMatrix.from_dense((rng.random((7, 12)) < 0.4).astype(np.uint8))
            b = FeatureMatrix.from_dense((rng.random((7, 12)) < 0.4).astype(np.uint8))
            ad, bd = a.dense(np.int64), b.dense(np.int64)
            cost = ((ad[:, None, :] - bd[None, :, :]) ** 2).sum(-1)
            _, want = brute_force_lap(cost.astype(float))
            result = align_features(a, b)
            assert result.objective == want

    def test_distance_inner_product_identity(self):
        rng = np.random.default_rng(66)
        a = FeatureMatrix.from_dense((rng.random((15, 20)) < 0.3).astype(np.uint8))
        b = FeatureMatrix.from_dense((rng.random((15, 20)) < 0.3).astype(np.uint8))
        result = align_features(a, b)
        ad, bd = a.dense(np.int64), b.dense(np.int64)
        perm = result.perm
        lhs = sum(int(((ad[perm[i]] - bd[i]) ** 2).sum()) for i in range(15))
        rhs = (
            int((ad**2).sum())
            + int((bd**2).sum())
            - 2 * sum(int(ad[perm[i]] @ bd[i]) for i in range(15))
        )
        assert lhs == rhs
        assert result.objective == lhs

    def test_objective_recomputation_invariant(self):
        rng = np.random.default_rng(67)
        a = FeatureMatrix.from_dense((rng.random((10, 16)) < 0.4).astype(np.uint8))
        b = FeatureMatrix.from_dense((rng.random((10, 16)) < 0.4).astype(np.uint8))
        result = align_features(a, b)
        ad, bd = a.dense(np.float64), b.dense(np.float64)
        recomputed = sum(
            float(((ad[result.perm[i]] - bd[i]) ** 2).sum()) for i in range(10)
        )
        assert abs(result.objective - recomputed) <= 1e-9 * max(1.0, recomputed)

    def test_shape_mismatch(self):
        a = FeatureMatrix.from_dense(np.zeros((3, 4), dtype=np.uint8))
        b = FeatureMatrix.from_dense(np.zeros((3, 5), dtype=np.uint8))
        with pytest.raises(ValueError):
            align_features(a, b)


class TestAlignLinear:
    def test_noiseless_distinct_rows_exact(self):
        rng = np.random.default_rng(68)
        y = np.unique(rng.normal(size=(30, 10)), axis=0)
        rho = rng.permutation(y.shape[0])
        result = align_linear(y, y[rho], truth=rho)
        assert result.error == 0.0
        assert result.objective == pytest.approx(0.0, abs=1e-9)

    def test_objective_matches_brute_force(self):
        rng = np.random.default_rng(69)
        y = rng.normal(size=(6, 5))
        y2 = rng.normal(size=(6, 5))
        cost = ((y[:, None, :] - y2[None, :, :]) ** 2).sum(-1)
        _, want = brute_force_lap(cost)
        result = align_linear(y, y2)
        assert result.objective == pytest.approx(want, rel=1e-9)

    def test_sparse_dense_agree(self):
        import scipy.sparse as sp

        rng = np.random.default_rng(70)
        a = (rng.random((12, 30)) < 0.2).astype(float)
        b = (rng.random((12, 30)) < 0.2).astype(float)
        dense = align_linear(a, b)
        sparse = align_linear(sp.csr_matrix(a), sp.csr_matrix(b))
        assert np.array_equal(dense.perm, sparse.perm)
        assert dense.objective == pytest.approx(sparse.objective, rel=1e-12)

    def test_rejects_nonfinite(self):
        y = np.zeros((3, 3))
        bad = y.copy()
        bad[0, 0] = np.nan
        with pytest.raises(ValueError):
            align_linear(y, bad)


class TestErrorMetrics:
    def test_alignment_error_cases(self):
        identity = np.arange(4)
        assert alignment_error(identity, identity) == 0.0
        assert alignment_error(identity[::-1], identity) == 1.0
        swapped = np.array([1, 0, 2, 3])
        assert alignment_error(swapped, identity) == 0.5

    def test_alignment_error_validation(self):
        with pytest.raises(ValueError):
            alignment_error(np.array([0, 0, 1]), np.arange(3))
        with pytest.raises(ValueError):
            alignment_error(np.arange(3), np.arange(4))

    def test_feature_error_cases(self):
        x = FeatureMatrix.from_dense(np.ones((2, 2), dtype=np.uint8))
        z_same = FeatureMatrix.from_dense(np.ones((2, 2), dtype=np.uint8))
        z_flip = FeatureMatrix.from_dense(np.zeros((2, 2), dtype=np.uint8))
        same = feature_error(z_same, x)
        assert same.relative_distance == 0.0
        assert same.exact is True
        err = feature_error(z_flip, x)
        assert err.relative_distance == 1.0
        assert err.exact is False

    def test_feature_error_single_bit(self):
        rng = np.random.default_rng(71)
        dense = np.zeros((10, 20), dtype=np.uint8)
        ones = rng.choice(200, size=100, replace=False)
        dense[np.unravel_index(ones, dense.shape)] = 1
        x = FeatureMatrix.from_dense(dense)
        flipped = dense.copy()
        one_positions = np.argwhere(flipped == 1)
        i, k = one_positions[0]
        flipped[i, k] = 0
        z = FeatureMatrix.from_dense(flipped)
        err = feature_error(z, x)
        assert err.relative_distance == pytest.approx(math.sqrt(1 / 100))
        assert err.exact is False

    def test_permutation_helpers(self):
        perm = np.array([2, 0, 1])
        assert np.array_equal(invert_permutation(perm), [1, 2, 0])
        with pytest.raises(ValueError):
            validate_permutation(np.array([0, 2, 2]))


class TestSwapEvents:
    def test_distinct_identical_matrices_have_none(self):
        rng = np.random.default_rng(72)
        dense = np.unique((rng.random((20, 16)) < 0.4).astype(np.uint8), axis=0)
        count, examined = count_swap_events(dense.astype(float), dense.astype(float))
        assert count == 0
        assert examined == dense.shape[0] * (dense.shape[0] - 1) // 2

    def test_duplicate_rows_count(self):
        dense = np.array([[1, 0], [1, 0], [0, 1]], dtype=float)
        count, _ = count_swap_events(dense, dense)
        assert count == 1  # exactly the identical pair attains equality

    def test_accepts_feature_matrices(self):
        rng = np.random.default_rng(73)
        fm = FeatureMatrix.from_dense((rng.random((10, 8)) < 0.5).astype(np.uint8))
        count_fm, _ = count_swap_events(fm, fm)
        count_dense, _ = count_swap_events(fm.dense(float), fm.dense(float))
        assert count_fm == count_dense

    def test_budget_path_consistent_with_exhaustive(self):
        rng = np.random.default_rng(74)
        a = rng.normal(size=(30, 6))
        b = a + rng.normal(scale=2.0, size=(30, 6))
        full, total = count_swap_events(a, b)
        capped, examined = count_swap_events(a, b, pair_budget=total, seed=5)
        assert (capped, examined) == (full, total)
        sampled, examined = count_swap_events(a, b, pair_budget=100, seed=5)
        assert examined == 100
        assert 0 <= sampled <= 100

    def test_budget_sampling_unbiased(self):
        rng = np.random.default_rng(75)
        a = rng.normal(size=(40, 4))
        b = rng.normal(size=(40, 4))
        full, total = count_swap_events(a, b)
        rate = full / total
        estimates = [
            count_swap_events(a, b, pair_budget=200, seed=seed)[0] / 200
            for seed in range(40)
        ]
        se = np.std(estimates, ddof=1) / math.sqrt(len(estimates))
        assert abs(np.mean(estimates) - rate) <= 4 * se

    def test_swap_event_implies_non_unique_optimum(self):
        # whenever an index-aligned swap event exists, some assignment no
        # worse than the identity differs from it (checked by brute force)
        rng = np.random.default_rng(76)
        seen_event = 0
        for _ in range(50):
            a = (rng.random((6, 6)) < 0.5).astype(float)
            b = (rng.random((6, 6)) < 0.5).astype(float)
            count, _ = count_swap_events(a, b)
            cost = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
            identity_cost = float(np.trace(cost))
            best_other = min(
                sum(cost[i, p[i]] for i in range(6))
                for p in itertools.permutations(range(6))
                if p != tuple(range(6))
            )
            if count > 0:
                seen_event += 1
                assert best_other <= identity_cost + 1e-9
        assert seen_event > 5

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            count_swap_events(np.zeros((3, 2)), np.zeros((4, 2)))
