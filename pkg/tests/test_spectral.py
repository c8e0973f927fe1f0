import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from linkevo.spectral import (SvdFactors, explained_energy, fit_standardization, project, rank_correlation,
                              rank_features, svd, write_factors, write_ranking)
from oracles import gram_singular_values


def check_factors(A, f, tol=1e-8):
    r = min(A.shape)
    assert f.U.shape == (A.shape[0], r) and f.S.shape == (r,) and f.V.shape == (A.shape[1], r)
    scale = max(1.0, np.linalg.norm(A))
    assert np.linalg.norm(A - f.reconstruct()) <= tol * scale
    assert np.abs(f.U.T @ f.U - np.eye(r)).max() <= tol
    assert np.abs(f.V.T @ f.V - np.eye(r)).max() <= tol
    assert np.all(np.diff(f.S) <= 0) and np.all(f.S >= 0)
    idx = np.argmax(np.abs(f.V), axis=0)
    assert np.all(f.V[idx, np.arange(r)] >= 0)


def random_orthogonal(rng, m):
    Q, R = np.linalg.qr(rng.standard_normal((m, m)))
    return Q * np.sign(np.diag(R))


matrices = st.tuples(st.integers(1, 40), st.integers(1, 12)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.floats(-1e3, 1e3, allow_nan=False, width=64)))


class TestSvd:
    def test_identity(self):
        np.testing.assert_allclose(svd(np.eye(2)).S, [1.0, 1.0])

    def test_diagonal(self):
        np.testing.assert_allclose(svd(np.diag([3.0, 1.0])).S, [3.0, 1.0])
        np.testing.assert_allclose(svd(np.diag([1.0, 3.0])).S, [3.0, 1.0])

    def test_random_300_by_29_against_gram_oracle(self, rng):
        A = rng.standard_normal((300, 29))
        f = svd(A)
        check_factors(A, f)
        oracle = gram_singular_values(A)
        np.testing.assert_allclose(f.S, oracle, rtol=1e-6)

    @pytest.mark.parametrize("shape", [(5, 29), (29, 29), (1, 7), (7, 1), (1000, 29)])
    def test_shapes(self, rng, shape):
        A = rng.standard_normal(shape)
        check_factors(A, svd(A))

    def test_rank_deficient(self, rng):
        A = rng.standard_normal((60, 4)) @ rng.standard_normal((4, 10))
        f = svd(A)
        check_factors(A, f)
        assert np.all(f.S[4:] <= 1e-10 * f.S[0])

    def test_zero_matrix(self):
        f = svd(np.zeros((6, 3)))
        check_factors(np.zeros((6, 3)), f)
        assert np.all(f.S == 0)

    def test_repeated_columns_and_ill_conditioning(self, rng):
        A = rng.standard_normal((50, 8))
        A[:, 3] = A[:, 1]
        A[:, 5] *= 1e-9
        check_factors(A, svd(A))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            svd(np.array([[1.0, np.nan]]))
        with pytest.raises(ValueError):
            svd(np.empty((0, 3)))

    def test_deterministic(self, rng):
        A = rng.standard_normal((80, 29))
        a, b = svd(A), svd(A.copy())
        assert np.array_equal(a.U, b.U) and np.array_equal(a.S, b.S) and np.array_equal(a.V, b.V)

    @settings(max_examples=60, deadline=None)
    @given(matrices)
    def test_factorization_property(self, A):
        check_factors(A, svd(A))

    @settings(max_examples=40, deadline=None)
    @given(matrices, st.floats(-1e3, 1e3).filter(lambda c: abs(c) > 1e-3))
    def test_scale_equivariance(self, A, c):
        s, sc = svd(A).S, svd(c * A).S
        assert np.all(np.abs(sc - abs(c) * s) <= 1e-10 * max(1.0, abs(c) * s.max(initial=0.0)))


class TestProject:
    def test_full_rank_square_is_an_isometry(self, rng):
        A = rng.standard_normal((12, 12))
        P = project(A, svd(A), 12)
        for i in range(12):
            for j in range(i + 1, 12):
                assert abs(np.linalg.norm(P[i] - P[j]) - np.linalg.norm(A[i] - A[j])) <= 1e-8

    def test_k1_is_inner_product_with_top_vector(self, rng):
        A = rng.standard_normal((30, 5))
        f = svd(A)
        np.testing.assert_allclose(project(A, f, 1)[:, 0], A @ f.V[:, 0], atol=1e-12)

    def test_explained_energy_matches_covariance_oracle(self, rng):
        A = rng.standard_normal((200, 9)) * np.arange(1, 10)
        Z = A - A.mean(axis=0)
        f = svd(Z)
        ev = np.sort(np.linalg.eigvalsh(np.cov(Z, rowvar=False)))[::-1]
        for k in range(1, 10):
            assert abs(explained_energy(f, k) - ev[:k].sum() / ev.sum()) <= 1e-6

    def test_eckart_young_residual(self, rng):
        A = rng.standard_normal((70, 11))
        f = svd(A)
        for k in range(1, 12):
            Vk = f.V[:, :k]
            resid = np.linalg.norm(A - project(A, f, k) @ Vk.T) ** 2
            assert resid == pytest.approx(np.sum(f.S[k:] ** 2), rel=1e-8, abs=1e-8)

    def test_k_out_of_range(self, rng):
        f = svd(rng.standard_normal((10, 4)))
        for k in (0, 5):
            with pytest.raises(ValueError):
                project(np.zeros((1, 4)), f, k)

    def test_held_out_rows_use_training_standardization(self, rng):
        train = rng.standard_normal((40, 3)) * [1, 10, 100] + [5, -3, 0]
        st_ = fit_standardization(train)
        Z = st_.transform(train)
        np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(Z.std(axis=0), 1, atol=1e-12)
        test = rng.standard_normal((5, 3))
        np.testing.assert_allclose(st_.transform(test), (test - train.mean(0)) / train.std(0))

    def test_constant_column_floor(self):
        st_ = fit_standardization(np.ones((4, 2)))
        assert np.all(np.isfinite(st_.transform(np.ones((1, 2)))))


class TestRanking:
    def test_identity_returns_weights(self):
        f = SvdFactors(np.eye(3), np.ones(3), np.eye(3))
        r = rank_features(f, [0.7, 0.2, 0.1], 3)
        np.testing.assert_array_equal(r.scores, [0.7, 0.2, 0.1])
        assert list(r.order) == [0, 1, 2]

    def test_zero_weights_tie_by_index(self):
        f = SvdFactors(np.eye(4), np.ones(4), np.eye(4)[:, ::-1])
        r = rank_features(f, np.zeros(2), 2, ["a", "b", "c", "d"])
        assert np.all(r.scores == 0) and list(r.order) == [0, 1, 2, 3]
        assert r.top(2) == ["a", "b"] and r.rank_of("d") == 4

    def test_random_orthogonal_matches_dense_product(self, rng):
        for _ in range(10):
            m, k = 29, int(rng.integers(1, 30))
            V = random_orthogonal(rng, m)
            W = rng.standard_normal(k)
            r = rank_features(SvdFactors(np.eye(m), np.ones(m), V), W, k)
            dense = np.array([sum(V[i, j] ** 2 * W[j] for j in range(k)) for i in range(m)])
            assert np.abs(r.scores - dense).max() <= 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31), st.integers(1, 12))
    def test_nonnegative_weights_give_nonnegative_scores(self, seed, k):
        rng = np.random.default_rng(seed)
        V = random_orthogonal(rng, 12)
        r = rank_features(SvdFactors(np.eye(12), np.ones(12), V), rng.random(k), k)
        assert np.all(r.scores >= 0)
        assert sorted(r.order) == list(range(12))
        np.testing.assert_array_equal(r.abs_scores, r.scores)

    def test_length_mismatch(self):
        f = SvdFactors(np.eye(3), np.ones(3), np.eye(3))
        with pytest.raises(ValueError, match="length"):
            rank_features(f, [1.0, 2.0], 3)

    def test_rank_correlation(self):
        f = SvdFactors(np.eye(4), np.ones(4), np.eye(4))
        a = rank_features(f, [4, 3, 2, 1], 4)
        b = rank_features(f, [1, 2, 3, 4], 4)
        assert rank_correlation(a, a) == pytest.approx(1.0)
        assert rank_correlation(a, b) == pytest.approx(-1.0)


def test_csv_writers(tmp_path, rng):
    f = svd(rng.standard_normal((10, 3)))
    write_factors(f, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "matrix,row,col,value" and len(lines) == 1 + 3 + 9
    r = rank_features(f, [1.0, -1.0], 2, ["x", "y", "z"])
    write_ranking(r, tmp_path / "r.csv")
    rows = (tmp_path / "r.csv").read_text().splitlines()
    assert rows[0] == "rank,feature,label,score,abs_score" and rows[1].startswith("1,")
