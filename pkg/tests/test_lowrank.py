import numpy as np
import pytest

from barseg import lowrank


def eckart_young_error(X, d_c):
    """Oracle: best rank-d_c error of the centered matrix from its
    covariance eigenvalues (independent of the SVD used by pca_compress)."""
    centered = X - X.mean(axis=1, keepdims=True)
    eigvals = np.linalg.eigvalsh(centered.T @ centered)[::-1]
    return float(np.sqrt(np.maximum(eigvals[d_c:], 0.0).sum()))


class TestPCA:
    def test_identical_columns_give_zero_embedding(self):
        X = np.tile(np.random.default_rng(0).random(10)[:, None], (1, 6))
        model = lowrank.pca_compress(X, 3)
        assert np.allclose(model.H, 0.0, atol=1e-12)
        assert np.allclose(model.reconstruct(), X, atol=1e-12)

    def test_full_rank_exact_reconstruction(self):
        rng = np.random.default_rng(1)
        X = rng.random((20, 8))
        model = lowrank.pca_compress(X, 8)
        err = np.linalg.norm(X - model.reconstruct())
        assert err <= 1e-9 * np.linalg.norm(X)

    def test_eckart_young_50x30(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((50, 30))
        model = lowrank.pca_compress(X, 5)
        err = np.linalg.norm(X - model.reconstruct())
        expected = eckart_young_error(X, 5)
        assert err == pytest.approx(expected, rel=1e-9)

    def test_eckart_young_20_random_matrices(self):
        rng = np.random.default_rng(3)
        for trial in range(20):
            X = rng.standard_normal((50, 30)) * rng.uniform(0.1, 10)
            d_c = int(rng.integers(1, 12))
            model = lowrank.pca_compress(X, d_c)
            err = np.linalg.norm(X - model.reconstruct())
            expected = eckart_young_error(X, d_c)
            assert err == pytest.approx(expected, rel=1e-9, abs=1e-12), f"trial {trial}"

    def test_orthonormal_columns(self):
        rng = np.random.default_rng(4)
        model = lowrank.pca_compress(rng.random((30, 15)), 6)
        assert np.allclose(model.W.T @ model.W, np.eye(6), atol=1e-10)

    def test_uncorrelated_embedding_rows(self):
        rng = np.random.default_rng(5)
        model = lowrank.pca_compress(rng.standard_normal((40, 25)), 5)
        gram = model.H @ model.H.T
        off_diag = gram - np.diag(np.diag(gram))
        assert np.abs(off_diag).max() <= 1e-8 * np.abs(np.diag(gram)).max()

    def test_sign_convention_deterministic(self):
        rng = np.random.default_rng(6)
        X = rng.random((20, 10))
        a = lowrank.pca_compress(X, 4)
        b = lowrank.pca_compress(X.copy(), 4)
        assert np.array_equal(a.W, b.W)
        for j in range(4):
            assert a.W[np.argmax(np.abs(a.W[:, j])), j] > 0

    def test_rank_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            lowrank.pca_compress(np.ones((5, 3)), 4)


class TestNMF:
    def test_exact_rank_one_recovery(self):
        rng = np.random.default_rng(10)
        w = rng.random(15) + 0.1
        h = rng.random(7) + 0.1
        X = np.outer(w, h)
        model = lowrank.nmf_compress(X, 1, seed=0)
        assert model.loss_trace[-1] <= 1e-8 * np.sum(X**2)

    def test_zero_matrix(self):
        model = lowrank.nmf_compress(np.zeros((6, 4)), 2, seed=0)
        assert np.allclose(model.W @ model.H, 0.0)
        assert model.loss_trace[-1] == 0.0

    def test_loss_trace_nonincreasing(self):
        rng = np.random.default_rng(11)
        X = rng.random((40, 20))
        model = lowrank.nmf_compress(X, 4, seed=42)
        diffs = np.diff(model.loss_trace)
        assert np.all(diffs <= 1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_monotone_across_seeds(self, seed):
        rng = np.random.default_rng(seed + 100)
        X = rng.random((30, 15)) * 5
        model = lowrank.nmf_compress(X, 3, seed=seed)
        assert np.all(np.diff(model.loss_trace) <= 1e-12)

    def test_factors_nonnegative(self):
        rng = np.random.default_rng(12)
        model = lowrank.nmf_compress(rng.random((25, 12)), 4, seed=1)
        assert model.W.min() >= 0
        assert model.H.min() >= 0

    def test_negative_input_rejected(self):
        X = np.ones((5, 4))
        X[2, 2] = -0.01
        with pytest.raises(ValueError, match="nonnegative"):
            lowrank.nmf_compress(X, 2)

    def test_seeded_determinism(self):
        rng = np.random.default_rng(13)
        X = rng.random((20, 10))
        a = lowrank.nmf_compress(X, 3, seed=7)
        b = lowrank.nmf_compress(X, 3, seed=7)
        assert np.array_equal(a.H, b.H)
        assert np.array_equal(a.loss_trace, b.loss_trace)

    def test_scale_covariance_at_init(self):
        # Analytic: scaling X by a and both factors by sqrt(a) scales the
        # initial loss by a^2.
        rng = np.random.default_rng(14)
        X = rng.random((12, 8))
        W0 = rng.random((12, 3))
        H0 = rng.random((3, 8))
        alpha = 4.0
        base = lowrank.nmf_compress(X, 3, max_iters=1, init_W=W0, init_H=H0)
        scaled = lowrank.nmf_compress(
            alpha * X, 3, max_iters=1, init_W=np.sqrt(alpha) * W0, init_H=np.sqrt(alpha) * H0
        )
        assert scaled.loss_trace[0] == pytest.approx(alpha**2 * base.loss_trace[0], rel=1e-12)
