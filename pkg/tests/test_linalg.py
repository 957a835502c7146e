import numpy as np
import pytest

from nykpca.exceptions import NumericError, UsageError
from nykpca.linalg import inv_sqrt_psd, psd_solve, sym_eig

from conftest import random_psd


def check_decomposition(A, dec):
    values, V = dec
    assert np.all(np.diff(values) <= 0)
    assert np.max(np.abs(V.T @ V - np.eye(len(values)))) <= 1e-10
    residual = np.abs(A @ V - V * values).max()
    assert residual <= 1e-8 * max(np.linalg.norm(A, 2), 1e-300)
    assert values.sum() == pytest.approx(np.trace(A), rel=1e-10, abs=1e-14)
    for col in V.T:
        first = col[np.abs(col) > 1e-12][0]
        assert first > 0


class TestSymEig:
    def test_identity(self):
        values, _ = sym_eig(np.eye(3))
        assert values.tolist() == [1.0, 1.0, 1.0]

    def test_diagonal_is_sorted_with_axis_vectors(self):
        values, V = sym_eig(np.diag([3.0, 1.0, 2.0]))
        assert values.tolist() == [3.0, 2.0, 1.0]
        assert np.array_equal(np.abs(V), np.eye(3)[:, [0, 2, 1]])

    def test_two_by_two_by_hand(self):
        # characteristic polynomial (2 - x)^2 - 1 = 0 -> x = 3, 1
        values, V = sym_eig([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(values, [3.0, 1.0], rtol=1e-15)
        r = 1 / np.sqrt(2)
        np.testing.assert_allclose(V[:, 0], [r, r], atol=1e-15)
        np.testing.assert_allclose(V[:, 1], [r, -r], atol=1e-15)

    @pytest.mark.parametrize("p", [1, 5, 40])
    def test_contract_on_random_psd(self, rng, p):
        A = random_psd(rng, p)
        check_decomposition(A, sym_eig(A))

    def test_symmetrizes_input(self, rng):
        A = random_psd(rng, 6)
        noisy = A + 1e-12 * rng.standard_normal(A.shape)
        check_decomposition(0.5 * (noisy + noisy.T), sym_eig(noisy))

    def test_reproducible(self, rng):
        A = random_psd(rng, 30)
        v1, V1 = sym_eig(A)
        v2, V2 = sym_eig(A.copy())
        assert v1.tobytes() == v2.tobytes() and V1.tobytes() == V2.tobytes()

    def test_rejects_non_finite(self):
        with pytest.raises(UsageError):
            sym_eig([[1.0, np.nan], [np.nan, 1.0]])

    def test_rejects_non_square(self):
        with pytest.raises(UsageError):
            sym_eig(np.ones((2, 3)))


class TestInvSqrt:
    def test_identity(self):
        R, rank = inv_sqrt_psd(np.eye(4))
        np.testing.assert_allclose(R, np.eye(4), atol=1e-15)
        assert rank == 4

    def test_diagonal(self):
        R, rank = inv_sqrt_psd(np.diag([4.0, 1.0]))
        np.testing.assert_allclose(R, np.diag([0.5, 1.0]), atol=1e-15)

    def test_floor_drops_tiny_direction(self):
        A = np.diag([4.0, 1e-16])
        R, rank = inv_sqrt_psd(A, floor=1e-12 * np.trace(A))
        np.testing.assert_allclose(R, np.diag([0.5, 0.0]), atol=1e-15)
        assert rank == 1

    def test_default_floor_handles_duplicate_columns(self, rng):
        B = rng.standard_normal((5, 3))
        B = np.vstack([B, B[:2]])
        R, rank = inv_sqrt_psd(B @ B.T)
        assert rank == 3

    def test_projector_property(self, rng):
        A = random_psd(rng, 8, rank=5)
        R, rank = inv_sqrt_psd(A)
        P = R @ A @ R
        assert rank == 5
        np.testing.assert_allclose(P, P.T, atol=1e-8)
        np.testing.assert_allclose(P @ P, P, atol=1e-8)
        assert np.trace(P) == pytest.approx(5, abs=1e-8)

    def test_numerically_zero(self):
        with pytest.raises(NumericError, match="numerically zero"):
            inv_sqrt_psd(np.zeros((3, 3)))


class TestPsdSolve:
    def test_zero_matrix(self):
        np.testing.assert_allclose(psd_solve(np.zeros((3, 3)), 2.0, np.eye(3)), 0.5 * np.eye(3))

    def test_diagonal(self):
        np.testing.assert_allclose(psd_solve(np.diag([1.0, 3.0]), 1.0, np.eye(2)),
                                   np.diag([0.5, 0.25]), rtol=1e-15)

    def test_multiply_back(self, rng):
        A = random_psd(rng, 5)
        B = rng.standard_normal((5, 3))
        X = psd_solve(A, 0.1, B)
        residual = np.linalg.norm((A + 0.1 * np.eye(5)) @ X - B)
        assert residual < 1e-10 * np.linalg.norm(B)

    def test_shift_must_be_positive(self):
        with pytest.raises(UsageError):
            psd_solve(np.eye(2), 0.0, np.eye(2))
