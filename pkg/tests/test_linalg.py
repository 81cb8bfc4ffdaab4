import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kle.errors import NonFinite, NotDensityMatrix, SingularFunction, ZeroDiagonal
from kle.linalg import spectral_map, sym_eig, unit_trace_normalize, von_neumann_entropy

from .conftest import random_density, random_orthogonal


class TestSymEig:
    def test_identity(self):
        np.testing.assert_array_equal(sym_eig(np.eye(2)).eigenvalues, [1.0, 1.0])

    def test_two_by_two_by_hand(self):
        lam = sym_eig([[0.5, 0.25], [0.25, 0.5]]).eigenvalues
        np.testing.assert_allclose(lam, [0.25, 0.75], atol=1e-15)

    def test_diagonal_sorted(self):
        np.testing.assert_allclose(sym_eig(np.diag([3.0, 1.0, 2.0])).eigenvalues, [1, 2, 3])

    def test_nonfinite(self):
        with pytest.raises(NonFinite):
            sym_eig([[1.0, np.nan], [np.nan, 1.0]])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**31))
    def test_reconstruction(self, n, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, n)) * rng.uniform(0.1, 100)
        A = (X + X.T) / 2
        dec = sym_eig(A)
        assert np.max(np.abs(dec.reconstruct() - A)) <= 1e-8 * max(1, np.max(np.abs(A)))
        V = dec.eigenvectors
        assert np.max(np.abs(V.T @ V - np.eye(n))) <= 1e-8
        assert np.all(np.diff(dec.eigenvalues) >= 0)


class TestSpectralMap:
    def test_exp_of_zero(self):
        np.testing.assert_allclose(spectral_map(np.zeros((3, 3)), np.exp), np.eye(3), atol=1e-15)

    def test_square(self):
        np.testing.assert_allclose(spectral_map(np.diag([2.0, 3.0]), lambda x: x**2), np.diag([4.0, 9.0]))

    def test_heat_closed_form(self):
        K = spectral_map([[1.0, -1.0], [-1.0, 1.0]], lambda x: np.exp(-0.3 * x))
        np.testing.assert_allclose(K, [[0.7744, 0.2256], [0.2256, 0.7744]], atol=1e-4)

    def test_negative_power_at_zero(self):
        with pytest.raises(SingularFunction):
            spectral_map(np.diag([0.0, 1.0]), lambda x: x ** -1.0)

    def test_commutes(self, rng):
        for _ in range(20):
            X = rng.normal(size=(6, 6))
            A = X + X.T
            F = spectral_map(A, np.tanh)
            np.testing.assert_array_equal(F, F.T)
            assert np.max(np.abs(F @ A - A @ F)) <= 1e-8 * max(1, np.abs(A).max())


class TestVonNeumannEntropy:
    def test_uniform(self):
        assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(np.log(4), abs=1e-12)

    def test_pure_state(self):
        assert von_neumann_entropy(np.diag([1.0, 0, 0])) == 0.0

    def test_two_by_two(self):
        assert von_neumann_entropy([[0.5, 0.25], [0.25, 0.5]]) == pytest.approx(0.562335144618808, abs=1e-12)

    def test_rejects_bad_trace(self):
        with pytest.raises(NotDensityMatrix):
            von_neumann_entropy(np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(NotDensityMatrix):
            von_neumann_entropy(np.diag([1.1, -0.1]))

    def test_clamps_rounding_noise(self):
        assert von_neumann_entropy(np.diag([1.0 + 5e-7, -5e-7])) == 0.0

    def test_bounds(self, rng):
        for n in range(1, 10):
            v = von_neumann_entropy(random_density(rng, n))
            assert 0.0 <= v <= np.log(n) + 1e-12

    def test_basis_invariance(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 10))
            K = random_density(rng, n)
            U = random_orthogonal(rng, n)
            assert abs(von_neumann_entropy(K) - von_neumann_entropy(U @ K @ U.T)) <= 1e-8

    def test_concavity(self, rng):
        for _ in range(30):
            n, k = int(rng.integers(2, 8)), int(rng.integers(2, 5))
            Ks = [random_density(rng, n, rank=int(rng.integers(1, n + 1))) for _ in range(k)]
            a = rng.dirichlet(np.ones(k))
            mix = sum(w * K for w, K in zip(a, Ks))
            assert von_neumann_entropy(mix) >= sum(w * von_neumann_entropy(K) for w, K in zip(a, Ks)) - 1e-8


class TestUnitTraceNormalize:
    def test_identity(self):
        np.testing.assert_allclose(unit_trace_normalize(np.eye(3)), np.eye(3) / 3)

    def test_two_by_two_diagonal(self, rng):
        for _ in range(10):
            K = random_density(rng, 2) * rng.uniform(0.1, 10)
            np.testing.assert_allclose(np.diag(unit_trace_normalize(K)), [0.5, 0.5], atol=1e-15)

    def test_heat_kernel_value(self):
        K = unit_trace_normalize([[0.7744, 0.2256], [0.2256, 0.7744]])
        np.testing.assert_allclose(K, [[0.5, 0.1457], [0.1457, 0.5]], atol=1e-3)

    def test_zero_diagonal(self):
        with pytest.raises(ZeroDiagonal):
            unit_trace_normalize(np.diag([1.0, 0.0]))

    def test_idempotent_and_psd(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 10))
            K1 = unit_trace_normalize(random_density(rng, n) + 1e-3 * np.eye(n))
            assert np.trace(K1) == pytest.approx(1.0, abs=1e-12)
            assert np.linalg.eigvalsh(K1)[0] >= -1e-12
            assert np.max(np.abs(unit_trace_normalize(K1) - K1)) <= 1e-12
