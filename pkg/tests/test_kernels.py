import math

import numpy as np
import pytest
from scipy.linalg import expm

from kle.errors import DimensionMismatch, InvalidLengthscale, InvalidParams, InvalidProbs
from kle.estimators import semantic_entropy
from kle.graph import Clustering, SemanticGraph, laplacian
from kle.kernels import (
    KernelConfig,
    build_kernel,
    combine_kernels,
    heat_kernel,
    matern_kernel,
    se_block_kernel,
)
from kle.linalg import unit_trace_normalize, von_neumann_entropy

from .conftest import random_density, random_weights

L2 = np.array([[1.0, -1.0], [-1.0, 1.0]])


def taylor_exp(A, terms=30):
    out, term = np.eye(len(A)), np.eye(len(A))
    for k in range(1, terms + 1):
        term = term @ A / k
        out = out + term
    return out


class TestHeat:
    def test_small_t_is_identity(self):
        np.testing.assert_allclose(heat_kernel(L2, 1e-12), np.eye(2), atol=1e-11)

    def test_two_nodes(self):
        np.testing.assert_allclose(heat_kernel(L2, 0.3), [[0.7744058, 0.2255942], [0.2255942, 0.7744058]], atol=1e-7)

    def test_edgeless(self):
        np.testing.assert_allclose(heat_kernel(np.zeros((4, 4)), 7.0), np.eye(4))

    def test_invalid(self):
        for t in (0.0, -1.0):
            with pytest.raises(InvalidLengthscale):
                heat_kernel(L2, t)

    def test_taylor_and_expm(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 12))
            L = laplacian(SemanticGraph(random_weights(rng, n)))
            t = 5.0 / max(np.linalg.norm(L, 2), 1e-9) * rng.uniform(0.05, 1)
            K = heat_kernel(L, t)
            assert np.max(np.abs(K - taylor_exp(-t * L))) <= 1e-8
            assert np.max(np.abs(K - expm(-t * L))) <= 1e-10

    def test_entries_nonnegative_and_diagonal_bounds(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 12))
            L = laplacian(SemanticGraph(random_weights(rng, n, p=rng.uniform())))
            K = heat_kernel(L, rng.uniform(0.01, 5))
            assert K.min() >= -1e-12
            d = np.diag(K)
            assert np.all(d > 0) and np.all(d <= 1 + 1e-12)
            assert np.linalg.eigvalsh(K)[0] >= -1e-12


class TestMatern:
    def test_edgeless(self):
        for nu, kappa in [(1.0, 1.0), (2.5, 0.7), (0.5, 3.0)]:
            expect = (2 * nu / kappa**2) ** (-nu)
            np.testing.assert_allclose(matern_kernel(np.zeros((3, 3)), nu, kappa), expect * np.eye(3))
            np.testing.assert_allclose(matern_kernel(np.zeros((3, 3)), nu, kappa, scaled=True), np.eye(3))

    def test_two_nodes_by_hand(self):
        np.testing.assert_allclose(matern_kernel(L2, 1.0, math.sqrt(2)), np.array([[2, 1], [1, 2]]) / 3, atol=1e-12)

    def test_identity_case(self):
        np.testing.assert_allclose(matern_kernel(np.zeros((2, 2)), 1.0, math.sqrt(2)), np.eye(2), atol=1e-12)

    def test_matches_inverse(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 9))
            L = laplacian(SemanticGraph(random_weights(rng, n)))
            np.testing.assert_allclose(
                matern_kernel(L, 1.0, 0.8), np.linalg.inv(2 / 0.64 * np.eye(n) + L), atol=1e-10
            )

    def test_invalid(self):
        with pytest.raises(InvalidParams):
            matern_kernel(L2, 0.0, 1.0)
        with pytest.raises(InvalidParams):
            matern_kernel(L2, 1.0, -1.0)

    def test_large_nu_approaches_heat(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 13))
            G = SemanticGraph(random_weights(rng, n))
            Km = build_kernel(G, KernelConfig.matern(200.0, 1.0)).matrix
            Kh = build_kernel(G, KernelConfig.heat(0.5)).matrix
            assert np.max(np.abs(Km - Kh)) <= 1e-2


class TestSEBlock:
    def test_known_entropy(self):
        K = se_block_kernel(Clustering((0, 0, 1, 2)), [0.5, 0.25, 0.25])
        assert von_neumann_entropy(K.matrix) == pytest.approx(1.0397207708399179, abs=1e-6)
        np.testing.assert_allclose(K.matrix[:2, :2], 0.25)

    def test_single_cluster(self):
        K = se_block_kernel(Clustering((0, 0, 0)), [1.0])
        assert von_neumann_entropy(K.matrix) == pytest.approx(0.0, abs=1e-12)

    def test_singletons_uniform(self):
        K = se_block_kernel(Clustering(tuple(range(5))), np.full(5, 0.2))
        assert von_neumann_entropy(K.matrix) == pytest.approx(math.log(5), abs=1e-12)

    def test_interleaved_order_and_permutation(self):
        cl = Clustering((0, 1, 0, 1, 1))
        K = se_block_kernel(cl, [0.4, 0.6])
        assert K.permutation == (0, 2, 1, 3, 4)
        assert K.matrix[0, 2] == pytest.approx(0.2) and K.matrix[1, 4] == pytest.approx(0.2)
        assert K.matrix[0, 1] == 0.0
        P = np.array(K.permutation)
        Kb = K.matrix[np.ix_(P, P)]
        np.testing.assert_allclose(Kb[:2, :2], 0.2)
        np.testing.assert_allclose(Kb[2:, 2:], 0.2)

    def test_recovers_semantic_entropy(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 13))
            cl = Clustering.from_labels(rng.integers(0, n, n).tolist())
            p = rng.dirichlet(np.ones(cl.M) * rng.uniform(0.1, 3))
            K = se_block_kernel(cl, p)
            assert np.trace(K.matrix) == pytest.approx(1.0, abs=1e-12)
            assert abs(von_neumann_entropy(K.matrix) - semantic_entropy(p)) <= 1e-9

    @pytest.mark.parametrize("p", [[0.5, 0.6], [1.2, -0.2], [1.0]])
    def test_invalid_probs(self, p):
        with pytest.raises(InvalidProbs):
            se_block_kernel(Clustering((0, 1)), p)


class TestCombine:
    def test_first_weight_one(self, rng):
        A, B = random_density(rng, 3), random_density(rng, 3)
        np.testing.assert_array_equal(combine_kernels([A, B], [1.0, 0.0]), (A + A.T) / 2)

    def test_halves(self):
        np.testing.assert_allclose(
            combine_kernels([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], [0.5, 0.5]), np.diag([0.5, 0.5])
        )

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            combine_kernels([np.eye(2) / 2, np.eye(3) / 3], [0.5, 0.5])
        with pytest.raises(InvalidParams):
            combine_kernels([np.eye(2) / 2, np.eye(2) / 2], [0.7, 0.7])

    def test_concave_on_random_pairs(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 8))
            A, B = random_density(rng, n, 1), random_density(rng, n)
            a = rng.uniform()
            K = combine_kernels([A, B], [a, 1 - a])
            assert np.trace(K) == pytest.approx(1.0)
            assert von_neumann_entropy(K) >= a * von_neumann_entropy(A) + (1 - a) * von_neumann_entropy(B) - 1e-8


class TestBuild:
    def test_edgeless_heat(self):
        for n in (1, 2, 5):
            K = build_kernel(SemanticGraph(np.zeros((n, n))), KernelConfig.heat())
            np.testing.assert_allclose(K.matrix, np.eye(n) / n)
            assert von_neumann_entropy(K.matrix) == pytest.approx(math.log(n), abs=1e-12)

    def test_complete_graph_collapses(self):
        n = 6
        W = 2.0 * (np.ones((n, n)) - np.eye(n))
        assert von_neumann_entropy(build_kernel(SemanticGraph(W), KernelConfig.heat(50.0)).matrix) < 1e-6

    def test_full_alpha_zero_is_se(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 10))
            cl = Clustering.from_labels(rng.integers(0, 3, n).tolist())
            p = rng.dirichlet(np.ones(cl.M))
            G = SemanticGraph(random_weights(rng, n))
            K = build_kernel(G, KernelConfig.full(alpha=0.0), cl, p)
            np.testing.assert_allclose(K.matrix, se_block_kernel(cl, p).matrix, atol=1e-15)
            assert von_neumann_entropy(K.matrix) == pytest.approx(semantic_entropy(p), abs=1e-9)

    def test_full_mixes_normalized_heat(self, rng):
        n = 5
        cl = Clustering((0, 0, 1, 1, 2))
        p = np.array([0.5, 0.3, 0.2])
        G = SemanticGraph(random_weights(rng, n))
        K = build_kernel(G, KernelConfig.full(t=0.3, alpha=0.5), cl, p).matrix
        H = unit_trace_normalize(heat_kernel(laplacian(G), 0.3))
        np.testing.assert_allclose(K, 0.5 * H + 0.5 * se_block_kernel(cl, p).matrix, atol=1e-14)
        Kpost = build_kernel(G, KernelConfig.full(alpha=0.5, normalize_components=False), cl, p).matrix
        np.testing.assert_allclose(np.diag(Kpost), 1 / n)

    def test_cluster_graph_se_is_diagonal(self):
        G = SemanticGraph(np.zeros((3, 3)), "clusters")
        K = build_kernel(G, KernelConfig.se_block(), probs=[0.2, 0.3, 0.5])
        np.testing.assert_allclose(K.matrix, np.diag([0.2, 0.3, 0.5]))

    def test_entropy_bounds(self, rng):
        cfgs = [KernelConfig.heat(0.3), KernelConfig.heat(2.0, True), KernelConfig.matern(), KernelConfig.matern(2.5, 0.5, True)]
        for _ in range(20):
            n = int(rng.integers(1, 12))
            G = SemanticGraph(random_weights(rng, n))
            for cfg in cfgs:
                v = von_neumann_entropy(build_kernel(G, cfg).matrix)
                assert -1e-12 <= v <= math.log(n) + 1e-9

    def test_config_validation(self):
        with pytest.raises(InvalidLengthscale):
            KernelConfig.heat(0.0)
        with pytest.raises(InvalidParams):
            KernelConfig.matern(nu=-1)
        with pytest.raises(InvalidParams):
            KernelConfig("combination", components=(KernelConfig.heat(),), alpha=(0.5,))

    def test_config_round_trip(self):
        for cfg in (KernelConfig.heat(0.7, True), KernelConfig.matern(2.0, 0.5), KernelConfig.full(0.2, 0.3)):
            assert KernelConfig.from_dict(cfg.to_dict()) == cfg
