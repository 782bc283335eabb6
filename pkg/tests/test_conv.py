import numpy as np
import pytest

import chebcnn.tensor as T
from chebcnn.conv import (ChebConvParams, cheb_conv, chebyshev_basis,
                          init_cheb_params, spectral_filter_exact)
from chebcnn.errors import ShapeError
from chebcnn.graphs import build_graph, normalized_laplacian, permute_graph, scale_laplacian
from chebcnn.synthetic import random_connected_graph
from chebcnn.tensor import Tensor, grad_check
from conftest import path_graph


def scaled(g):
    return scale_laplacian(normalized_laplacian(g))


def params_from(matrices, bias=None, k=None):
    thetas = [Tensor(np.asarray(m, dtype=float), requires_grad=True) for m in matrices]
    b = Tensor(np.asarray(bias, dtype=float), requires_grad=True) if bias is not None else None
    return ChebConvParams(thetas=thetas, bias=b,
                          receptive_field=len(matrices) - 1 if k is None else k)


class TestChebyshevBasis:
    def test_k0_is_input(self):
        g = path_graph(4, d=2)
        basis = chebyshev_basis(scaled(g), Tensor(g.node_features), 0)
        assert len(basis) == 1
        np.testing.assert_array_equal(basis[0].data, g.node_features)

    def test_edgeless_closed_form(self):
        # L~ = -I: B1 = -X, B2 = 2(-I)(-X) - X = X
        g = build_graph(3, [], np.arange(6.0).reshape(3, 2), 0)
        basis = chebyshev_basis(scaled(g), Tensor(g.node_features), 2)
        np.testing.assert_allclose(basis[1].data, -g.node_features)
        np.testing.assert_allclose(basis[2].data, g.node_features)

    def test_matches_operator_polynomial(self):
        rng = np.random.default_rng(0)
        g = random_connected_graph(6, rng, d=2)
        lt = scaled(g)
        basis = chebyshev_basis(lt, Tensor(g.node_features), 6)
        dense = lt.dense()
        t_prev, t_cur = np.eye(6), dense
        for k, b in enumerate(basis):
            if k == 0:
                tk = t_prev
            elif k == 1:
                tk = t_cur
            else:
                t_prev, t_cur = t_cur, 2 * dense @ t_cur - t_prev
                tk = t_cur
            np.testing.assert_allclose(b.data, tk @ g.node_features, atol=1e-9)

    def test_dimension_mismatch(self):
        g = path_graph(4)
        with pytest.raises(ShapeError):
            chebyshev_basis(scaled(g), Tensor(np.ones((3, 1))), 2)


class TestChebConv:
    def test_identity_filter(self):
        g = path_graph(5, d=3)
        p = params_from([np.eye(3)])
        out = cheb_conv(scaled(g), Tensor(g.node_features), p)
        np.testing.assert_array_equal(out.data, g.node_features)

    def test_k2_hand_example(self):
        g = build_graph(2, [(0, 1)], np.array([[1.0], [0.0]]), 0)
        p = params_from([[[0.0]], [[1.0]]])
        out = cheb_conv(scaled(g), Tensor(g.node_features), p)
        np.testing.assert_allclose(out.data, [[0.0], [-1.0]])

    def test_matches_exact_spectral_filter(self):
        rng = np.random.default_rng(7)
        g = random_connected_graph(8, rng, d=3)
        lap = normalized_laplacian(g)
        p = init_cheb_params(3, 5, 6, rng)
        fast = cheb_conv(scale_laplacian(lap), Tensor(g.node_features), p).data
        exact = spectral_filter_exact(lap, g.node_features, p)
        np.testing.assert_allclose(fast, exact, atol=1e-9)

    def test_zero_params_zero_output(self):
        g = path_graph(4, d=2)
        p = params_from([np.zeros((2, 3)), np.zeros((2, 3))])
        out = spectral_filter_exact(normalized_laplacian(g), g.node_features, p)
        np.testing.assert_array_equal(out, np.zeros((4, 3)))

    def test_exact_k0_is_linear_map(self):
        g = path_graph(4, d=2)
        theta = np.array([[1.0, 2.0], [0.5, -1.0]])
        p = params_from([theta])
        out = spectral_filter_exact(normalized_laplacian(g), g.node_features, p)
        np.testing.assert_allclose(out, g.node_features @ theta, atol=1e-12)


class TestProperties:
    def test_k_locality_on_path(self):
        # vertices farther than K hops cannot influence each other
        n, k = 12, 3
        g = path_graph(n, d=1)
        lt = scaled(g)
        rng = np.random.default_rng(0)
        p = init_cheb_params(1, 1, k, rng)
        base = cheb_conv(lt, Tensor(g.node_features), p).data
        x2 = g.node_features.copy()
        x2[n - 1, 0] += 10.0  # farther than K from vertex 0
        out = cheb_conv(lt, Tensor(x2), p).data
        assert abs(out[0, 0] - base[0, 0]) <= 1e-12
        assert abs(out[n - 1, 0] - base[n - 1, 0]) > 1e-6

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            g = random_connected_graph(int(rng.integers(3, 10)), rng, d=2)
            p = init_cheb_params(2, 3, 4, rng)
            perm = rng.permutation(g.num_nodes)
            out = cheb_conv(scaled(g), Tensor(g.node_features), p).data
            gp = permute_graph(g, perm)
            out_p = cheb_conv(scaled(gp), Tensor(gp.node_features), p).data
            pm = np.zeros((g.num_nodes, g.num_nodes))
            pm[perm, np.arange(g.num_nodes)] = 1.0
            np.testing.assert_allclose(out_p, pm @ out, atol=1e-9)

    def test_linearity_in_features(self):
        rng = np.random.default_rng(2)
        g = random_connected_graph(7, rng, d=3)
        lt = scaled(g)
        p = init_cheb_params(3, 2, 5, rng, bias=False)
        x1 = rng.standard_normal((7, 3))
        x2 = rng.standard_normal((7, 3))
        a, b = 1.7, -0.4
        combined = cheb_conv(lt, Tensor(a * x1 + b * x2), p).data
        separate = a * cheb_conv(lt, Tensor(x1), p).data \
            + b * cheb_conv(lt, Tensor(x2), p).data
        np.testing.assert_allclose(combined, separate, atol=1e-9)

    def test_gradients(self):
        rng = np.random.default_rng(3)
        g = random_connected_graph(6, rng, d=2)
        lt = scaled(g)
        p = init_cheb_params(2, 3, 4, rng)
        x = Tensor(g.node_features.copy(), requires_grad=True)
        w = rng.standard_normal((6, 3))

        def f():
            out = cheb_conv(lt, x, p)
            weighted = T._node(out.data * w, (out,),
                               lambda g_: T._accum(out, g_ * w))
            return T.matmul(T.matmul(Tensor(np.ones((1, 6))), weighted),
                            Tensor(np.ones((3, 1))))

        assert grad_check(f, [x] + p.parameters(), epsilon=1e-5) <= 1e-4

    def test_oracle_agreement_50_random(self):
        rng = np.random.default_rng(9)
        worst = 0.0
        for _ in range(50):
            n = int(rng.integers(3, 11))
            d_in = int(rng.integers(1, 5))
            d_out = int(rng.integers(1, 6))
            k = int(rng.integers(0, 7))
            g = random_connected_graph(n, rng, d=d_in)
            lap = normalized_laplacian(g)
            p = init_cheb_params(d_in, d_out, k, rng)
            fast = cheb_conv(scale_laplacian(lap), Tensor(g.node_features), p).data
            exact = spectral_filter_exact(lap, g.node_features, p)
            worst = max(worst, float(np.abs(fast - exact).max()))
        assert worst <= 1e-9
