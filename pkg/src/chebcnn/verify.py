"""Self-verification suites: oracle equivalence, gradient checks,
permutation equivariance and Laplacian spectra.

Each suite returns a SuiteResult; the CLI `verify` command runs them all
and exits nonzero on any failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .conv import cheb_conv, init_cheb_params, spectral_filter_exact
from .data import make_batch
from .graphs import (build_graph, eigendecomposition, normalized_laplacian,
                     permute_graph, scale_laplacian)
from .models import ARCHITECTURES, ModelSpec, build_model
from .synthetic import random_connected_graph, random_graph
from .tensor import BatchNorm, Tensor, grad_check
from .train import cross_entropy


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)


def _scaled(g, lambda_max=2.0):
    return scale_laplacian(normalized_laplacian(g), lambda_max)


def suite_oracle_equivalence(trials=50, seed=0, tol=1e-9):
    """cheb_conv vs the eigendecomposition filter and vs direct
    polynomial-of-matrix evaluation."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(3, 11))
        d_in = int(rng.integers(1, 5))
        d_out = int(rng.integers(1, 6))
        k = int(rng.integers(0, 7))
        g = random_connected_graph(n, rng, d=d_in)
        lap = normalized_laplacian(g)
        lt = scale_laplacian(lap)
        params = init_cheb_params(d_in, d_out, k, rng)
        x = Tensor(g.node_features)
        fast = cheb_conv(lt, x, params).data
        exact = spectral_filter_exact(lap, x, params)
        worst = max(worst, float(np.abs(fast - exact).max()))
        # third route: polynomial of the dense operator via repeated matmul
        lt_dense = lt.dense()
        t_prev, t_cur = np.eye(n), lt_dense
        direct = np.zeros_like(fast)
        for order in range(k + 1):
            if order == 0:
                tk = t_prev
            elif order == 1:
                tk = t_cur
            else:
                t_prev, t_cur = t_cur, 2.0 * lt_dense @ t_cur - t_prev
                tk = t_cur
            direct += tk @ g.node_features @ params.thetas[order].data
        if params.bias is not None:
            direct += params.bias.data
        worst = max(worst, float(np.abs(fast - direct).max()))
    return SuiteResult("oracle_equivalence", worst <= tol,
                       f"max abs error {worst:.3e} over {trials} trials (tol {tol:g})",
                       {"max_abs_error": worst})


def gradcheck_ops(seed=0, epsilon=1e-5):
    """Per-op finite-difference checks; returns {op_name: max rel error}."""
    rng = np.random.default_rng(seed)
    errors = {}

    def check(name, f, params):
        errors[name] = grad_check(f, params, epsilon=epsilon)

    a = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
    b = Tensor(rng.standard_normal((3, 5)), requires_grad=True)
    check("matmul", lambda: _sum_all(T.matmul(a, b)), [a, b])

    x = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
    bias = Tensor(rng.standard_normal(3), requires_grad=True)
    check("add_bias", lambda: _sum_all(T.add(x, bias)), [x, bias])

    c1 = Tensor(rng.standard_normal((4, 2)), requires_grad=True)
    c2 = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
    cw = Tensor(rng.standard_normal((5, 2)))
    check("concat_columns",
          lambda: _sum_all(T.matmul(T.concat_columns([c1, c2]), cw)),
          [c1, c2])

    r = Tensor(rng.standard_normal((5, 4)) + 0.3, requires_grad=True)
    check("relu", lambda: _sum_all(T.relu(r)), [r])

    s = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
    w = Tensor(rng.standard_normal((3, 2)))
    check("softmax_rows", lambda: _sum_all(T.matmul(T.softmax_rows(s), w)), [s])

    import scipy.sparse as sp
    op = sp.random(6, 6, density=0.4, random_state=7, format="csr")
    sx = Tensor(rng.standard_normal((6, 3)), requires_grad=True)
    check("spmm", lambda: _sum_all(T.spmm(op, sx)), [sx])

    bn = BatchNorm(3)
    bx = Tensor(rng.standard_normal((6, 3)), requires_grad=True)
    wsum_bn = _weighted_sum_fn((6, 3), rng)
    check("batch_norm_train", lambda: wsum_bn(bn(bx, T.TRAIN)),
          [bx, bn.gamma, bn.beta])
    check("batch_norm_eval", lambda: wsum_bn(bn(bx, T.EVAL)),
          [bx, bn.gamma, bn.beta])

    dx = Tensor(rng.standard_normal((5, 4)), requires_grad=True)

    def dropout_fixed():
        # fixed mask so finite differences see a deterministic function
        return _sum_all(T.dropout(dx, 0.5, T.TRAIN, np.random.default_rng(11)))

    check("dropout", dropout_fixed, [dx])

    mx = Tensor(rng.standard_normal((7, 3)), requires_grad=True)
    ids = np.array([0, 0, 1, 1, 1, 2, 2])
    wsum_seg = _weighted_sum_fn((3, 3), rng)
    check("segment_mean", lambda: wsum_seg(T.segment_mean(mx, ids, 3)), [mx])

    probs_in = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
    labels = np.array([0, 2, 1, 1])
    check("cross_entropy",
          lambda: cross_entropy(T.softmax_rows(probs_in), labels), [probs_in])

    g = random_connected_graph(6, rng, d=3)
    lt = _scaled(g)
    cx = Tensor(g.node_features, requires_grad=True)
    params = init_cheb_params(3, 4, 4, rng)
    wsum_conv = _weighted_sum_fn((6, 4), rng)
    check("cheb_conv", lambda: wsum_conv(cheb_conv(lt, cx, params)),
          [cx] + params.parameters())
    return errors


def _sum_all(t):
    ones = Tensor(np.ones((t.shape[1], 1)))
    col = T.matmul(t, ones)
    return T.matmul(Tensor(np.ones((1, col.shape[0]))), col)


def _weighted_sum_fn(shape, rng):
    """Deterministic random linear functional; a plain sum can hide sign
    errors, and finite differences need the same weights on every call."""
    w = Tensor(rng.standard_normal(shape))

    def apply(t):
        return T.matmul(T.matmul(Tensor(np.ones((1, t.shape[0]))),
                                 _hadamard(t, w)),
                        Tensor(np.ones((t.shape[1], 1))))

    return apply


def _hadamard(t, w):
    # elementwise product against a constant, via the existing primitives
    out_data = t.data * w.data

    def backward(g):
        T._accum(t, g * w.data)

    return T._node(out_data, (t,), backward)


def gradcheck_model(architecture, seed=0, epsilon=1e-5, n=8):
    """Whole-model gradient check on a small random graph, narrow widths."""
    rng = np.random.default_rng(seed)
    depth = {"plain": 6, "resnet": 3, "inception": 3, "densenet": 4}[architecture]
    plan_len = depth if architecture in ("plain", "densenet") else depth // 3
    spec = ModelSpec(architecture=architecture, num_classes=2, feature_dim=3,
                     depth=depth, receptive_field=3,
                     channel_plan=tuple([3] * plan_len),
                     dropout_rate=0.0, seed=seed)
    model = build_model(spec).train()
    graphs = [random_connected_graph(n, rng, d=3, label=int(rng.integers(0, 2)))
              for _ in range(3)]
    batch = make_batch(graphs)

    def loss_fn():
        probs = model.forward(batch)
        return cross_entropy(probs, batch.labels)

    return grad_check(loss_fn, model.parameters(), epsilon=epsilon,
                      max_entries=6, rng=rng)


def suite_gradients(seed=0, tol=1e-4):
    errors = gradcheck_ops(seed=seed)
    for arch in ARCHITECTURES:
        errors[f"model_{arch}"] = gradcheck_model(arch, seed=seed)
    worst = max(errors.values())
    lines = ", ".join(f"{k}={v:.2e}" for k, v in sorted(errors.items()))
    return SuiteResult("gradient_checks", worst <= tol,
                       f"max rel error {worst:.3e} (tol {tol:g}); {lines}",
                       {"per_op": errors})


def suite_permutation_invariance(trials=20, seed=0, tol=1e-9):
    """Eval-mode model output is invariant to node relabeling."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for arch in ARCHITECTURES:
        depth = {"plain": 6, "resnet": 3, "inception": 3, "densenet": 4}[arch]
        plan_len = depth if arch in ("plain", "densenet") else depth // 3
        spec = ModelSpec(architecture=arch, num_classes=3, feature_dim=3,
                         depth=depth, channel_plan=tuple([4] * plan_len),
                         dropout_rate=0.5, seed=seed)
        model = build_model(spec).eval()
        for _ in range(trials):
            g = random_connected_graph(int(rng.integers(4, 12)), rng, d=3)
            perm = rng.permutation(g.num_nodes)
            out1 = model.forward(make_batch([g])).data
            out2 = model.forward(make_batch([permute_graph(g, perm)])).data
            worst = max(worst, float(np.abs(out1 - out2).max()))
    return SuiteResult("permutation_invariance", worst <= tol,
                       f"max deviation {worst:.3e} over {trials} pairs "
                       f"x {len(ARCHITECTURES)} architectures (tol {tol:g})",
                       {"max_deviation": worst})


def suite_laplacian_spectrum(graphs=None, samples=100, seed=0, tol=1e-9):
    """Normalized-Laplacian eigenvalues stay within [0, 2]."""
    rng = np.random.default_rng(seed)
    if graphs is None:
        graphs = [random_graph(int(rng.integers(2, 30)), rng) for _ in range(samples)]
    lo, hi = 0.0, 0.0
    for g in graphs[:samples]:
        vals = eigendecomposition(normalized_laplacian(g)).eigenvalues
        lo = min(lo, float(vals.min()))
        hi = max(hi, float(vals.max()))
    ok = lo >= -tol and hi <= 2.0 + tol
    return SuiteResult("laplacian_spectrum", ok,
                       f"eigenvalue range [{lo:.3e}, {hi:.6f}] over "
                       f"{min(len(graphs), samples)} graphs (tol {tol:g})",
                       {"min": lo, "max": hi})


def run_all(seed=0):
    return [
        suite_oracle_equivalence(seed=seed),
        suite_gradients(seed=seed),
        suite_permutation_invariance(seed=seed),
        suite_laplacian_spectrum(seed=seed),
    ]
