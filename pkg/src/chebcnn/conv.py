"""K-localized Chebyshev spectral convolution and its eigendecomposition
oracle.

The fast path evaluates the degree-K polynomial filter through the
recurrence on feature maps:

    B_0 = X,  B_1 = Lt X,  B_k = 2 Lt B_{k-1} - B_{k-2}

where Lt is the scaled Laplacian.  The oracle evaluates the identical
polynomial spectrally via a dense eigendecomposition and is never used in
training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .graphs import Laplacian, ScaledLaplacian, eigendecomposition
from .tensor import Tensor


@dataclass
class ChebConvParams:
    """Learnable coefficients: one d_in x d_out matrix per polynomial order
    0..K, plus an optional per-output-channel bias."""

    thetas: list
    bias: Tensor | None
    receptive_field: int

    @property
    def d_in(self):
        return self.thetas[0].shape[0]

    @property
    def d_out(self):
        return self.thetas[0].shape[1]

    def parameters(self):
        return list(self.thetas) + ([self.bias] if self.bias is not None else [])


def init_cheb_params(d_in, d_out, k, rng, dtype=np.float64, bias=True,
                     name="conv"):
    """Fan-based uniform init: the K+1 stacked basis blocks count as input fan."""
    bound = np.sqrt(6.0 / ((k + 1) * d_in + d_out))
    thetas = [
        Tensor(rng.uniform(-bound, bound, size=(d_in, d_out)).astype(dtype),
               requires_grad=True, name=f"{name}.theta{i}")
        for i in range(k + 1)
    ]
    b = Tensor(np.zeros(d_out, dtype=dtype), requires_grad=True,
               name=f"{name}.bias") if bias else None
    return ChebConvParams(thetas=thetas, bias=b, receptive_field=k)


def chebyshev_basis(lt: ScaledLaplacian, x: Tensor, k: int):
    """B_0..B_k via the three-term recurrence, differentiable w.r.t. x."""
    n = lt.matrix.shape[0]
    if x.data.ndim != 2 or x.shape[0] != n:
        raise ShapeError(f"features {x.shape} do not match operator {lt.matrix.shape}")
    if k < 0:
        raise ShapeError(f"receptive field must be >= 0, got {k}")
    basis = [x]
    if k >= 1:
        basis.append(T.spmm(lt.matrix, x))
    for _ in range(2, k + 1):
        nxt = T.add(T.scale(T.spmm(lt.matrix, basis[-1]), 2.0),
                    T.scale(basis[-2], -1.0))
        basis.append(nxt)
    return basis


def cheb_conv(lt: ScaledLaplacian, x: Tensor, params: ChebConvParams) -> Tensor:
    """sum_k B_k theta_k (+ bias), with full backward rules on the tape."""
    if x.shape[1] != params.d_in:
        raise ShapeError(
            f"input width {x.shape[1]} != parameter d_in {params.d_in}")
    basis = chebyshev_basis(lt, x, params.receptive_field)
    out = T.matmul(basis[0], params.thetas[0])
    for b, theta in zip(basis[1:], params.thetas[1:]):
        out = T.add(out, T.matmul(b, theta))
    if params.bias is not None:
        out = T.add(out, params.bias)
    return out


def conv_from_basis(basis, params: ChebConvParams) -> Tensor:
    """Apply coefficients to a precomputed Chebyshev basis (shared between
    the tributaries of one layer input)."""
    if len(basis) < params.receptive_field + 1:
        raise ShapeError("basis shorter than receptive field + 1")
    out = T.matmul(basis[0], params.thetas[0])
    for k in range(1, params.receptive_field + 1):
        out = T.add(out, T.matmul(basis[k], params.thetas[k]))
    if params.bias is not None:
        out = T.add(out, params.bias)
    return out


def spectral_filter_exact(l_norm: Laplacian, x, params: ChebConvParams,
                          lambda_max: float = 2.0) -> np.ndarray:
    """Spectrally exact evaluation of the same polynomial filter.

    Computes sum_k (U T_k(S) U^T X) theta_k where S is the diagonal of
    scaled eigenvalues 2 lambda / lambda_max - 1.  Dense; oracle only.
    """
    x = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    eig = eigendecomposition(l_norm)
    u = eig.eigenvectors
    s = 2.0 * eig.eigenvalues / lambda_max - 1.0
    xhat = u.T @ x
    k = params.receptive_field
    t_prev, t_cur = np.ones_like(s), s
    out = np.zeros((x.shape[0], params.d_out))
    for order in range(k + 1):
        if order == 0:
            tk = t_prev
        elif order == 1:
            tk = t_cur
        else:
            t_prev, t_cur = t_cur, 2.0 * s * t_cur - t_prev
            tk = t_cur
        filtered = u @ (tk[:, None] * xhat)
        out += filtered @ params.thetas[order].data
    if params.bias is not None:
        out = out + params.bias.data
    return out
