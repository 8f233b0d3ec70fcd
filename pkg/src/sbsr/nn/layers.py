"""Layer kernels: valid cross-correlation, non-overlapping max pooling, ReLU,
and the fully connected map, each with an exact analytic backward pass.

Convolutions are lowered to matrix multiplies (im2col + GEMM) in fixed-size
chunks so the scratch buffer stays bounded; the chunk schedule depends only on
shapes, which keeps reductions in a fixed order and the output deterministic.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Upper bound on the im2col scratch buffer, in elements. 8M float32 ~ 32 MB.
_IM2COL_BUDGET = 8_000_000


class ShapeError(ValueError):
    """Input shape incompatible with a layer's contract."""


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    """Promote [c,h,w] to [1,c,h,w]; report whether a batch axis was added."""
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ShapeError(f"expected a [c,h,w] or [b,c,h,w] tensor, got shape {x.shape}")


def conv2d_forward(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid (no padding, stride 1) cross-correlation plus per-map bias.

    x: [b,c,h,w] or [c,h,w]; kernels: [out,c,k,k]; bias: [out].
    Returns [b,out,h-k+1,w-k+1] (or unbatched if x was unbatched).
    """
    given_shape = x.shape
    x, squeeze = _as_batch(x)
    b, c, h, w = x.shape
    if kernels.ndim != 4 or kernels.shape[2] != kernels.shape[3]:
        raise ShapeError(f"kernels must be [out,in,k,k], got {kernels.shape}")
    out_maps, c_k, k, _ = kernels.shape
    if c != c_k:
        raise ShapeError(
            f"input has {c} channels (shape {given_shape}) but kernels expect "
            f"{c_k} (shape {kernels.shape})"
        )
    if h < k or w < k:
        raise ShapeError(
            f"input {h}x{w} smaller than kernel {k}x{k} (input shape {given_shape}, "
            f"kernel shape {kernels.shape})"
        )
    if bias.shape != (out_maps,):
        raise ShapeError(f"bias must be [{out_maps}], got {bias.shape}")

    oh, ow = h - k + 1, w - k + 1
    wmat = kernels.reshape(out_maps, c * k * k)
    out = np.empty((b, out_maps, oh, ow), dtype=x.dtype)
    step = max(1, _IM2COL_BUDGET // max(1, oh * ow * c * k * k))
    for i in range(0, b, step):
        cols = _im2col(x[i : i + step], k, oh, ow)
        y = cols @ wmat.T  # [n*oh*ow, out]
        out[i : i + step] = y.reshape(-1, oh, ow, out_maps).transpose(0, 3, 1, 2)
    out += bias.reshape(1, out_maps, 1, 1)
    return out[0] if squeeze else out


def _im2col(x: np.ndarray, k: int, oh: int, ow: int) -> np.ndarray:
    """[n,c,h,w] -> [n*oh*ow, c*k*k] patch matrix (copies)."""
    win = sliding_window_view(x, (k, k), axis=(2, 3))  # [n,c,oh,ow,k,k] view
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(-1, x.shape[1] * k * k)


def conv2d_backward(
    x: np.ndarray,
    kernels: np.ndarray,
    grad_out: np.ndarray,
    need_input_grad: bool = True,
) -> tuple[np.ndarray | None, np.ndarray, np.ndarray]:
    """Gradients of conv2d_forward: returns (grad_x, grad_kernels, grad_bias).

    grad_x is None when need_input_grad is False (first layer of a net does
    not need it during training, and it is the dominant cost there).
    """
    x, squeeze = _as_batch(x)
    grad_out, _ = _as_batch(grad_out)
    b, c, h, w = x.shape
    out_maps, _, k, _ = kernels.shape
    oh, ow = h - k + 1, w - k + 1

    grad_bias = grad_out.sum(axis=(0, 2, 3))

    grad_wmat = np.zeros((out_maps, c * k * k), dtype=x.dtype)
    step = max(1, _IM2COL_BUDGET // max(1, oh * ow * c * k * k))
    for i in range(0, b, step):
        cols = _im2col(x[i : i + step], k, oh, ow)
        gy = grad_out[i : i + step].transpose(0, 2, 3, 1).reshape(-1, out_maps)
        grad_wmat += gy.T @ cols
    grad_kernels = grad_wmat.reshape(out_maps, c, k, k)

    grad_x = None
    if need_input_grad:
        grad_x = np.zeros_like(x)
        for ki in range(k):
            for kj in range(k):
                # contribution of tap (ki,kj): [b,oh,ow,c] -> shifted slab
                contrib = np.tensordot(grad_out, kernels[:, :, ki, kj], axes=([1], [0]))
                grad_x[:, :, ki : ki + oh, kj : kj + ow] += contrib.transpose(0, 3, 1, 2)
        if squeeze:
            grad_x = grad_x[0]
    return grad_x, grad_kernels, grad_bias


def maxpool_forward(x: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Non-overlapping p x p max pooling.

    Returns (pooled, mask) where mask[b,c,i,j] is the flat row-major index
    (0..p*p-1) of the winning cell in its window; ties go to the first index
    in row-major order, which makes the backward routing deterministic.
    """
    x, squeeze = _as_batch(x)
    b, c, h, w = x.shape
    if p <= 0 or h % p or w % p:
        raise ShapeError(
            f"pool window {p} must divide spatial dims of {x.shape}; "
            "the fixed architecture guarantees this, so a violation is a wiring bug"
        )
    oh, ow = h // p, w // p
    win = (
        x.reshape(b, c, oh, p, ow, p)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(b, c, oh, ow, p * p)
    )
    mask = win.argmax(axis=-1)  # first occurrence wins
    out = np.take_along_axis(win, mask[..., None], axis=-1)[..., 0]
    if squeeze:
        return out[0], mask[0].astype(np.int8)
    return out, mask.astype(np.int8)


def maxpool_nomask(x: np.ndarray, p: int) -> np.ndarray:
    """maxpool_forward without the argmax bookkeeping (inference fast path)."""
    x, squeeze = _as_batch(x)
    b, c, h, w = x.shape
    if p <= 0 or h % p or w % p:
        raise ShapeError(f"pool window {p} must divide spatial dims of {x.shape}")
    out = x.reshape(b, c, h // p, p, w // p, p).max(axis=(3, 5))
    return out[0] if squeeze else out


def maxpool_backward(mask: np.ndarray, grad_out: np.ndarray, p: int) -> np.ndarray:
    """Route upstream gradients back to the winning cell of each window."""
    grad_out, squeeze = _as_batch(grad_out)
    if mask.ndim == 3:
        mask = mask[None]
    b, c, oh, ow = grad_out.shape
    gwin = np.zeros((b, c, oh, ow, p * p), dtype=grad_out.dtype)
    np.put_along_axis(gwin, mask[..., None].astype(np.int64), grad_out[..., None], axis=-1)
    gx = (
        gwin.reshape(b, c, oh, ow, p, p)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(b, c, oh * p, ow * p)
    )
    return gx[0] if squeeze else gx


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(x, 0)."""
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Upstream gradient gated by the activation indicator.

    The subgradient at exactly 0 is taken as 0. `x` may be the pre- or
    post-activation values; the x > 0 mask is identical for both.
    """
    return grad_out * (x > 0)


def linear_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """W @ x + b for x of shape [n] or a batch [b, n]."""
    n_out, n_in = weights.shape
    if x.shape[-1] != n_in:
        raise ShapeError(
            f"linear stage expects inputs of length {n_in}, got shape {x.shape}"
        )
    return x @ weights.T + bias


def linear_backward(
    x: np.ndarray, weights: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of linear_forward: (grad_x, grad_weights, grad_bias)."""
    if x.ndim == 1:
        x = x[None]
        grad_out = grad_out[None]
        grad_x = grad_out @ weights
        return grad_x[0], grad_out.T @ x, grad_out.sum(axis=0)
    return grad_out @ weights, grad_out.T @ x, grad_out.sum(axis=0)
