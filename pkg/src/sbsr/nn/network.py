"""The fixed four-stage embedding network.

Architecture (valid convolutions, stride 1, non-overlapping pooling):

    input [1,100,100]
      -> conv 13x13 (32 maps) -> relu -> pool 4   => [32,22,22]
      -> conv  7x7  (64 maps) -> relu -> pool 2   => [64,8,8]
      -> conv  3x3 (256 maps) -> relu -> pool 2   => [256,3,3]
      -> flatten (2304) -> linear                 => [64]

The kernel sizes are the unique stride-1/valid solution that produces these
stage map sizes for a 100x100 input, given the pool windows. Backprop is
hand-wired for exactly this composition; there is no graph engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import (
    ShapeError,
    conv2d_forward,
    conv2d_backward,
    maxpool_forward,
    maxpool_nomask,
    maxpool_backward,
    relu,
    relu_backward,
    linear_forward,
    linear_backward,
)

INPUT_SIZE = 100
EMBEDDING_DIM = 64
FLAT_FEATURES = 2304  # 256 * 3 * 3

# (out_maps, in_maps, kernel, pool) per conv stage, and the shape each stage
# must produce after pooling. Deviations are wiring bugs and fail hard.
CONV_SPECS = ((32, 1, 13, 4), (64, 32, 7, 2), (256, 64, 3, 2))
STAGE_SHAPES = ((32, 22, 22), (64, 8, 8), (256, 3, 3))


class NonFiniteGradientError(RuntimeError):
    """A gradient contains NaN or Inf; applying it would poison the model."""


@dataclass
class ConvStage:
    kernels: np.ndarray  # [out, in, k, k]
    bias: np.ndarray  # [out]
    pool: int


@dataclass
class LinearStage:
    weights: np.ndarray  # [EMBEDDING_DIM, FLAT_FEATURES]
    bias: np.ndarray  # [EMBEDDING_DIM]


@dataclass
class NetworkParams:
    """All learnable parameters of one domain network."""

    convs: list[ConvStage]
    linear: LinearStage

    def tensors(self) -> dict[str, np.ndarray]:
        """Named views of every parameter array, in a fixed order."""
        out: dict[str, np.ndarray] = {}
        for i, stage in enumerate(self.convs, start=1):
            out[f"conv{i}.kernels"] = stage.kernels
            out[f"conv{i}.bias"] = stage.bias
        out["linear.weights"] = self.linear.weights
        out["linear.bias"] = self.linear.bias
        return out

    def astype(self, dtype) -> "NetworkParams":
        return NetworkParams(
            convs=[
                ConvStage(s.kernels.astype(dtype), s.bias.astype(dtype), s.pool)
                for s in self.convs
            ],
            linear=LinearStage(
                self.linear.weights.astype(dtype), self.linear.bias.astype(dtype)
            ),
        )


@dataclass
class ParamGrads:
    """Gradients mirroring NetworkParams, plus the gradient w.r.t. the input."""

    conv_kernels: list[np.ndarray]
    conv_biases: list[np.ndarray]
    linear_weights: np.ndarray
    linear_bias: np.ndarray
    input: np.ndarray | None = None

    def arrays(self) -> list[np.ndarray]:
        """Gradient arrays in the same order as NetworkParams.tensors()."""
        out: list[np.ndarray] = []
        for kernels, bias in zip(self.conv_kernels, self.conv_biases):
            out += [kernels, bias]
        out += [self.linear_weights, self.linear_bias]
        return out

    def scaled(self, factor: float) -> "ParamGrads":
        return ParamGrads(
            conv_kernels=[g * factor for g in self.conv_kernels],
            conv_biases=[g * factor for g in self.conv_biases],
            linear_weights=self.linear_weights * factor,
            linear_bias=self.linear_bias * factor,
            input=None if self.input is None else self.input * factor,
        )

    def add(self, other: "ParamGrads") -> "ParamGrads":
        for mine, theirs in zip(self.arrays(), other.arrays()):
            mine += theirs
        return self


@dataclass
class ForwardCache:
    """Activations and pooling routes from one forward pass, consumed by
    net_backward. Valid only for the parameters it was produced with."""

    images: np.ndarray
    conv_inputs: list[np.ndarray] = field(default_factory=list)
    activations: list[np.ndarray] = field(default_factory=list)  # pooled, pre-relu
    pool_masks: list[np.ndarray] = field(default_factory=list)
    flat: np.ndarray | None = None


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def init_network(rng: np.random.Generator, dtype=np.float32) -> NetworkParams:
    """Scaled-uniform weight init (zero biases) for the fixed architecture."""
    convs = []
    for out_maps, in_maps, k, pool in CONV_SPECS:
        fan_in = in_maps * k * k
        fan_out = out_maps * k * k
        convs.append(
            ConvStage(
                kernels=_glorot(rng, (out_maps, in_maps, k, k), fan_in, fan_out, dtype),
                bias=np.zeros(out_maps, dtype=dtype),
                pool=pool,
            )
        )
    linear = LinearStage(
        weights=_glorot(
            rng, (EMBEDDING_DIM, FLAT_FEATURES), FLAT_FEATURES, EMBEDDING_DIM, dtype
        ),
        bias=np.zeros(EMBEDDING_DIM, dtype=dtype),
    )
    return NetworkParams(convs=convs, linear=linear)


def net_forward(
    params: NetworkParams, images: np.ndarray, keep_cache: bool = False
) -> np.ndarray | tuple[np.ndarray, ForwardCache]:
    """Embed a [b,1,100,100] batch (or one [1,100,100] image) to 64-d features.

    With keep_cache=True also returns the activations needed by net_backward.
    """
    squeeze = images.ndim == 3
    x = images[None] if squeeze else images
    if x.ndim != 4 or x.shape[1:] != (1, INPUT_SIZE, INPUT_SIZE):
        raise ShapeError(
            f"network input must be [b,1,{INPUT_SIZE},{INPUT_SIZE}], got {images.shape}"
        )
    cache = ForwardCache(images=x)
    for stage, expect in zip(params.convs, STAGE_SHAPES):
        cache.conv_inputs.append(x)
        z = conv2d_forward(x, stage.kernels, stage.bias)
        # max pooling commutes with the rectifier (both monotone), so pooling
        # first touches far less data; values and gradients are identical to
        # the conv -> relu -> pool order.
        if keep_cache:
            pooled, mask = maxpool_forward(z, stage.pool)
            cache.activations.append(pooled)
            cache.pool_masks.append(mask)
        else:
            pooled = maxpool_nomask(z, stage.pool)
        x = relu(pooled)
        if x.shape[1:] != expect:
            raise ShapeError(
                f"architecture violation: stage produced {x.shape[1:]}, expected {expect}"
            )
    flat = x.reshape(x.shape[0], FLAT_FEATURES)
    cache.flat = flat
    features = linear_forward(flat, params.linear.weights, params.linear.bias)
    if squeeze:
        features = features[0]
    if keep_cache:
        return features, cache
    return features


def net_backward(
    params: NetworkParams,
    cache: ForwardCache,
    upstream: np.ndarray,
    need_input_grad: bool = False,
) -> ParamGrads:
    """Exact gradients of every parameter given d(loss)/d(features).

    `cache` must come from a net_forward(..., keep_cache=True) with the same
    parameters; upstream is [b,64] (or [64] for a single cached image).
    """
    if cache is None or cache.flat is None:
        raise ValueError("net_backward requires the cache of a matching forward pass")
    if upstream.ndim == 1:
        upstream = upstream[None]
    b = cache.images.shape[0]
    if upstream.shape != (b, EMBEDDING_DIM):
        raise ShapeError(
            f"upstream gradient must be [{b},{EMBEDDING_DIM}], got {upstream.shape}"
        )
    upstream = upstream.astype(cache.flat.dtype, copy=False)

    g_flat, g_lw, g_lb = linear_backward(cache.flat, params.linear.weights, upstream)
    g = g_flat.reshape((b,) + STAGE_SHAPES[-1])

    conv_k: list[np.ndarray] = []
    conv_b: list[np.ndarray] = []
    g_input = None
    for i in reversed(range(len(params.convs))):
        stage = params.convs[i]
        # mirror of the fused pool-then-rectifier forward order
        g = relu_backward(cache.activations[i], g)
        g = maxpool_backward(cache.pool_masks[i], g, stage.pool)
        first = i == 0
        g, gk, gb = conv2d_backward(
            cache.conv_inputs[i],
            stage.kernels,
            g,
            need_input_grad=(not first) or need_input_grad,
        )
        conv_k.append(gk)
        conv_b.append(gb)
        if first:
            g_input = g
    conv_k.reverse()
    conv_b.reverse()
    return ParamGrads(
        conv_kernels=conv_k,
        conv_biases=conv_b,
        linear_weights=g_lw,
        linear_bias=g_lb,
        input=g_input,
    )


def sgd_step(params: NetworkParams, grads: ParamGrads, learning_rate: float) -> NetworkParams:
    """In-place p <- p - lr * g over every parameter; returns params.

    Non-finite gradients abort (NonFiniteGradientError) before any update is
    applied, naming the offending tensor.
    """
    if learning_rate <= 0:
        raise ValueError(f"learning_rate must be positive, got {learning_rate}")
    names = list(params.tensors())
    gradient_arrays = grads.arrays()
    for name, g in zip(names, gradient_arrays):
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(f"non-finite gradient in {name}")
    for p, g in zip(params.tensors().values(), gradient_arrays):
        p -= (learning_rate * g).astype(p.dtype, copy=False)
    return params
