"""Pairwise metric-learning losses and the two-network training loop.

Two embedding networks are trained jointly, one per input domain (hand-drawn
sketches, rendered views). Every training unit is a labelled quadruple
(s1, s2, v1, v2, y): label 0 means all four come from one class, label 1 means
(s2, v2) come from a different class than (s1, v1). The loss couples the
domains with three pair terms: sketch-sketch, view-view, and sketch-view.

Label polarity: y == 0 is the SIMILAR case. The quadratic term attracts
matched pairs, the exponential term (largest at distance zero) repels
mismatched ones; that structure only makes sense with this polarity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .nn import (
    NetworkParams,
    init_network,
    net_backward,
    net_forward,
    sgd_step,
)
from .nn.checkpoint import load_checkpoint, save_checkpoint, CheckpointError


@dataclass(frozen=True)
class LossConstants:
    """Fixed weights of the pair loss.

    similar_scale multiplies the squared distance of matched pairs (1 / 0.2);
    dissimilar_scale and dissimilar_decay shape the exponential penalty
    exp(decay * distance) on mismatched pairs (10 and -2.77 / 10).
    """

    similar_scale: float = 5.0
    dissimilar_scale: float = 10.0
    dissimilar_decay: float = -0.277


LOSS_CONSTANTS = LossConstants()

# Training-length defaults per dataset profile.
PROFILE_EPOCHS = {"psb": 50, "shrec13": 20}


def default_epochs(profile: str) -> int:
    try:
        return PROFILE_EPOCHS[profile]
    except KeyError:
        raise ValueError(
            f"unknown dataset profile {profile!r}; expected one of {sorted(PROFILE_EPOCHS)}"
        ) from None


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the index of the offending pair."""

    def __init__(self, pair_index: int, epoch: int | None = None):
        self.pair_index = pair_index
        self.epoch = epoch
        where = f"pair {pair_index}" if epoch is None else f"epoch {epoch}, pair {pair_index}"
        super().__init__(f"non-finite loss at {where}")


def contrastive_loss(
    feat_a: np.ndarray,
    feat_b: np.ndarray,
    y: np.ndarray | int,
    constants: LossConstants = LOSS_CONSTANTS,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pair loss and its exact gradients w.r.t. both feature vectors.

    feat_a/feat_b: [64] or a batch [b, 64]; y: 0/1 scalar or [b].
    Distance is the L1 norm of the feature difference; the |.| subgradient at
    exactly 0 is taken as 0. Returns (loss, grad_a, grad_b) with loss a scalar
    for vector inputs and [b] for batches.
    """
    squeeze = feat_a.ndim == 1
    fa = feat_a[None] if squeeze else feat_a
    fb = feat_b[None] if squeeze else feat_b
    yv = np.atleast_1d(np.asarray(y, dtype=fa.dtype))
    if yv.shape[0] == 1 and fa.shape[0] > 1:
        yv = np.full(fa.shape[0], yv[0], dtype=fa.dtype)

    diff = fa - fb
    dist = np.abs(diff).sum(axis=1)
    sim = constants.similar_scale * dist * dist
    decayed = np.exp(constants.dissimilar_decay * dist)
    dis = constants.dissimilar_scale * decayed
    loss = (1.0 - yv) * sim + yv * dis

    # d(loss)/d(dist), then chain through d(dist)/d(feat) = sign(diff)
    dloss_ddist = (1.0 - yv) * (2.0 * constants.similar_scale * dist) + yv * (
        constants.dissimilar_scale * constants.dissimilar_decay * decayed
    )
    grad_a = dloss_ddist[:, None] * np.sign(diff)
    grad_b = -grad_a
    if squeeze:
        return loss[0], grad_a[0], grad_b[0]
    return loss, grad_a, grad_b


def combined_loss(
    fs1: np.ndarray,
    fs2: np.ndarray,
    fv1: np.ndarray,
    fv2: np.ndarray,
    y: np.ndarray | int,
    symmetric_cross_term: bool = False,
    constants: LossConstants = LOSS_CONSTANTS,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Three-term loss: sketch pair + view pair + one cross-domain pair.

    Gradients accumulate across terms (fs1 receives contributions from the
    sketch term and the cross term). symmetric_cross_term adds the mirrored
    (s2, v2) cross pair as a fourth term; it is off by default.
    Returns (loss, g_fs1, g_fs2, g_fv1, g_fv2).
    """
    l_s, gs1, gs2 = contrastive_loss(fs1, fs2, y, constants)
    l_v, gv1, gv2 = contrastive_loss(fv1, fv2, y, constants)
    l_x, gxs1, gxv1 = contrastive_loss(fs1, fv1, y, constants)
    loss = l_s + l_v + l_x
    gs1 = gs1 + gxs1
    gv1 = gv1 + gxv1
    if symmetric_cross_term:
        l_x2, gxs2, gxv2 = contrastive_loss(fs2, fv2, y, constants)
        loss = loss + l_x2
        gs2 = gs2 + gxs2
        gv2 = gv2 + gxv2
    return loss, gs1, gs2, gv1, gv2


@dataclass
class SiameseModel:
    """The two domain networks. In identical mode both handles alias one
    parameter set (the shared-network ablation)."""

    sketch_net: NetworkParams
    view_net: NetworkParams

    @property
    def identical(self) -> bool:
        return self.sketch_net is self.view_net

    def net_for(self, domain: str) -> NetworkParams:
        if domain == "sketch":
            return self.sketch_net
        if domain == "view":
            return self.view_net
        raise ValueError(f"unknown domain {domain!r}")


def new_model(seed: int, identical: bool = False, dtype=np.float32) -> SiameseModel:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x51A]))
    sketch = init_network(rng, dtype=dtype)
    view = sketch if identical else init_network(rng, dtype=dtype)
    return SiameseModel(sketch_net=sketch, view_net=view)


@dataclass
class PairBatch:
    """A stack of training quadruples: image tensors [b,1,100,100] per slot
    and binary labels y[b] (0 similar, 1 dissimilar)."""

    s1: np.ndarray
    s2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return self.s1.shape[0]


@dataclass
class EpochStats:
    pairs: int
    similar: int
    dissimilar: int
    mean_loss: float


class _UniqueBatch:
    """Forward/backward over the distinct images of an input stack.

    Pairings repeat images heavily (a handful of views serves every pair), so
    each distinct image is pushed through the network once; backprop sums the
    upstream gradients of its slots first, which is exact because the network
    maps images independently and gradients are linear in the upstream.
    """

    def __init__(self, stacked: np.ndarray):
        first_pos: dict[bytes, int] = {}
        inverse = np.empty(stacked.shape[0], dtype=np.int64)
        keep: list[int] = []
        for i in range(stacked.shape[0]):
            key = stacked[i].tobytes()
            at = first_pos.get(key)
            if at is None:
                at = len(keep)
                first_pos[key] = at
                keep.append(i)
            inverse[i] = at
        self.unique = stacked[keep]
        self.inverse = inverse

    def forward(self, net: NetworkParams):
        feats, cache = net_forward(net, self.unique, keep_cache=True)
        self._cache = cache
        return feats[self.inverse]

    def backward(self, net: NetworkParams, upstream_slots: np.ndarray):
        upstream = np.zeros((self.unique.shape[0], upstream_slots.shape[1]),
                            dtype=upstream_slots.dtype)
        np.add.at(upstream, self.inverse, upstream_slots)
        return net_backward(net, self._cache, upstream)


def train_epoch(
    model: SiameseModel,
    batch_source: Iterable[PairBatch],
    learning_rate: float,
    symmetric_cross_term: bool = False,
) -> EpochStats:
    """One pass over a fresh pairing: forward, loss, backprop, SGD per batch.

    Both members of a pair flow through one network, so each network's
    parameter gradient is the average of its two branch gradients; the
    minibatch gradient is additionally averaged over pairs before the update.
    An empty source leaves the model untouched and reports zero pairs.
    """
    total_loss = 0.0
    pairs = 0
    similar = 0
    for batch in batch_source:
        b = len(batch)
        if b == 0:
            continue
        sketches = _UniqueBatch(np.concatenate([batch.s1, batch.s2], axis=0))
        views = _UniqueBatch(np.concatenate([batch.v1, batch.v2], axis=0))
        fs = sketches.forward(model.sketch_net)
        fv = views.forward(model.view_net)
        losses, gs1, gs2, gv1, gv2 = combined_loss(
            fs[:b], fs[b:], fv[:b], fv[b:], batch.y,
            symmetric_cross_term=symmetric_cross_term,
        )
        finite = np.isfinite(losses)
        if not finite.all():
            raise TrainingDivergedError(pairs + int(np.argmin(finite)))

        # 1/2 averages the two branches of each network; 1/b averages the batch.
        scale = 1.0 / (2.0 * b)
        g_sketch = sketches.backward(
            model.sketch_net, np.concatenate([gs1, gs2], axis=0) * scale
        )
        g_view = views.backward(
            model.view_net, np.concatenate([gv1, gv2], axis=0) * scale
        )
        if model.identical:
            sgd_step(model.sketch_net, g_sketch.add(g_view), learning_rate)
        else:
            sgd_step(model.sketch_net, g_sketch, learning_rate)
            sgd_step(model.view_net, g_view, learning_rate)

        total_loss += float(losses.sum())
        pairs += b
        similar += int((batch.y == 0).sum())
    mean = total_loss / pairs if pairs else 0.0
    return EpochStats(pairs=pairs, similar=similar, dissimilar=pairs - similar, mean_loss=mean)


# -- checkpoint plumbing ------------------------------------------------------

_META_IDENTICAL = "_meta.identical"
_META_EPOCH = "_meta.epoch"


def model_tensors(model: SiameseModel, epoch: int = 0) -> dict[str, np.ndarray]:
    """Flatten a model into the named-tensor checkpoint layout."""
    out: dict[str, np.ndarray] = {
        _META_IDENTICAL: np.asarray([1.0 if model.identical else 0.0], dtype=np.float32),
        _META_EPOCH: np.asarray([float(epoch)], dtype=np.float32),
    }
    if model.identical:
        for name, arr in model.sketch_net.tensors().items():
            out[f"shared.{name}"] = arr
    else:
        for name, arr in model.sketch_net.tensors().items():
            out[f"sketch.{name}"] = arr
        for name, arr in model.view_net.tensors().items():
            out[f"view.{name}"] = arr
    return out


def _net_from_tensors(tensors: dict[str, np.ndarray], prefix: str) -> NetworkParams:
    from .nn.network import ConvStage, LinearStage, CONV_SPECS

    convs = []
    for i, (out_maps, in_maps, k, pool) in enumerate(CONV_SPECS, start=1):
        kernels = tensors[f"{prefix}.conv{i}.kernels"]
        bias = tensors[f"{prefix}.conv{i}.bias"]
        if kernels.shape != (out_maps, in_maps, k, k) or bias.shape != (out_maps,):
            raise CheckpointError(
                f"{prefix}.conv{i} has shape {kernels.shape}/{bias.shape}, "
                f"expected {(out_maps, in_maps, k, k)}/({out_maps},)"
            )
        convs.append(ConvStage(kernels=kernels, bias=bias, pool=pool))
    weights = tensors[f"{prefix}.linear.weights"]
    bias = tensors[f"{prefix}.linear.bias"]
    return NetworkParams(convs=convs, linear=LinearStage(weights=weights, bias=bias))


def save_model(path, model: SiameseModel, epoch: int = 0) -> None:
    save_checkpoint(path, model_tensors(model, epoch=epoch))


def load_model(path) -> tuple[SiameseModel, int]:
    """Read a model checkpoint; returns (model, last_trained_epoch)."""
    tensors = load_checkpoint(path)
    try:
        identical = bool(tensors[_META_IDENTICAL][0])
        epoch = int(tensors[_META_EPOCH][0])
        if identical:
            net = _net_from_tensors(tensors, "shared")
            model = SiameseModel(sketch_net=net, view_net=net)
        else:
            model = SiameseModel(
                sketch_net=_net_from_tensors(tensors, "sketch"),
                view_net=_net_from_tensors(tensors, "view"),
            )
    except KeyError as exc:
        raise CheckpointError(f"checkpoint missing tensor {exc}") from None
    return model, epoch
