"""Scikit-learn style wrappers around the training loop and the retrieval
galleries, so the embedding composes with the wider ecosystem
(get_params/set_params, clone, fit/transform/kneighbors).
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .data.manifest import DatasetManifest, load_manifest
from .data.pairs import ImageStore, batches_from_specs, epoch_rng, sample_pairs
from .data.preprocess import preprocess
from .nn import EMBEDDING_DIM, INPUT_SIZE, net_forward
from .retrieval import DomainGallery, FeatureIndex, ModelGallery
from .siamese import EpochStats, SiameseModel, new_model, train_epoch


def check_image_batch(X) -> np.ndarray:
    """Validate and stack network inputs.

    Accepts one [1,100,100] tensor, an [n,1,100,100] stack, or a sequence of
    [1,100,100] tensors; values must be finite and within [0, 1].
    """
    if isinstance(X, np.ndarray):
        batch = X[None] if X.ndim == 3 else X
    else:
        batch = np.stack(list(X))
    batch = np.asarray(batch, dtype=np.float32)
    if batch.ndim != 4 or batch.shape[1:] != (1, INPUT_SIZE, INPUT_SIZE):
        raise ValueError(
            f"expected inputs shaped [n,1,{INPUT_SIZE},{INPUT_SIZE}], got {batch.shape}"
        )
    if not np.isfinite(batch).all():
        raise ValueError("inputs contain NaN or Inf")
    if batch.min() < 0.0 or batch.max() > 1.0:
        raise ValueError("inputs must lie in [0, 1]")
    return batch


def prepare_inputs(images) -> np.ndarray:
    """Preprocess raw [h,w] ink images into a network input batch."""
    return np.stack([preprocess(img) for img in images])


class SiameseEmbedder(BaseEstimator, TransformerMixin):
    """Two coupled convolutional embedders trained on labelled image pairs.

    fit() consumes a training manifest (sketches + views of >= 2 classes) and
    runs the pair-sampling / contrastive-training loop; transform() embeds
    preprocessed images from either domain into the shared 64-d space.
    """

    def __init__(
        self,
        epochs: int = 20,
        learning_rate: float = 0.001,
        lr_decay: float = 0.9,
        lr_decay_every: int = 5,
        batch_size: int = 64,
        kp: int = 2,
        kn: int = 20,
        identical: bool = False,
        symmetric_cross_term: bool = False,
        seed: int = 0,
        verbose: bool = False,
    ):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.lr_decay = lr_decay
        self.lr_decay_every = lr_decay_every
        self.batch_size = batch_size
        self.kp = kp
        self.kn = kn
        self.identical = identical
        self.symmetric_cross_term = symmetric_cross_term
        self.seed = seed
        self.verbose = verbose

    def _epoch_lr(self, epoch: int) -> float:
        # epoch is 1-based; decay kicks in every lr_decay_every epochs
        return self.learning_rate * self.lr_decay ** ((epoch - 1) // self.lr_decay_every)

    def fit(
        self,
        X: DatasetManifest | str | Path,
        y=None,
        epoch_callback: Callable[[int, EpochStats, SiameseModel], None] | None = None,
        initial_model: SiameseModel | None = None,
        start_epoch: int = 0,
    ):
        """Train for self.epochs passes, resampling pairs every epoch.

        initial_model/start_epoch support resuming: epoch numbering (and the
        per-epoch sampling streams) continue from start_epoch.
        """
        manifest = X if isinstance(X, DatasetManifest) else load_manifest(X)
        self.model_ = initial_model or new_model(self.seed, identical=self.identical)
        self.history_ = []
        store = ImageStore(manifest)
        for epoch in range(start_epoch + 1, self.epochs + 1):
            rng = epoch_rng(self.seed, epoch)
            specs = sample_pairs(manifest, kp=self.kp, kn=self.kn, rng=rng)
            order = rng.permutation(len(specs))
            shuffled = [specs[i] for i in order]
            batches = batches_from_specs(store, shuffled, self.batch_size)
            stats = train_epoch(
                self.model_,
                batches,
                self._epoch_lr(epoch),
                symmetric_cross_term=self.symmetric_cross_term,
            )
            self.history_.append(stats)
            if self.verbose:
                print(f"epoch {epoch}: mean_loss={stats.mean_loss:.4f} pairs={stats.pairs}")
            if epoch_callback is not None:
                epoch_callback(epoch, stats, self.model_)
        return self

    def transform(self, X, domain: str = "sketch") -> np.ndarray:
        """Embed preprocessed [n,1,100,100] inputs; returns [n,64] float32."""
        if not hasattr(self, "model_"):
            raise NotFittedError("SiameseEmbedder is not fitted yet")
        batch = check_image_batch(X)
        return np.asarray(net_forward(self.model_.net_for(domain), batch), dtype=np.float32)


class EmbeddingRetriever(BaseEstimator):
    """Ranked L1 retrieval over a fitted FeatureIndex.

    mode "cross" ranks 3D models (min distance over each model's two views);
    "sketch"/"view" rank individual entries of that domain.
    """

    def __init__(self, mode: str = "cross"):
        self.mode = mode

    def fit(self, X: FeatureIndex, y=None):
        if self.mode == "cross":
            self.gallery_ = ModelGallery(X)
        elif self.mode in ("sketch", "view"):
            self.gallery_ = DomainGallery(X, self.mode)
        else:
            raise ValueError(f"mode must be cross|sketch|view, got {self.mode!r}")
        return self

    def _check_fitted(self):
        if not hasattr(self, "gallery_"):
            raise NotFittedError("EmbeddingRetriever is not fitted yet")

    def rank(self, feature: np.ndarray, query_id: str = "query",
             exclude_self: bool = False):
        self._check_fitted()
        if self.mode == "cross":
            return self.gallery_.rank(feature, query_id)
        return self.gallery_.rank(
            feature, query_id, exclude_id=query_id if exclude_self else None
        )

    def kneighbors(self, Q: np.ndarray, k: int | None = None):
        """Top-k (distances, ids) per query row."""
        self._check_fitted()
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float32))
        if Q.shape[1] != EMBEDDING_DIM:
            raise ValueError(f"queries must be [n,{EMBEDDING_DIM}], got {Q.shape}")
        dists, ids = [], []
        for row in Q:
            ranked = self.rank(row)
            hits = ranked.hits if k is None else ranked.hits[:k]
            dists.append([d for _, d in hits])
            ids.append([t for t, _ in hits])
        return np.asarray(dists), np.asarray(ids, dtype=object)

    def predict(self, Q: np.ndarray) -> np.ndarray:
        """Nearest gallery item (or model) per query row."""
        _, ids = self.kneighbors(Q, k=1)
        return ids[:, 0]
