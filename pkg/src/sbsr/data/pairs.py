"""Per-epoch pair sampling and batch assembly.

For every training sketch the sampler draws kp similar quadruples (all four
members from the sketch's class) and kn dissimilar ones (the second sketch and
second view from one uniformly chosen other class, so a single label stays
consistent across all loss terms). A fresh pairing is drawn each epoch by
mixing the epoch index into the seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ..siamese import PairBatch
from .images import load_image
from .manifest import DatasetManifest, ManifestEntry
from .preprocess import preprocess

log = logging.getLogger(__name__)


class PairSamplingError(ValueError):
    pass


@dataclass(frozen=True)
class PairSpec:
    """Ids of one training quadruple plus its label (0 similar, 1 dissimilar)."""

    s1: str
    s2: str
    v1: str
    v2: str
    y: int


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """Deterministic per-epoch stream: same seed+epoch, same draws."""
    return np.random.default_rng(np.random.SeedSequence([seed, epoch]))


def _pick(rng: np.random.Generator, items: Sequence[ManifestEntry]) -> ManifestEntry:
    return items[int(rng.integers(len(items)))]


def sample_pairs(
    manifest: DatasetManifest,
    kp: int = 2,
    kn: int = 20,
    rng: np.random.Generator | None = None,
) -> list[PairSpec]:
    """Draw kp similar + kn dissimilar PairSpecs per usable sketch."""
    if rng is None:
        rng = np.random.default_rng(0)
    sketches_by_class: dict[str, list[ManifestEntry]] = {}
    views_by_class: dict[str, list[ManifestEntry]] = {}
    for e in manifest.entries:
        bucket = sketches_by_class if e.domain == "sketch" else views_by_class
        bucket.setdefault(e.class_label, []).append(e)

    # Classes usable on the "other" side of a dissimilar pair.
    full_classes = sorted(
        c for c in sketches_by_class if views_by_class.get(c)
    )
    pairs: list[PairSpec] = []
    for s1 in (e for e in manifest.entries if e.domain == "sketch"):
        cls = s1.class_label
        own_views = views_by_class.get(cls, [])
        if not own_views:
            log.warning("sketch %s skipped: class %r has no views", s1.id, cls)
            continue
        own_sketches = sketches_by_class[cls]
        for _ in range(kp):
            pairs.append(
                PairSpec(
                    s1=s1.id,
                    s2=_pick(rng, own_sketches).id,
                    v1=_pick(rng, own_views).id,
                    v2=_pick(rng, own_views).id,
                    y=0,
                )
            )
        if kn > 0:
            others = [c for c in full_classes if c != cls]
            if not others:
                raise PairSamplingError(
                    f"no class other than {cls!r} has both sketches and views; "
                    "dissimilar pairs are impossible"
                )
            for _ in range(kn):
                other = others[int(rng.integers(len(others)))]
                pairs.append(
                    PairSpec(
                        s1=s1.id,
                        s2=_pick(rng, sketches_by_class[other]).id,
                        v1=_pick(rng, own_views).id,
                        v2=_pick(rng, views_by_class[other]).id,
                        y=1,
                    )
                )
    _check_labels(manifest, pairs)
    return pairs


def _check_labels(manifest: DatasetManifest, pairs: list[PairSpec]) -> None:
    for p in pairs:
        c = {name: manifest.by_id(i).class_label for name, i in
             (("s1", p.s1), ("s2", p.s2), ("v1", p.v1), ("v2", p.v2))}
        if p.y == 0:
            ok = len(set(c.values())) == 1
        else:
            ok = c["s1"] == c["v1"] and c["s2"] == c["v2"] and c["s1"] != c["s2"]
        if not ok:
            raise PairSamplingError(f"pair {p} violates its label invariant: {c}")


class ImageStore:
    """Loads and preprocesses manifest images once, then serves cached
    [1,100,100] tensors by entry id."""

    def __init__(self, manifest: DatasetManifest):
        self.manifest = manifest
        self._cache: dict[str, np.ndarray] = {}

    def tensor(self, entry_id: str) -> np.ndarray:
        cached = self._cache.get(entry_id)
        if cached is None:
            entry = self.manifest.by_id(entry_id)
            cached = preprocess(load_image(self.manifest.resolve_path(entry)))
            self._cache[entry_id] = cached
        return cached


def batches_from_specs(
    store: ImageStore, specs: Sequence[PairSpec], batch_size: int
) -> Iterator[PairBatch]:
    """Materialize PairSpecs into image-tensor batches of at most batch_size."""
    for start in range(0, len(specs), batch_size):
        chunk = specs[start : start + batch_size]
        yield PairBatch(
            s1=np.stack([store.tensor(p.s1) for p in chunk]),
            s2=np.stack([store.tensor(p.s2) for p in chunk]),
            v1=np.stack([store.tensor(p.v1) for p in chunk]),
            v2=np.stack([store.tensor(p.v2) for p in chunk]),
            y=np.array([p.y for p in chunk], dtype=np.float32),
        )
