"""Feature extraction, the persistent feature index, L1 ranking, and the 2D
PCA projection of the learned embedding.

Cross-domain ranking treats the 3D model as the retrieval unit: a query
matches a model through whichever of its two views is nearer, so the model
distance is the minimum over its view distances. Ties break by id so every
ranking is reproducible.
"""

from __future__ import annotations

import hashlib
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data.images import load_image
from .data.manifest import DatasetManifest
from .data.preprocess import preprocess
from .nn import EMBEDDING_DIM, net_forward
from .siamese import SiameseModel, model_tensors

log = logging.getLogger(__name__)

_EXTRACT_BATCH = 64


class IndexError_(RuntimeError):
    """Feature index file malformed or unusable."""


@dataclass(frozen=True)
class IndexEntry:
    id: str
    class_label: str
    domain: str
    model_id: str | None
    feature: np.ndarray  # [64] float32


@dataclass
class FeatureIndex:
    entries: list[IndexEntry]
    checkpoint_fingerprint: bytes  # 32 bytes binding the index to its model

    def __len__(self) -> int:
        return len(self.entries)

    def by_id(self) -> dict[str, IndexEntry]:
        return {e.id: e for e in self.entries}

    def domain_entries(self, domain: str) -> list[IndexEntry]:
        return [e for e in self.entries if e.domain == domain]


@dataclass
class RankedList:
    query_id: str
    hits: list[tuple[str, float]]  # (target_id, distance) ascending


def model_fingerprint(model: SiameseModel) -> bytes:
    """SHA-256 over the model's named tensors; used when no checkpoint file
    exists to hash."""
    h = hashlib.sha256()
    for name, arr in model_tensors(model).items():
        h.update(name.encode("utf-8"))
        h.update(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return h.digest()


def file_fingerprint(path: str | Path) -> bytes:
    return hashlib.sha256(Path(path).read_bytes()).digest()


def extract_features(
    model: SiameseModel,
    manifest: DatasetManifest,
    fingerprint: bytes | None = None,
) -> FeatureIndex:
    """Embed every manifest image through its domain's network.

    Unreadable or blank images are skipped with a warning; an index with zero
    usable entries is an error.
    """
    if fingerprint is None:
        fingerprint = model_fingerprint(model)
    usable: list[tuple[int, np.ndarray]] = []  # (entry position, input tensor)
    for pos, entry in enumerate(manifest.entries):
        try:
            usable.append((pos, preprocess(load_image(manifest.resolve_path(entry)))))
        except Exception as exc:  # unreadable/blank entries don't kill the run
            log.warning("skipping %s: %s", entry.id, exc)
    if not usable:
        raise ValueError("no usable entries; cannot build a feature index")

    features: dict[int, np.ndarray] = {}
    for domain in ("sketch", "view"):
        batch = [(pos, img) for pos, img in usable
                 if manifest.entries[pos].domain == domain]
        net = model.net_for(domain)
        for i in range(0, len(batch), _EXTRACT_BATCH):
            chunk = batch[i : i + _EXTRACT_BATCH]
            stacked = np.stack([img for _, img in chunk])
            out = net_forward(net, stacked)
            for (pos, _), feat in zip(chunk, out):
                features[pos] = feat.astype(np.float32)

    entries = [
        IndexEntry(
            id=manifest.entries[pos].id,
            class_label=manifest.entries[pos].class_label,
            domain=manifest.entries[pos].domain,
            model_id=manifest.entries[pos].model_id,
            feature=features[pos],
        )
        for pos, _ in usable
    ]
    return FeatureIndex(entries=entries, checkpoint_fingerprint=fingerprint)


def l1_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)).sum())


class ModelGallery:
    """View features grouped by model, prepared once for fast repeated queries."""

    def __init__(self, index: FeatureIndex):
        per_model: dict[str, list[IndexEntry]] = {}
        for e in index.domain_entries("view"):
            per_model.setdefault(e.model_id or "", []).append(e)
        kept: list[IndexEntry] = []
        for model_id, views in sorted(per_model.items()):
            if len(views) < 2 or not model_id:
                log.warning("model %r has %d view feature(s); excluded", model_id, len(views))
                continue
            kept.extend(views)
        if not kept:
            raise ValueError("gallery has no models with complete view features")
        self.features = np.stack([e.feature for e in kept]).astype(np.float32)
        self.model_ids = np.array([e.model_id for e in kept])
        unique = sorted(set(self.model_ids.tolist()))
        self._unique = np.array(unique)
        lookup = {m: i for i, m in enumerate(unique)}
        self._groups = np.array([lookup[m] for m in self.model_ids.tolist()])

    def rank(self, query_feature: np.ndarray, query_id: str = "query") -> RankedList:
        q = query_feature.astype(np.float32)
        dists = np.abs(self.features - q).sum(axis=1)
        model_min = np.full(len(self._unique), np.inf, dtype=np.float32)
        np.minimum.at(model_min, self._groups, dists)
        order = np.lexsort((self._unique, model_min))
        hits = [(str(self._unique[i]), float(model_min[i])) for i in order]
        return RankedList(query_id=query_id, hits=hits)


class DomainGallery:
    """Flat single-domain gallery for within-domain retrieval."""

    def __init__(self, index: FeatureIndex, domain: str):
        entries = index.domain_entries(domain)
        if not entries:
            raise ValueError(f"index has no {domain} entries")
        self.ids = np.array([e.id for e in entries])
        self.features = np.stack([e.feature for e in entries]).astype(np.float32)

    def rank(self, query_feature: np.ndarray, query_id: str = "query",
             exclude_id: str | None = None) -> RankedList:
        q = query_feature.astype(np.float32)
        dists = np.abs(self.features - q).sum(axis=1)
        order = np.lexsort((self.ids, dists))
        hits = [
            (str(self.ids[i]), float(dists[i]))
            for i in order
            if exclude_id is None or self.ids[i] != exclude_id
        ]
        return RankedList(query_id=query_id, hits=hits)


def rank_models(query_feature: np.ndarray, index: FeatureIndex,
                query_id: str = "query") -> RankedList:
    return ModelGallery(index).rank(query_feature, query_id)


def rank_within_domain(query_feature: np.ndarray, index: FeatureIndex, domain: str,
                       query_id: str = "query", exclude_id: str | None = None) -> RankedList:
    return DomainGallery(index, domain).rank(query_feature, query_id, exclude_id)


def pca_2d(index: FeatureIndex) -> list[tuple[str, float, float]]:
    """Project all features onto the top-2 principal directions.

    Sign convention: each component's largest-magnitude loading is positive,
    so the projection is deterministic. Needs at least 3 entries.
    """
    if len(index) < 3:
        raise ValueError(f"PCA projection needs >= 3 entries, got {len(index)}")
    x = np.stack([e.feature for e in index.entries]).astype(np.float64)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (len(index) - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    components = eigvecs[:, ::-1][:, :2].T  # rows = top-2 directions
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    coords = centered @ components.T
    return [
        (e.id, float(coords[i, 0]), float(coords[i, 1]))
        for i, e in enumerate(index.entries)
    ]


# -- index file format --------------------------------------------------------

INDEX_MAGIC = b"SBFI"
INDEX_VERSION = 1
_DOMAIN_BYTE = {"sketch": 0, "view": 1}
_BYTE_DOMAIN = {v: k for k, v in _DOMAIN_BYTE.items()}


def _pack_str(s: str) -> bytes:
    encoded = s.encode("utf-8")
    return struct.pack("<H", len(encoded)) + encoded


def save_index(path: str | Path, index: FeatureIndex) -> None:
    if len(index.checkpoint_fingerprint) != 32:
        raise IndexError_("checkpoint fingerprint must be 32 bytes")
    blob = bytearray()
    blob += INDEX_MAGIC
    blob += struct.pack("<HI", INDEX_VERSION, len(index.entries))
    for e in index.entries:
        blob += _pack_str(e.id)
        blob += _pack_str(e.class_label)
        blob += struct.pack("<B", _DOMAIN_BYTE[e.domain])
        blob += _pack_str(e.model_id or "")
        feat = np.ascontiguousarray(e.feature, dtype="<f4")
        if feat.shape != (EMBEDDING_DIM,):
            raise IndexError_(f"entry {e.id}: feature shape {feat.shape}")
        blob += feat.tobytes()
    blob += index.checkpoint_fingerprint
    Path(path).write_bytes(bytes(blob))


def load_index(path: str | Path) -> FeatureIndex:
    data = Path(path).read_bytes()
    if data[:4] != INDEX_MAGIC:
        raise IndexError_(f"{path}: bad magic {data[:4]!r}")
    version, count = struct.unpack_from("<HI", data, 4)
    if version != INDEX_VERSION:
        raise IndexError_(f"{path}: unsupported version {version}")
    offset = 10

    def read_str() -> str:
        nonlocal offset
        (n,) = struct.unpack_from("<H", data, offset)
        offset += 2
        s = data[offset : offset + n].decode("utf-8")
        offset += n
        return s

    entries: list[IndexEntry] = []
    for _ in range(count):
        entry_id = read_str()
        class_label = read_str()
        (domain_byte,) = struct.unpack_from("<B", data, offset)
        offset += 1
        model_id = read_str()
        feature = np.frombuffer(data, dtype="<f4", count=EMBEDDING_DIM, offset=offset)
        offset += 4 * EMBEDDING_DIM
        entries.append(
            IndexEntry(
                id=entry_id,
                class_label=class_label,
                domain=_BYTE_DOMAIN[domain_byte],
                model_id=model_id or None,
                feature=feature.astype(np.float32),
            )
        )
    fingerprint = data[offset : offset + 32]
    if len(fingerprint) != 32 or offset + 32 != len(data):
        raise IndexError_(f"{path}: truncated or oversized fingerprint trailer")
    return FeatureIndex(entries=entries, checkpoint_fingerprint=fingerprint)
