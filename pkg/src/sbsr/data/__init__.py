"""Dataset plumbing: manifests, grayscale image I/O, the 100x100 input
preprocessing, sketch augmentation, and the per-epoch pair sampler."""

from .images import (
    ImageFormatError,
    BlankImageError,
    load_image,
    save_pgm,
    ink_to_png_bytes,
    png_bytes_to_ink,
    affine_warp,
)
from .manifest import ManifestEntry, DatasetManifest, ManifestError, load_manifest, save_manifest
from .preprocess import preprocess
from .augment import augment_sketch, materialize_augmentations
from .pairs import (
    PairSpec,
    PairSamplingError,
    sample_pairs,
    epoch_rng,
    ImageStore,
    batches_from_specs,
)

__all__ = [
    "ImageFormatError",
    "BlankImageError",
    "load_image",
    "save_pgm",
    "ink_to_png_bytes",
    "png_bytes_to_ink",
    "affine_warp",
    "ManifestEntry",
    "DatasetManifest",
    "ManifestError",
    "load_manifest",
    "save_manifest",
    "preprocess",
    "augment_sketch",
    "materialize_augmentations",
    "PairSpec",
    "PairSamplingError",
    "sample_pairs",
    "epoch_rng",
    "ImageStore",
    "batches_from_specs",
]
