"""sbsr: sketch-based 3D shape retrieval.

Two coupled convolutional networks learn a shared 64-d embedding for
hand-drawn sketches and line-rendered 3D model views; retrieval is a ranked
L1 scan over that embedding, scored with the standard IR metric suite.

Public surface: the sklearn-style estimators (SiameseEmbedder,
EmbeddingRetriever), the functional core packages (nn, data, render,
retrieval, metrics, siamese), the CLI (sbsr.cli) and the HTTP service
(sbsr.service).
"""

from .estimators import EmbeddingRetriever, SiameseEmbedder
from .siamese import SiameseModel, new_model, load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "SiameseEmbedder",
    "EmbeddingRetriever",
    "SiameseModel",
    "new_model",
    "load_model",
    "save_model",
    "__version__",
]
