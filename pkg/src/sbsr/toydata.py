"""Procedural desk-scale dataset: five primitive shapes, two rendered views
each, and affine-jittered copies of those line renders standing in for hand
sketches. Everything is written through the real on-disk formats (OBJ, PGM,
JSON-lines manifests) so the full pipeline can run end to end on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data.augment import augment_sketch
from .data.images import save_pgm
from .data.manifest import ManifestEntry, save_manifest
from .render import PRIMITIVES, pick_viewpoints, render_lines
from .render.mesh import save_obj

TOY_CLASSES = ("cube", "icosphere", "cylinder", "cone", "torus")


@dataclass
class ToyDataset:
    root: Path
    obj_dir: Path
    train_manifest: Path  # training sketches + all views
    eval_manifest: Path  # held-out sketches + all views


def build_toy_dataset(
    root: str | Path,
    seed: int = 7,
    sketches_per_class: int = 40,
    train_per_class: int = 30,
) -> ToyDataset:
    root = Path(root)
    obj_dir = root / "objs"
    img_dir = root / "images"
    obj_dir.mkdir(parents=True, exist_ok=True)
    img_dir.mkdir(parents=True, exist_ok=True)

    pair = pick_viewpoints(seed)
    view_entries: list[ManifestEntry] = []
    train_sketches: list[ManifestEntry] = []
    eval_sketches: list[ManifestEntry] = []

    for class_idx, name in enumerate(TOY_CLASSES):
        mesh = PRIMITIVES[name]()
        save_obj(obj_dir / f"{name}.obj", mesh)
        renders = []
        for vi, viewpoint in enumerate((pair.v1, pair.v2), start=1):
            ink = render_lines(mesh, viewpoint)
            save_pgm(img_dir / f"{name}_v{vi}.pgm", ink)
            renders.append(ink)
            view_entries.append(
                ManifestEntry(
                    id=f"{name}_v{vi}",
                    class_label=name,
                    domain="view",
                    image_path=f"images/{name}_v{vi}.pgm",
                    model_id=name,
                )
            )
        for i in range(sketches_per_class):
            rng = np.random.default_rng(np.random.SeedSequence([seed, class_idx, i]))
            sketch = augment_sketch(renders[i % 2], rng)
            save_pgm(img_dir / f"{name}_s{i:02d}.pgm", sketch)
            entry = ManifestEntry(
                id=f"{name}_s{i:02d}",
                class_label=name,
                domain="sketch",
                image_path=f"images/{name}_s{i:02d}.pgm",
            )
            (train_sketches if i < train_per_class else eval_sketches).append(entry)

    train_path = root / "train.jsonl"
    eval_path = root / "eval.jsonl"
    save_manifest(train_path, train_sketches + view_entries)
    save_manifest(eval_path, eval_sketches + view_entries)
    return ToyDataset(
        root=root, obj_dir=obj_dir, train_manifest=train_path, eval_manifest=eval_path
    )
