"""Dataset manifests: one JSON object per line, one line per image entry.

Entry fields: id, class_label, domain ("sketch" | "view"), image_path, and
model_id for view entries. Relative image paths resolve against the manifest
file's directory. Every model must contribute exactly two views (the two
dataset-wide viewpoints).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

DOMAINS = ("sketch", "view")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    class_label: str
    domain: str
    image_path: str
    model_id: str | None = None


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    split: str = "train"
    base_dir: Path = field(default_factory=Path)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def by_id(self, entry_id: str) -> ManifestEntry:
        return self._index()[entry_id]

    def _index(self) -> dict[str, ManifestEntry]:
        if not hasattr(self, "_by_id"):
            self._by_id = {e.id: e for e in self.entries}
        return self._by_id

    def resolve_path(self, entry: ManifestEntry) -> Path:
        p = Path(entry.image_path)
        return p if p.is_absolute() else self.base_dir / p

    def sketches(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.domain == "sketch"]

    def views(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.domain == "view"]

    def validate(self) -> None:
        seen: dict[str, int] = {}
        views_per_model: dict[str, int] = {}
        for lineno, e in enumerate(self.entries, start=1):
            if e.id in seen:
                raise ManifestError(
                    f"duplicate id {e.id!r} on line {lineno} (first on line {seen[e.id]})"
                )
            seen[e.id] = lineno
            if e.domain not in DOMAINS:
                raise ManifestError(f"line {lineno}: unknown domain {e.domain!r}")
            if e.domain == "view":
                if not e.model_id:
                    raise ManifestError(f"line {lineno}: view entry without model_id")
                views_per_model[e.model_id] = views_per_model.get(e.model_id, 0) + 1
        for model_id, n in views_per_model.items():
            if n != 2:
                raise ManifestError(f"model {model_id!r} has {n} view entries, expected 2")


_REQUIRED = ("id", "class_label", "domain", "image_path")


def load_manifest(path: str | Path, split: str = "train") -> DatasetManifest:
    """Parse and validate a JSON-lines manifest; errors carry line numbers."""
    path = Path(path)
    entries: list[ManifestEntry] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}: line {lineno}: invalid JSON ({exc})") from None
            missing = [k for k in _REQUIRED if k not in rec]
            if missing:
                raise ManifestError(f"{path}: line {lineno}: missing field(s) {missing}")
            entries.append(
                ManifestEntry(
                    id=str(rec["id"]),
                    class_label=str(rec["class_label"]),
                    domain=str(rec["domain"]),
                    image_path=str(rec["image_path"]),
                    model_id=None if rec.get("model_id") is None else str(rec["model_id"]),
                )
            )
    manifest = DatasetManifest(entries=entries, split=split, base_dir=path.parent)
    try:
        manifest.validate()
    except ManifestError as exc:
        raise ManifestError(f"{path}: {exc}") from None
    return manifest


def save_manifest(path: str | Path, entries: list[ManifestEntry]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            rec = {
                "id": e.id,
                "class_label": e.class_label,
                "domain": e.domain,
                "image_path": e.image_path,
            }
            if e.model_id is not None:
                rec["model_id"] = e.model_id
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
