"""Operator command line: render / train / extract / retrieve / eval / serve,
plus a generator for the procedural toy dataset.

Exit codes: 0 ok, 2 missing or empty input, 3 training diverged, 4 bad query
image, 5 nothing evaluable, 6 cannot bind the service port.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import socket
import sys
from dataclasses import dataclass
from pathlib import Path


from .data.images import BlankImageError, load_image, save_pgm
from .data.manifest import ManifestEntry, load_manifest, save_manifest
from .data.preprocess import preprocess
from .estimators import SiameseEmbedder
from .metrics import UnevaluableError, evaluate_all, judge
from .nn import net_forward
from .render import pick_viewpoints, render_lines
from .render.mesh import MeshError, load_obj
from .retrieval import (
    DomainGallery,
    ModelGallery,
    extract_features,
    file_fingerprint,
    load_index,
    save_index,
)
from .siamese import TrainingDivergedError, default_epochs, load_model, save_model
from .toydata import build_toy_dataset

log = logging.getLogger("sbsr")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIVERGED = 3
EXIT_BAD_QUERY = 4
EXIT_UNEVALUABLE = 5
EXIT_BIND = 6


@dataclass
class RunConfig:
    """Resolved training configuration (profile defaults applied)."""

    profile: str
    epochs: int
    learning_rate: float
    lr_decay: float
    lr_decay_every: int
    batch_size: int
    kp: int
    kn: int
    seed: int
    identical: bool
    symmetric_cross_term: bool
    manifest: Path
    checkpoint: Path
    save_every: int
    resume: Path | None

    def validate(self) -> None:
        for name in ("learning_rate", "lr_decay", "lr_decay_every", "batch_size", "kp"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        # epochs 0 is the degenerate "write the initial checkpoint" run
        if self.epochs < 0 or self.kn < 0:
            raise ValueError("epochs and kn must be >= 0")


def cmd_toy(args) -> int:
    ds = build_toy_dataset(args.out, seed=args.seed, sketches_per_class=args.sketches_per_class)
    print(json.dumps({
        "root": str(ds.root),
        "train_manifest": str(ds.train_manifest),
        "eval_manifest": str(ds.eval_manifest),
    }))
    return EXIT_OK


def cmd_render(args) -> int:
    obj_dir = Path(args.obj_dir)
    out_dir = Path(args.out_dir)
    obj_files = sorted(obj_dir.rglob("*.obj"))
    if not obj_files:
        log.error("no .obj files under %s", obj_dir)
        return EXIT_INPUT
    out_dir.mkdir(parents=True, exist_ok=True)
    pair = pick_viewpoints(args.seed)
    entries: list[ManifestEntry] = []
    rendered = 0
    for path in obj_files:
        model_id = path.stem
        class_label = path.parent.name if path.parent != obj_dir else path.stem
        try:
            mesh = load_obj(path)
        except (MeshError, OSError, ValueError) as exc:
            log.error("skipping %s: %s", path, exc)
            continue
        for vi, viewpoint in enumerate((pair.v1, pair.v2), start=1):
            ink = render_lines(mesh, viewpoint)
            name = f"{model_id}_v{vi}.pgm"
            save_pgm(out_dir / name, ink)
            entries.append(
                ManifestEntry(
                    id=f"{model_id}_v{vi}",
                    class_label=class_label,
                    domain="view",
                    image_path=name,
                    model_id=model_id,
                )
            )
        rendered += 1
    if rendered == 0:
        log.error("all %d obj files failed to render", len(obj_files))
        return EXIT_INPUT
    save_manifest(out_dir / "views.jsonl", entries)
    meta = {
        "seed": args.seed,
        "viewpoints": [
            {"azimuth": v.azimuth, "elevation": v.elevation} for v in (pair.v1, pair.v2)
        ],
    }
    (out_dir / "viewpoints.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(json.dumps({"models": rendered, "manifest": str(out_dir / "views.jsonl")}))
    return EXIT_OK


def _build_run_config(args) -> RunConfig:
    epochs = args.epochs if args.epochs is not None else default_epochs(args.profile)
    cfg = RunConfig(
        profile=args.profile,
        epochs=epochs,
        learning_rate=args.lr,
        lr_decay=args.lr_decay,
        lr_decay_every=args.lr_decay_every,
        batch_size=args.batch,
        kp=args.kp,
        kn=args.kn,
        seed=args.seed,
        identical=args.identical,
        symmetric_cross_term=args.symmetric_cross,
        manifest=Path(args.manifest),
        checkpoint=Path(args.checkpoint),
        save_every=args.save_every,
        resume=Path(args.resume) if args.resume else None,
    )
    cfg.validate()
    return cfg


def cmd_train(args) -> int:
    cfg = _build_run_config(args)
    if not cfg.manifest.exists():
        log.error("manifest not found: %s", cfg.manifest)
        return EXIT_INPUT
    manifest = load_manifest(cfg.manifest)

    initial_model = None
    start_epoch = 0
    if cfg.resume is not None:
        initial_model, start_epoch = load_model(cfg.resume)

    embedder = SiameseEmbedder(
        epochs=cfg.epochs,
        learning_rate=cfg.learning_rate,
        lr_decay=cfg.lr_decay,
        lr_decay_every=cfg.lr_decay_every,
        batch_size=cfg.batch_size,
        kp=cfg.kp,
        kn=cfg.kn,
        identical=cfg.identical,
        symmetric_cross_term=cfg.symmetric_cross_term,
        seed=cfg.seed,
    )

    def on_epoch(epoch, stats, model):
        print(json.dumps({"epoch": epoch, "mean_loss": stats.mean_loss, "pairs": stats.pairs}))
        sys.stdout.flush()
        if cfg.save_every and epoch % cfg.save_every == 0:
            save_model(cfg.checkpoint, model, epoch=epoch)

    try:
        embedder.fit(
            manifest,
            epoch_callback=on_epoch,
            initial_model=initial_model,
            start_epoch=start_epoch,
        )
    except TrainingDivergedError as exc:
        log.error("training diverged: %s", exc)
        return EXIT_DIVERGED
    final_epoch = max(cfg.epochs, start_epoch)
    save_model(cfg.checkpoint, embedder.model_, epoch=final_epoch)
    return EXIT_OK


def cmd_extract(args) -> int:
    ckpt = Path(args.checkpoint)
    manifest_path = Path(args.manifest)
    if not ckpt.exists() or not manifest_path.exists():
        log.error("checkpoint or manifest missing")
        return EXIT_INPUT
    model, _ = load_model(ckpt)
    manifest = load_manifest(manifest_path)
    try:
        index = extract_features(model, manifest, fingerprint=file_fingerprint(ckpt))
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    save_index(args.out, index)
    print(json.dumps({"entries": len(index), "index": str(args.out)}))
    return EXIT_OK


def _fingerprint_mismatch(checkpoint, index) -> bool:
    if index.checkpoint_fingerprint != file_fingerprint(checkpoint):
        log.error("index was built by a different checkpoint (stale index?)")
        return True
    return False


def cmd_retrieve(args) -> int:
    try:
        model, _ = load_model(args.checkpoint)
        index = load_index(args.index)
        if _fingerprint_mismatch(args.checkpoint, index):
            return EXIT_INPUT
        ink = load_image(args.query)
        tensor = preprocess(ink)
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (BlankImageError, ValueError) as exc:
        log.error("bad query: %s", exc)
        return EXIT_BAD_QUERY
    feature = net_forward(model.sketch_net, tensor)
    ranked = ModelGallery(index).rank(feature)
    results = [
        {
            "model_id": mid,
            "distance": dist,
            "view_image_refs": [f"/api/models/{mid}/views/1", f"/api/models/{mid}/views/2"],
        }
        for mid, dist in ranked.hits[: args.k]
    ]
    print(json.dumps({"results": results}))
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        index = load_index(args.index)
        manifest = load_manifest(args.manifest)
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    features = {e.id: e.feature for e in index.entries}
    query_domain = "view" if args.mode == "view" else "sketch"
    queries = [e for e in manifest.entries if e.domain == query_domain]

    if args.mode == "cross":
        gallery = ModelGallery(index)
        model_class = {
            e.model_id: e.class_label for e in index.entries if e.domain == "view"
        }
        classes = model_class
    else:
        gallery = DomainGallery(index, args.mode)
        classes = {e.id: e.class_label for e in index.entries if e.domain == args.mode}

    judged = []
    for q in queries:
        feat = features.get(q.id)
        if feat is None:
            log.warning("query %s not in index; skipped", q.id)
            continue
        if args.mode == "cross":
            ranked = gallery.rank(feat, q.id)
        else:
            ranked = gallery.rank(feat, q.id, exclude_id=q.id)
        judged.append(judge(ranked, classes, q.class_label))
    if not judged:
        log.error("no evaluable queries")
        return EXIT_UNEVALUABLE
    try:
        report = evaluate_all(judged)
    except UnevaluableError as exc:
        log.error("%s", exc)
        return EXIT_UNEVALUABLE
    print(report.to_json())
    print(report.table(), file=sys.stderr)
    if args.per_class:  # debug breakdown, stderr only
        from .metrics import average_precision

        by_class: dict[str, list] = {}
        for jl in judged:
            if jl.relevant_total >= 1:
                by_class.setdefault(jl.query_class, []).append(average_precision(jl))
        for cls in sorted(by_class):
            values = by_class[cls]
            print(f"AP[{cls}] = {sum(values) / len(values):.3f} "
                  f"({len(values)} queries)", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    data_dir = os.environ.get("SBSR_DATA_DIR")
    checkpoint = args.checkpoint or (data_dir and os.path.join(data_dir, "checkpoint.sbsr"))
    index_path = args.index or (data_dir and os.path.join(data_dir, "index.sbfi"))
    manifest_path = args.manifest or (data_dir and os.path.join(data_dir, "eval.jsonl"))
    if not (checkpoint and index_path and manifest_path):
        log.error("--checkpoint, --index and --manifest (or SBSR_DATA_DIR) are required")
        return EXIT_INPUT
    try:
        model, _ = load_model(checkpoint)
        index = load_index(index_path)
        if _fingerprint_mismatch(checkpoint, index):
            return EXIT_INPUT
        manifest = load_manifest(manifest_path)
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    port = args.port or int(os.environ.get("SBSR_PORT", "8080"))
    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((args.host, port))
        probe.close()
    except OSError as exc:
        log.error("cannot bind %s:%d: %s", args.host, port, exc)
        return EXIT_BIND
    app = create_app(model, index, manifest)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbsr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("toy", help="generate the procedural 5-class toy dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--sketches-per-class", type=int, default=40)
    p.set_defaults(fn=cmd_toy)

    p = sub.add_parser("render", help="render two line-drawing views per OBJ model")
    p.add_argument("--obj-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("train", help="train the two embedding networks")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--profile", choices=sorted({"psb", "shrec13"}), default="shrec13")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--lr-decay", type=float, default=0.9)
    p.add_argument("--lr-decay-every", type=int, default=5)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--kp", type=int, default=2)
    p.add_argument("--kn", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--identical", action="store_true")
    p.add_argument("--symmetric-cross", action="store_true")
    p.add_argument("--save-every", type=int, default=0)
    p.add_argument("--resume", default=None)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("extract", help="embed a manifest into a feature index")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("retrieve", help="rank models for one query image")
    p.add_argument("--index", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=15)
    p.set_defaults(fn=cmd_retrieve)

    p = sub.add_parser("eval", help="score retrieval quality over a query manifest")
    p.add_argument("--index", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", choices=["cross", "sketch", "view"], default="cross")
    p.add_argument("--per-class", action="store_true", help="debug AP breakdown on stderr")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP retrieval service")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--index", default=None)
    p.add_argument("--manifest", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
