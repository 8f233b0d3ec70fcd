"""Read-only HTTP service: query-by-sketch over an immutable model + index.

Endpoints (JSON, CORS open):
    GET  /api/health                      liveness
    POST /api/query                       {"image_png_base64", "k"} -> ranked models
    GET  /api/models/{id}/views/{1|2}     rendered view as PNG
    GET  /api/embedding                   2D PCA of the indexed features
"""

from __future__ import annotations

import base64
import time

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .data.images import BlankImageError, ImageFormatError, ink_to_png_bytes, load_image, png_bytes_to_ink
from .data.manifest import DatasetManifest
from .data.preprocess import preprocess
from .nn import net_forward
from .retrieval import FeatureIndex, ModelGallery, pca_2d
from .siamese import SiameseModel

MAX_K = 100


class QueryRequest(BaseModel):
    image_png_base64: str
    k: int = 15


def create_app(model: SiameseModel, index: FeatureIndex, manifest: DatasetManifest) -> FastAPI:
    app = FastAPI(title="sketch-shape retrieval service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    gallery = ModelGallery(index)
    entry_meta = {e.id: e for e in index.entries}
    embedding = [
        {
            "id": eid,
            "domain": entry_meta[eid].domain,
            "class": entry_meta[eid].class_label,
            "x": x,
            "y": y,
        }
        for eid, x, y in pca_2d(index)
    ]
    view_paths: dict[str, list] = {}
    for entry in sorted(manifest.views(), key=lambda e: e.id):
        view_paths.setdefault(entry.model_id, []).append(manifest.resolve_path(entry))

    @app.exception_handler(RequestValidationError)
    async def _bad_request(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/query")
    def query(req: QueryRequest):
        started = time.perf_counter()
        try:
            png = base64.b64decode(req.image_png_base64, validate=True)
            ink = png_bytes_to_ink(png)
            tensor = preprocess(ink)
        except (ValueError, ImageFormatError, BlankImageError) as exc:
            raise HTTPException(status_code=400, detail=f"bad query image: {exc}")
        feature = net_forward(model.sketch_net, tensor)
        k = max(1, min(req.k, MAX_K))
        ranked = gallery.rank(feature)
        results = [
            {
                "model_id": model_id,
                "distance": distance,
                "view_image_refs": [
                    f"/api/models/{model_id}/views/1",
                    f"/api/models/{model_id}/views/2",
                ],
            }
            for model_id, distance in ranked.hits[:k]
        ]
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        return {"results": results, "elapsed_ms": elapsed_ms}

    @app.get("/api/models/{model_id}/views/{view_no}")
    def model_view(model_id: str, view_no: int):
        paths = view_paths.get(model_id)
        if paths is None or view_no not in (1, 2) or len(paths) < view_no:
            raise HTTPException(status_code=404, detail="unknown model or view")
        ink = load_image(paths[view_no - 1])
        return Response(content=ink_to_png_bytes(ink), media_type="image/png")

    @app.get("/api/embedding")
    def embedding_points():
        return embedding

    return app
